#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mixmemb/distributions.hpp"
#include "mixmemb/errors.hpp"
#include "mixmemb/types.hpp"

namespace mixmemb {

/// Pairwise sum over a fixed index tree, so the result does not depend on how
/// per-observation terms were produced.
inline double tree_sum(const VectorXd& v, Index lo, Index hi) {
  if (hi - lo <= 8) {
    double s = 0.0;
    for (Index i = lo; i < hi; ++i) s += v[i];
    return s;
  }
  const Index mid = lo + (hi - lo) / 2;
  return tree_sum(v, lo, mid) + tree_sum(v, mid, hi);
}
inline double tree_sum(const VectorXd& v) { return tree_sum(v, 0, v.size()); }

inline void check_compatible(const Dataset& ds, const ModelState& st) {
  st.check_shapes(ds.N(), ds.P());
  if (!(st.sigma2 > 0.0)) throw DomainError("sigma2 must be positive");
}

/// Feature-level loadings for observation i: row k is nu_k + sum_m chi_im phi_km.
inline MatrixXd feature_vectors(const ModelState& st, Index i) {
  MatrixXd a = st.nu;
  for (Index m = 0; m < st.M(); ++m) a.noalias() += st.chi(i, m) * st.phi[m];
  return a;
}

/// N x P matrix of conditional means sum_k Z_ik (nu_k + sum_m chi_im phi_km).
inline MatrixXd conditional_mean(const ModelState& st) {
  MatrixXd mean = st.z * st.nu;
  for (Index m = 0; m < st.M(); ++m) {
    const MatrixXd zc = st.z.array().colwise() * st.chi.col(m).array();
    mean.noalias() += zc * st.phi[m];
  }
  return mean;
}

inline MatrixXd residuals(const Dataset& ds, const ModelState& st) {
  return ds.y() - conditional_mean(st);
}

/// Per-observation log N(y_i | conditional mean, sigma2 I).
inline VectorXd loglik_conditional_terms(const Dataset& ds, const ModelState& st) {
  check_compatible(ds, st);
  const MatrixXd r = residuals(ds, st);
  const double c = -0.5 * static_cast<double>(ds.P()) * (dist::kLog2Pi + std::log(st.sigma2));
  VectorXd out(ds.N());
  for (Index i = 0; i < ds.N(); ++i) out[i] = c - 0.5 * r.row(i).squaredNorm() / st.sigma2;
  return out;
}

inline double loglik_conditional(const Dataset& ds, const ModelState& st) {
  return tree_sum(loglik_conditional_terms(ds, st));
}

/// P x P covariance of observation i with chi integrated out:
/// sum_m v_im v_im' + sigma2 I where v_im = sum_k Z_ik phi_km.
inline MatrixXd marginal_covariance(const ModelState& st, Index i) {
  const Index P = st.P();
  MatrixXd v(P, st.M());
  for (Index m = 0; m < st.M(); ++m) v.col(m) = st.phi[m].transpose() * st.z.row(i).transpose();
  MatrixXd cov = v * v.transpose();
  cov.diagonal().array() += st.sigma2;
  return cov;
}

/// Gaussian log density at x given mean and covariance, with one jitter retry.
inline double log_mvn(const VectorXd& x, const VectorXd& mean, MatrixXd cov, Index obs_index) {
  const Index P = x.size();
  if (!cov.allFinite() || !x.allFinite() || !mean.allFinite())
    throw NumericalError("non-finite marginal covariance or mean at observation " +
                             std::to_string(obs_index + 1),
                         static_cast<std::size_t>(obs_index));
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    cov.diagonal().array() += 1e-10 * cov.trace() / static_cast<double>(P);
    llt.compute(cov);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("marginal covariance not positive definite at observation " +
                               std::to_string(obs_index + 1),
                           static_cast<std::size_t>(obs_index));
    }
  }
  const VectorXd sol = llt.matrixL().solve(x - mean);
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(P) * dist::kLog2Pi + logdet + sol.squaredNorm());
}

/// Per-observation log density with chi integrated out.
inline VectorXd loglik_marginal_terms(const Dataset& ds, const ModelState& st) {
  check_compatible(ds, st);
  const MatrixXd mean = st.z * st.nu;
  VectorXd out(ds.N());
  for (Index i = 0; i < ds.N(); ++i) {
    out[i] = log_mvn(ds.y().row(i).transpose(), mean.row(i).transpose(),
                     marginal_covariance(st, i), i);
  }
  return out;
}

inline double loglik_marginal(const Dataset& ds, const ModelState& st) {
  return tree_sum(loglik_marginal_terms(ds, st));
}

/// Covariance and cross-covariance blocks implied by phi, together with the
/// spectrum of the stacked KP x KP matrix.
struct CovarianceSummary {
  Index K = 0, P = 0;
  MatrixXd stacked;       // KP x KP; block (k, k') is cross(k, k')
  VectorXd eigenvalues;   // nonincreasing
  MatrixXd eigenvectors;  // orthonormal columns matching eigenvalues

  MatrixXd cross(Index k, Index kp) const { return stacked.block(k * P, kp * P, P, P); }

  /// sum_k sum_k' z_k z_k' cross(k, k') + sigma2 I for a membership row z.
  MatrixXd marginal_of(const VectorXd& z, double sigma2) const {
    MatrixXd out = MatrixXd::Zero(P, P);
    for (Index k = 0; k < K; ++k)
      for (Index kp = 0; kp < K; ++kp) out += z[k] * z[kp] * cross(k, kp);
    out.diagonal().array() += sigma2;
    return out;
  }
};

/// Stacked vector Phi_m = (phi_1m; ...; phi_Km) of length KP.
inline VectorXd stacked_component(const ModelState& st, Index m) {
  const Index K = st.K(), P = st.P();
  VectorXd v(K * P);
  for (Index k = 0; k < K; ++k) v.segment(k * P, P) = st.phi[m].row(k).transpose();
  return v;
}

inline CovarianceSummary reconstruct_covariance(const ModelState& st) {
  CovarianceSummary out;
  out.K = st.K();
  out.P = st.P();
  const Index KP = out.K * out.P;
  MatrixXd phi_stack(KP, st.M());
  for (Index m = 0; m < st.M(); ++m) phi_stack.col(m) = stacked_component(st, m);
  out.stacked = phi_stack * phi_stack.transpose();
  out.stacked = 0.5 * (out.stacked + out.stacked.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(out.stacked);
  // Eigen returns ascending order.
  out.eigenvalues = es.eigenvalues().reverse();
  out.eigenvectors = es.eigenvectors().rowwise().reverse();
  return out;
}

/// Fully normalised log prior density. `in_support` is false (and the value
/// -inf) when any entry lies outside its prior support. Latent scores chi are
/// not included; see log_chi_prior.
struct LogPrior {
  double value = 0.0;
  bool in_support = true;
};

inline LogPrior log_prior(const ModelState& st, const PriorConfig& cfg) {
  const Index K = st.K(), P = st.P(), M = st.M(), N = st.N();
  const auto& sh = st.shrink;
  LogPrior out;
  auto add = [&](double v) {
    if (!std::isfinite(v)) out.in_support = false;
    out.value += v;
  };
  auto positive = [&](double v) {
    if (!(v > 0.0) || !std::isfinite(v)) out.in_support = false;
  };

  for (Index m = 0; m < M; ++m) {
    for (Index k = 0; k < K; ++k) {
      for (Index p = 0; p < P; ++p) {
        const double g = sh.gamma[m](k, p);
        positive(g);
        positive(sh.tau_tilde(k, m));
        if (!out.in_support) break;
        add(dist::log_normal(st.phi[m](k, p), 0.0, 1.0 / (g * sh.tau_tilde(k, m))));
        add(dist::log_gamma(g, 0.5 * cfg.nu_gamma, 0.5 * cfg.nu_gamma));
      }
    }
  }
  for (Index k = 0; k < K && out.in_support; ++k) {
    add(dist::log_gamma(sh.delta(k, 0), sh.a1[k], 1.0));
    for (Index m = 1; m < M; ++m) add(dist::log_gamma(sh.delta(k, m), sh.a2[k], 1.0));
    add(dist::log_gamma(sh.a1[k], cfg.alpha1, cfg.beta1));
    add(dist::log_gamma(sh.a2[k], cfg.alpha2, cfg.beta2));
    positive(sh.tau[k]);
    if (!out.in_support) break;
    for (Index p = 0; p < P; ++p) add(dist::log_normal(st.nu(k, p), 0.0, sh.tau[k]));
    add(dist::log_inv_gamma(sh.tau[k], cfg.alpha, cfg.beta));
  }
  add(dist::log_inv_gamma(st.sigma2, cfg.alpha0, cfg.beta0));

  if ((st.pi.array() <= 0.0).any() || !(st.alpha3 > 0.0)) out.in_support = false;
  if (out.in_support) {
    const VectorXd conc = st.alpha3 * st.pi;
    for (Index i = 0; i < N; ++i) add(dist::log_dirichlet(st.z.row(i), conc));
    add(dist::log_dirichlet(st.pi, cfg.c_for(K)));
    add(dist::log_exponential(st.alpha3, cfg.b));
  }
  if (!out.in_support) out.value = dist::kNegInf;
  return out;
}

/// sum_im log N(chi_im | 0, 1).
inline double log_chi_prior(const ModelState& st) {
  return -0.5 * (static_cast<double>(st.chi.size()) * dist::kLog2Pi + st.chi.squaredNorm());
}

/// Draw every parameter from its prior.
template <typename Rng>
ModelState draw_prior_state(Index N, Index P, ModelDims dims, const PriorConfig& cfg, Rng& rng) {
  const Index K = dims.K, M = dims.M;
  ModelState st = ModelState::zeros(N, P, dims);
  auto& sh = st.shrink;
  for (Index k = 0; k < K; ++k) {
    sh.a1[k] = dist::gamma(rng, cfg.alpha1, cfg.beta1);
    sh.a2[k] = dist::gamma(rng, cfg.alpha2, cfg.beta2);
    sh.delta(k, 0) = dist::gamma(rng, sh.a1[k], 1.0);
    for (Index m = 1; m < M; ++m) sh.delta(k, m) = dist::gamma(rng, sh.a2[k], 1.0);
    sh.tau[k] = dist::inv_gamma(rng, cfg.alpha, cfg.beta);
  }
  sh.refresh_tau_tilde();
  for (Index m = 0; m < M; ++m) {
    for (Index k = 0; k < K; ++k) {
      for (Index p = 0; p < P; ++p) {
        const double g = dist::gamma(rng, 0.5 * cfg.nu_gamma, 0.5 * cfg.nu_gamma);
        sh.gamma[m](k, p) = g;
        st.phi[m](k, p) = dist::normal(rng, 0.0, 1.0 / std::sqrt(g * sh.tau_tilde(k, m)));
      }
    }
  }
  for (Index k = 0; k < K; ++k)
    for (Index p = 0; p < P; ++p) st.nu(k, p) = dist::normal(rng, 0.0, std::sqrt(sh.tau[k]));
  for (Index i = 0; i < N; ++i)
    for (Index m = 0; m < M; ++m) st.chi(i, m) = dist::normal(rng);
  st.sigma2 = dist::inv_gamma(rng, cfg.alpha0, cfg.beta0);
  st.pi = dist::dirichlet(rng, cfg.c_for(K));
  st.alpha3 = dist::gamma(rng, 1.0, cfg.b);
  const VectorXd conc = st.alpha3 * st.pi;
  for (Index i = 0; i < N; ++i) st.z.row(i) = dist::dirichlet(rng, conc).transpose();
  return st;
}

/// y_i ~ N(conditional mean, sigma2 I).
template <typename Rng>
MatrixXd draw_observations(const ModelState& st, Rng& rng) {
  MatrixXd y = conditional_mean(st);
  const double sd = std::sqrt(st.sigma2);
  for (Index i = 0; i < y.rows(); ++i)
    for (Index p = 0; p < y.cols(); ++p) y(i, p) += dist::normal(rng, 0.0, sd);
  return y;
}

}  // namespace mixmemb
