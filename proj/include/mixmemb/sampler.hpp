#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mixmemb/distributions.hpp"
#include "mixmemb/errors.hpp"
#include "mixmemb/model.hpp"
#include "mixmemb/rng.hpp"
#include "mixmemb/types.hpp"

namespace mixmemb {

// ---------------------------------------------------------------------------
// Sweep plan and bookkeeping
// ---------------------------------------------------------------------------

enum class UpdateBlock { nu, phi, chi, sigma2, tau, delta, gamma, a1, a2, z, pi, alpha3 };
inline constexpr std::size_t kNumBlocks = 12;

inline const char* block_name(UpdateBlock b) {
  static constexpr const char* names[] = {"nu", "phi",   "chi", "sigma2", "tau", "delta",
                                          "gamma", "a1", "a2",  "z",      "pi",  "alpha3"};
  return names[static_cast<std::size_t>(b)];
}

inline Block stream_of(UpdateBlock b) {
  switch (b) {
    case UpdateBlock::nu: return Block::nu;
    case UpdateBlock::phi: return Block::phi;
    case UpdateBlock::chi: return Block::chi;
    case UpdateBlock::sigma2: return Block::sigma2;
    case UpdateBlock::tau: return Block::tau;
    case UpdateBlock::delta: return Block::delta;
    case UpdateBlock::gamma: return Block::gamma;
    case UpdateBlock::a1: return Block::a1;
    case UpdateBlock::a2: return Block::a2;
    case UpdateBlock::z: return Block::z;
    case UpdateBlock::pi: return Block::pi;
    case UpdateBlock::alpha3: return Block::alpha3;
  }
  return Block::nu;
}

struct MhCounter {
  std::uint64_t proposed = 0;
  std::uint64_t accepted = 0;
  std::uint64_t degenerate = 0;  // auto-rejected proposals

  double rate() const {
    return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
  }
};

using AcceptanceStats = std::array<MhCounter, kNumBlocks>;

struct SweepPlan {
  std::vector<UpdateBlock> order = default_order();
  std::uint64_t seed = 0;
  AcceptanceStats stats{};

  static std::vector<UpdateBlock> default_order() {
    using B = UpdateBlock;
    return {B::nu, B::phi, B::chi, B::sigma2, B::tau, B::delta,
            B::gamma, B::a1, B::a2, B::z, B::pi, B::alpha3};
  }

  void validate() const {
    std::array<int, kNumBlocks> seen{};
    for (auto b : order) {
      if (++seen[static_cast<std::size_t>(b)] > 1) {
        throw ConfigError(std::string("block listed twice in sweep plan: ") + block_name(b));
      }
    }
  }

  MhCounter& counter(UpdateBlock b) { return stats[static_cast<std::size_t>(b)]; }
};

/// How tempering enters the nu update. `likelihood_only` scales only the data
/// precision by beta (prior untempered); `prior_scaled` scales the prior
/// precision 1/tau by beta and leaves the data precision unscaled.
enum class NuTempering { likelihood_only, prior_scaled };

struct SamplerOptions {
  bool orthogonal_phi = false;
  NuTempering nu_tempering = NuTempering::likelihood_only;
};

// ---------------------------------------------------------------------------
// Conditional distributions (pure)
// ---------------------------------------------------------------------------

struct DiagNormal {
  VectorXd mean;
  VectorXd var;
};

struct ScalarNormal {
  double mean = 0.0;
  double var = 1.0;
};

/// Gamma(shape, rate) or IG(shape, scale), depending on the caller.
struct ShapeRate {
  double shape = 1.0;
  double rate = 1.0;
};

/// phi_km | rest. `resid` must equal y - conditional_mean(st).
inline DiagNormal phi_conditional(const ModelState& st, const MatrixXd& resid, Index k, Index m,
                                  double beta) {
  const Index P = st.P();
  const double w = beta / st.sigma2;
  double s = 0.0;
  VectorXd lin = VectorXd::Zero(P);
  for (Index i = 0; i < st.N(); ++i) {
    const double a = st.z(i, k) * st.chi(i, m);
    if (a == 0.0) continue;
    s += a * a;
    lin.noalias() += a * resid.row(i).transpose();
  }
  // Add back phi_km's own contribution to the residual.
  lin += s * st.phi[m].row(k).transpose();
  DiagNormal out;
  out.var.resize(P);
  out.mean.resize(P);
  for (Index p = 0; p < P; ++p) {
    const double prec = w * s + st.shrink.tau_tilde(k, m) * st.shrink.gamma[m](k, p);
    out.var[p] = 1.0 / prec;
    out.mean[p] = w * lin[p] / prec;
  }
  return out;
}

/// nu_k | rest: N(mean, var * I).
struct NuConditional {
  VectorXd mean;
  double var = 1.0;
};

inline NuConditional nu_conditional(const ModelState& st, const MatrixXd& resid, Index k,
                                    double beta,
                                    NuTempering variant = NuTempering::likelihood_only) {
  const double zz = st.z.col(k).squaredNorm();
  VectorXd lin = resid.transpose() * st.z.col(k) + zz * st.nu.row(k).transpose();
  const double tau = st.shrink.tau[k];
  const double prec = variant == NuTempering::likelihood_only ? 1.0 / tau + beta * zz / st.sigma2
                                                              : beta / tau + zz / st.sigma2;
  NuConditional out;
  out.var = 1.0 / prec;
  out.mean = (beta / st.sigma2) * lin / prec;
  return out;
}

/// chi_im | rest.
inline ScalarNormal chi_conditional(const ModelState& st, const MatrixXd& resid, Index i, Index m,
                                    double beta) {
  const VectorXd v = st.phi[m].transpose() * st.z.row(i).transpose();
  const double w = beta / st.sigma2;
  const double vv = v.squaredNorm();
  const double lin = w * (v.dot(resid.row(i).transpose()) + st.chi(i, m) * vv);
  const double prec = 1.0 + w * vv;
  return {lin / prec, 1.0 / prec};
}

/// sigma2 | rest ~ IG(shape, rate-as-scale).
inline ShapeRate sigma2_conditional(const MatrixXd& resid, const PriorConfig& cfg, double beta) {
  const double n = static_cast<double>(resid.size());
  return {cfg.alpha0 + 0.5 * beta * n, cfg.beta0 + 0.5 * beta * resid.squaredNorm()};
}

/// tau_k | rest ~ IG(shape, scale).
inline ShapeRate tau_conditional(const ModelState& st, const PriorConfig& cfg, Index k) {
  return {cfg.alpha + 0.5 * static_cast<double>(st.P()),
          cfg.beta + 0.5 * st.nu.row(k).squaredNorm()};
}

/// delta_hk | rest ~ Gamma(shape, rate); h is 0-based.
inline ShapeRate delta_conditional(const ModelState& st, Index k, Index h) {
  const Index P = st.P(), M = st.M();
  const auto& sh = st.shrink;
  double rate_sum = 0.0;
  double prod_excl = 1.0;  // prod_{n <= m, n != h} delta_nk
  for (Index n = 0; n < h; ++n) prod_excl *= sh.delta(k, n);
  for (Index m = h; m < M; ++m) {
    if (m > h) prod_excl *= sh.delta(k, m);
    double q = 0.0;
    for (Index p = 0; p < P; ++p) q += sh.gamma[m](k, p) * st.phi[m](k, p) * st.phi[m](k, p);
    rate_sum += prod_excl * q;
  }
  const double base = h == 0 ? sh.a1[k] : sh.a2[k];
  return {base + 0.5 * static_cast<double>(P * (M - h)), 1.0 + 0.5 * rate_sum};
}

/// gamma_kpm | rest ~ Gamma(shape, rate).
inline ShapeRate gamma_conditional(const ModelState& st, const PriorConfig& cfg, Index k, Index p,
                                   Index m) {
  const double f = st.phi[m](k, p);
  return {0.5 * (cfg.nu_gamma + 1.0), 0.5 * (f * f * st.shrink.tau_tilde(k, m) + cfg.nu_gamma)};
}

// ---------------------------------------------------------------------------
// Metropolis-Hastings targets and log acceptance ratios
// ---------------------------------------------------------------------------

/// Unnormalised log conditional of a_1k.
inline double a1_log_target(const ModelState& st, const PriorConfig& cfg, Index k, double a) {
  if (!(a > 0.0)) return dist::kNegInf;
  return (a - 1.0) * std::log(st.shrink.delta(k, 0)) - std::lgamma(a) +
         (cfg.alpha1 - 1.0) * std::log(a) - cfg.beta1 * a;
}

/// Unnormalised log conditional of a_2k.
inline double a2_log_target(const ModelState& st, const PriorConfig& cfg, Index k, double a) {
  if (!(a > 0.0)) return dist::kNegInf;
  const Index M = st.M();
  double logd = 0.0;
  for (Index h = 1; h < M; ++h) logd += std::log(st.shrink.delta(k, h));
  return -static_cast<double>(M - 1) * std::lgamma(a) + (a - 1.0) * logd +
         (cfg.alpha2 - 1.0) * std::log(a) - cfg.beta2 * a;
}

/// log [ target(x') q(x | x') / (target(x) q(x' | x)) ] for a positive scalar
/// under a truncated-normal random walk with variance `var`.
template <typename Target>
double truncnorm_mh_log_ratio(Target&& target, double current, double proposed, double var) {
  return target(proposed) - target(current) +
         dist::log_truncnorm_positive(current, proposed, var) -
         dist::log_truncnorm_positive(proposed, current, var);
}

inline double a1_log_ratio(const ModelState& st, const PriorConfig& cfg, Index k,
                           double proposed) {
  return truncnorm_mh_log_ratio([&](double a) { return a1_log_target(st, cfg, k, a); },
                                st.shrink.a1[k], proposed, cfg.eps1 / cfg.beta1);
}

inline double a2_log_ratio(const ModelState& st, const PriorConfig& cfg, Index k,
                           double proposed) {
  return truncnorm_mh_log_ratio([&](double a) { return a2_log_target(st, cfg, k, a); },
                                st.shrink.a2[k], proposed, cfg.eps2 / cfg.beta2);
}

/// sum_i log Dir(z_i | conc), using precomputed column sums of log z.
inline double z_dirichlet_sum(const VectorXd& log_z_colsum, Index N, const VectorXd& conc) {
  return static_cast<double>(N) * dist::log_inv_beta_fn(conc) +
         (conc.array() - 1.0).matrix().dot(log_z_colsum);
}

inline VectorXd log_z_column_sums(const MatrixXd& z) {
  VectorXd out = VectorXd::Zero(z.cols());
  for (Index i = 0; i < z.rows(); ++i)
    for (Index k = 0; k < z.cols(); ++k)
      out[k] += std::log(std::clamp(z(i, k), dist::kSimplexFloor, 1.0 - dist::kSimplexFloor));
  return out;
}

inline double pi_log_target(const ModelState& st, const PriorConfig& cfg, const VectorXd& pi,
                            const VectorXd& log_z_colsum) {
  return dist::log_dirichlet(pi, cfg.c_for(st.K())) +
         z_dirichlet_sum(log_z_colsum, st.N(), st.alpha3 * pi);
}

inline double pi_log_ratio(const ModelState& st, const PriorConfig& cfg, const VectorXd& proposed) {
  const VectorXd lz = log_z_column_sums(st.z);
  return pi_log_target(st, cfg, proposed, lz) - pi_log_target(st, cfg, st.pi, lz) +
         dist::log_dirichlet(st.pi, cfg.a_pi * proposed) -
         dist::log_dirichlet(proposed, cfg.a_pi * st.pi);
}

inline double alpha3_log_target(const ModelState& st, const PriorConfig& cfg, double a,
                                const VectorXd& log_z_colsum) {
  if (!(a > 0.0)) return dist::kNegInf;
  return -cfg.b * a + z_dirichlet_sum(log_z_colsum, st.N(), a * st.pi);
}

inline double alpha3_log_ratio(const ModelState& st, const PriorConfig& cfg, double proposed) {
  const VectorXd lz = log_z_column_sums(st.z);
  return truncnorm_mh_log_ratio(
      [&](double a) { return alpha3_log_target(st, cfg, a, lz); }, st.alpha3, proposed,
      cfg.sigma2_alpha3);
}

/// Unnormalised log conditional of z_i at membership row `zi` (tempered by beta).
inline double z_log_target(const Dataset& ds, const ModelState& st, const MatrixXd& features,
                           Index i, const VectorXd& zi, double beta) {
  const VectorXd r = ds.y().row(i).transpose() - features.transpose() * zi;
  return dist::log_dirichlet(zi, st.alpha3 * st.pi) - 0.5 * beta * r.squaredNorm() / st.sigma2;
}

inline double z_log_ratio(const Dataset& ds, const ModelState& st, const PriorConfig& cfg, Index i,
                          const VectorXd& proposed, double beta) {
  const MatrixXd a = feature_vectors(st, i);
  const VectorXd cur = st.z.row(i).transpose();
  return z_log_target(ds, st, a, i, proposed, beta) - z_log_target(ds, st, a, i, cur, beta) +
         dist::log_dirichlet(cur, cfg.a_z * proposed) -
         dist::log_dirichlet(proposed, cfg.a_z * cur);
}

// ---------------------------------------------------------------------------
// Kernels. Variants taking `resid` keep it equal to y - conditional_mean(st).
// ---------------------------------------------------------------------------

template <typename Rng>
bool mh_accept(Rng& rng, double log_ratio) {
  if (log_ratio >= 0.0) return true;
  return std::log(dist::uniform(rng)) < log_ratio;
}

template <typename Rng>
void gibbs_phi(ModelState& st, MatrixXd& resid, Index k, Index m, double beta, Rng& rng) {
  const DiagNormal c = phi_conditional(st, resid, k, m, beta);
  VectorXd draw(st.P());
  for (Index p = 0; p < st.P(); ++p) draw[p] = dist::normal(rng, c.mean[p], std::sqrt(c.var[p]));
  const Eigen::RowVectorXd diff = draw.transpose() - st.phi[m].row(k);
  st.phi[m].row(k) = draw.transpose();
  for (Index i = 0; i < st.N(); ++i) {
    const double a = st.z(i, k) * st.chi(i, m);
    if (a != 0.0) resid.row(i).noalias() -= a * diff;
  }
}

template <typename Rng>
void gibbs_phi(const Dataset& ds, ModelState& st, Index k, Index m, double beta, Rng& rng) {
  check_compatible(ds, st);
  MatrixXd resid = residuals(ds, st);
  gibbs_phi(st, resid, k, m, beta, rng);
}

/// phi_km drawn subject to Phi_m' Phi_j = 0 for every other component j whose
/// block phi_kj is nonzero. An unconstrained draw is projected onto the
/// constraint set, which yields an exact draw from the constrained conditional.
template <typename Rng>
void gibbs_phi_orthogonal(ModelState& st, MatrixXd& resid, Index k, Index m, double beta,
                          Rng& rng) {
  const Index K = st.K(), P = st.P(), M = st.M();
  const DiagNormal c = phi_conditional(st, resid, k, m, beta);
  VectorXd x(P);
  for (Index p = 0; p < P; ++p) x[p] = dist::normal(rng, c.mean[p], std::sqrt(c.var[p]));

  std::vector<Index> active;
  for (Index j = 0; j < M; ++j)
    if (j != m && st.phi[j].row(k).squaredNorm() > 0.0) active.push_back(j);

  if (!active.empty()) {
    const Index J = static_cast<Index>(active.size());
    MatrixXd L(P, J);
    VectorXd rhs(J);  // c_j = sum_{k' != k} phi_k'm . phi_k'j
    for (Index a = 0; a < J; ++a) {
      const Index j = active[static_cast<std::size_t>(a)];
      L.col(a) = st.phi[j].row(k).transpose();
      double s = 0.0;
      for (Index kk = 0; kk < K; ++kk)
        if (kk != k) s += st.phi[m].row(kk).dot(st.phi[j].row(kk));
      rhs[a] = s;
    }
    const MatrixXd cov_L = c.var.asDiagonal() * L;  // M L
    const MatrixXd gram = L.transpose() * cov_L;    // L' M L
    Eigen::FullPivLU<MatrixXd> lu(gram);
    lu.setThreshold(1e-12);
    if (lu.rank() < J) {
      throw NumericalError("orthogonality constraints for phi(feature " + std::to_string(k + 1) +
                               ", component " + std::to_string(m + 1) + ") are rank deficient",
                           static_cast<std::size_t>(m));
    }
    x -= cov_L * lu.solve(L.transpose() * x + rhs);
  }

  const Eigen::RowVectorXd diff = x.transpose() - st.phi[m].row(k);
  st.phi[m].row(k) = x.transpose();
  for (Index i = 0; i < st.N(); ++i) {
    const double a = st.z(i, k) * st.chi(i, m);
    if (a != 0.0) resid.row(i).noalias() -= a * diff;
  }
}

template <typename Rng>
void gibbs_phi_orthogonal(const Dataset& ds, ModelState& st, Index k, Index m, double beta,
                          Rng& rng) {
  check_compatible(ds, st);
  MatrixXd resid = residuals(ds, st);
  gibbs_phi_orthogonal(st, resid, k, m, beta, rng);
}

/// Updates delta(k, .) in sequence and refreshes tau_tilde(k, .).
template <typename Rng>
void gibbs_delta(ModelState& st, Index k, Rng& rng) {
  for (Index h = 0; h < st.M(); ++h) {
    const ShapeRate c = delta_conditional(st, k, h);
    st.shrink.delta(k, h) = dist::gamma(rng, c.shape, c.rate);
    st.shrink.refresh_tau_tilde(k);
  }
}

template <typename Rng>
void gibbs_gamma(ModelState& st, const PriorConfig& cfg, Index k, Rng& rng) {
  for (Index m = 0; m < st.M(); ++m) {
    for (Index p = 0; p < st.P(); ++p) {
      const ShapeRate c = gamma_conditional(st, cfg, k, p, m);
      st.shrink.gamma[m](k, p) = dist::gamma(rng, c.shape, c.rate);
    }
  }
}

template <typename Rng>
bool mh_a1(ModelState& st, const PriorConfig& cfg, Index k, Rng& rng) {
  const double sd = std::sqrt(cfg.eps1 / cfg.beta1);
  const double prop = dist::truncnorm_positive(rng, st.shrink.a1[k], sd);
  if (mh_accept(rng, a1_log_ratio(st, cfg, k, prop))) {
    st.shrink.a1[k] = prop;
    return true;
  }
  return false;
}

template <typename Rng>
bool mh_a2(ModelState& st, const PriorConfig& cfg, Index k, Rng& rng) {
  const double sd = std::sqrt(cfg.eps2 / cfg.beta2);
  const double prop = dist::truncnorm_positive(rng, st.shrink.a2[k], sd);
  if (mh_accept(rng, a2_log_ratio(st, cfg, k, prop))) {
    st.shrink.a2[k] = prop;
    return true;
  }
  return false;
}

enum class MhOutcome { accepted, rejected, degenerate };

template <typename Rng>
MhOutcome mh_z(const Dataset& ds, ModelState& st, MatrixXd& resid, const PriorConfig& cfg,
               Index i, double beta, Rng& rng) {
  const VectorXd cur = st.z.row(i).transpose();
  const VectorXd prop = dist::dirichlet(rng, cfg.a_z * cur);
  if (!dist::interior(prop)) return MhOutcome::degenerate;
  const MatrixXd a = feature_vectors(st, i);
  const double lr = z_log_target(ds, st, a, i, prop, beta) - z_log_target(ds, st, a, i, cur, beta) +
                    dist::log_dirichlet(cur, cfg.a_z * prop) -
                    dist::log_dirichlet(prop, cfg.a_z * cur);
  if (!mh_accept(rng, lr)) return MhOutcome::rejected;
  st.z.row(i) = prop.transpose();
  resid.row(i) = ds.y().row(i) - prop.transpose() * a;
  return MhOutcome::accepted;
}

template <typename Rng>
MhOutcome mh_z(const Dataset& ds, ModelState& st, const PriorConfig& cfg, Index i, double beta,
               Rng& rng) {
  check_compatible(ds, st);
  MatrixXd resid = residuals(ds, st);
  return mh_z(ds, st, resid, cfg, i, beta, rng);
}

template <typename Rng>
MhOutcome mh_pi(ModelState& st, const PriorConfig& cfg, Rng& rng) {
  const VectorXd prop = dist::dirichlet(rng, cfg.a_pi * st.pi);
  if (!dist::interior(prop)) return MhOutcome::degenerate;
  if (!mh_accept(rng, pi_log_ratio(st, cfg, prop))) return MhOutcome::rejected;
  st.pi = prop;
  return MhOutcome::accepted;
}

template <typename Rng>
bool mh_alpha3(ModelState& st, const PriorConfig& cfg, Rng& rng) {
  const double prop = dist::truncnorm_positive(rng, st.alpha3, std::sqrt(cfg.sigma2_alpha3));
  if (mh_accept(rng, alpha3_log_ratio(st, cfg, prop))) {
    st.alpha3 = prop;
    return true;
  }
  return false;
}

template <typename Rng>
void gibbs_nu(ModelState& st, MatrixXd& resid, Index k, double beta, NuTempering variant,
              Rng& rng) {
  const NuConditional c = nu_conditional(st, resid, k, beta, variant);
  const double sd = std::sqrt(c.var);
  Eigen::RowVectorXd draw(st.P());
  for (Index p = 0; p < st.P(); ++p) draw[p] = dist::normal(rng, c.mean[p], sd);
  const Eigen::RowVectorXd diff = draw - st.nu.row(k);
  st.nu.row(k) = draw;
  resid.noalias() -= st.z.col(k) * diff;
}

template <typename Rng>
void gibbs_nu(const Dataset& ds, ModelState& st, Index k, double beta, Rng& rng,
              NuTempering variant = NuTempering::likelihood_only) {
  check_compatible(ds, st);
  MatrixXd resid = residuals(ds, st);
  gibbs_nu(st, resid, k, beta, variant, rng);
}

template <typename Rng>
void gibbs_tau(ModelState& st, const PriorConfig& cfg, Index k, Rng& rng) {
  const ShapeRate c = tau_conditional(st, cfg, k);
  st.shrink.tau[k] = dist::inv_gamma(rng, c.shape, c.rate);
}

template <typename Rng>
void gibbs_sigma2(ModelState& st, const MatrixXd& resid, const PriorConfig& cfg, double beta,
                  Rng& rng) {
  const ShapeRate c = sigma2_conditional(resid, cfg, beta);
  st.sigma2 = dist::inv_gamma(rng, c.shape, c.rate);
}

template <typename Rng>
void gibbs_chi(ModelState& st, MatrixXd& resid, Index i, Index m, double beta, Rng& rng) {
  const ScalarNormal c = chi_conditional(st, resid, i, m, beta);
  const double draw = dist::normal(rng, c.mean, std::sqrt(c.var));
  const double diff = draw - st.chi(i, m);
  st.chi(i, m) = draw;
  if (diff != 0.0) {
    const VectorXd v = st.phi[m].transpose() * st.z.row(i).transpose();
    resid.row(i).noalias() -= diff * v.transpose();
  }
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

/// Position of the sweep in the chain; selects the random streams.
struct SweepKey {
  std::uint64_t iteration = 0;
  std::uint64_t rung = 0;
};

namespace detail {

template <typename F>
void for_each_index(Index n, bool reverse, F&& f) {
  if (reverse) {
    for (Index i = n; i-- > 0;) f(i);
  } else {
    for (Index i = 0; i < n; ++i) f(i);
  }
}

inline void check_finite_after(const ModelState& st, const MatrixXd& resid, UpdateBlock b,
                               std::uint64_t iteration) {
  if (!std::isfinite(st.sigma2) || !(st.sigma2 > 0.0) || !resid.allFinite()) {
    throw NumericalError("non-finite log-likelihood after block '" + std::string(block_name(b)) +
                             "' at iteration " + std::to_string(iteration),
                         static_cast<std::size_t>(iteration));
  }
}

}  // namespace detail

/// Apply every block of `plan` once, in plan order (or reversed, including the
/// inner index loops, when `reverse` is set). Acceptance counts accumulate in
/// plan.stats.
inline void sweep_in_place(const Dataset& ds, ModelState& st, const PriorConfig& cfg,
                           SweepPlan& plan, double beta, SweepKey key = {},
                           const SamplerOptions& opts = {}, bool reverse = false) {
  check_compatible(ds, st);
  const Index N = st.N(), K = st.K(), M = st.M(), P = st.P();
  MatrixXd resid = residuals(ds, st);

  auto run_block = [&](UpdateBlock b) {
    auto rng = make_stream(plan.seed, key.iteration, key.rung, stream_of(b));
    auto& ctr = plan.counter(b);
    switch (b) {
      case UpdateBlock::nu:
        detail::for_each_index(K, reverse, [&](Index k) {
          gibbs_nu(st, resid, k, beta, opts.nu_tempering, rng);
        });
        break;
      case UpdateBlock::phi:
        detail::for_each_index(M, reverse, [&](Index m) {
          detail::for_each_index(K, reverse, [&](Index k) {
            if (opts.orthogonal_phi) {
              gibbs_phi_orthogonal(st, resid, k, m, beta, rng);
            } else {
              gibbs_phi(st, resid, k, m, beta, rng);
            }
          });
        });
        break;
      case UpdateBlock::chi:
        detail::for_each_index(N, reverse, [&](Index i) {
          detail::for_each_index(M, reverse, [&](Index m) { gibbs_chi(st, resid, i, m, beta, rng); });
        });
        break;
      case UpdateBlock::sigma2:
        gibbs_sigma2(st, resid, cfg, beta, rng);
        break;
      case UpdateBlock::tau:
        detail::for_each_index(K, reverse, [&](Index k) { gibbs_tau(st, cfg, k, rng); });
        break;
      case UpdateBlock::delta:
        detail::for_each_index(K, reverse, [&](Index k) { gibbs_delta(st, k, rng); });
        break;
      case UpdateBlock::gamma:
        detail::for_each_index(K, reverse, [&](Index k) { gibbs_gamma(st, cfg, k, rng); });
        break;
      case UpdateBlock::a1:
        detail::for_each_index(K, reverse, [&](Index k) {
          ++ctr.proposed;
          if (mh_a1(st, cfg, k, rng)) ++ctr.accepted;
        });
        break;
      case UpdateBlock::a2:
        detail::for_each_index(K, reverse, [&](Index k) {
          ++ctr.proposed;
          if (mh_a2(st, cfg, k, rng)) ++ctr.accepted;
        });
        break;
      case UpdateBlock::z:
        detail::for_each_index(N, reverse, [&](Index i) {
          ++ctr.proposed;
          switch (mh_z(ds, st, resid, cfg, i, beta, rng)) {
            case MhOutcome::accepted: ++ctr.accepted; break;
            case MhOutcome::degenerate: ++ctr.degenerate; break;
            case MhOutcome::rejected: break;
          }
        });
        break;
      case UpdateBlock::pi: {
        ++ctr.proposed;
        const MhOutcome o = mh_pi(st, cfg, rng);
        if (o == MhOutcome::accepted) ++ctr.accepted;
        if (o == MhOutcome::degenerate) ++ctr.degenerate;
        break;
      }
      case UpdateBlock::alpha3:
        ++ctr.proposed;
        if (mh_alpha3(st, cfg, rng)) ++ctr.accepted;
        break;
    }
    detail::check_finite_after(st, resid, b, key.iteration);
  };

  (void)P;
  if (reverse) {
    for (auto it = plan.order.rbegin(); it != plan.order.rend(); ++it) run_block(*it);
  } else {
    for (auto b : plan.order) run_block(b);
  }
}

inline ModelState sweep(const Dataset& ds, const ModelState& st, const PriorConfig& cfg,
                        SweepPlan& plan, double beta, SweepKey key = {},
                        const SamplerOptions& opts = {}) {
  ModelState out = st;
  sweep_in_place(ds, out, cfg, plan, beta, key, opts);
  return out;
}

}  // namespace mixmemb
