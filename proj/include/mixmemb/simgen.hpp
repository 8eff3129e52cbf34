#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mixmemb/distributions.hpp"
#include "mixmemb/errors.hpp"
#include "mixmemb/model.hpp"
#include "mixmemb/rng.hpp"
#include "mixmemb/types.hpp"

namespace mixmemb::sim {

/// Recipe for a synthetic data set drawn from the convex-combination model.
struct SimRecipe {
  Index N = 250, P = 10, K = 2, M = 4;
  double mean_var = 9.0;           // nu_k ~ N(0, mean_var I)
  std::vector<double> phi_var;     // per-component variance of phi coefficients, length M
  std::vector<double> mix_weights; // Dirichlet-mixture weights, sum to 1
  std::vector<VectorXd> mix_conc;  // Dirichlet concentrations, one length-K vector per weight
  double sigma2 = 0.01;
  bool orthogonalize_phi = false;  // draw phi in the orthogonal complement of the means

  void validate() const {
    if (N < 1 || P < 1 || K < 1 || M < 1) throw ConfigError("recipe sizes must be positive");
    if (static_cast<Index>(phi_var.size()) != M) throw ConfigError("recipe needs M phi scales");
    if (mix_weights.empty() || mix_weights.size() != mix_conc.size())
      throw ConfigError("recipe mixture weights and concentrations must pair up");
    double s = 0.0;
    for (double w : mix_weights) {
      if (!(w >= 0.0)) throw ConfigError("mixture weights must be nonnegative");
      s += w;
    }
    if (std::abs(s - 1.0) > 1e-12) throw ConfigError("mixture weights must sum to 1");
    for (const auto& c : mix_conc)
      if (c.size() != K || (c.array() <= 0.0).any())
        throw ConfigError("each concentration vector must have K positive entries");
    for (double v : phi_var)
      if (!(v > 0.0)) throw ConfigError("phi scales must be positive");
    if (!(mean_var > 0.0)) throw ConfigError("mean scale must be positive");
    if (!(sigma2 >= 0.0)) throw ConfigError("sigma2 must be nonnegative");
    if (orthogonalize_phi && P <= K) throw ConfigError("orthogonal complement is empty");
  }
};

struct SimResult {
  Dataset data;
  ModelState truth;
  std::vector<int> mixture_component;  // which Dirichlet each z row came from
};

/// Two features in R^10, M = 4, phi orthogonal to both means, sigma2 = 0.01.
inline SimRecipe ss1_recipe(Index N = 250) {
  SimRecipe r;
  r.N = N;
  r.P = 10;
  r.K = 2;
  r.M = 4;
  r.mean_var = 9.0;
  r.phi_var = {1.0, 0.49, 0.25, 0.09};
  r.mix_weights = {0.3, 0.3, 0.4};
  r.mix_conc = {(VectorXd(2) << 10, 1).finished(), (VectorXd(2) << 1, 10).finished(),
                (VectorXd(2) << 1, 1).finished()};
  r.sigma2 = 0.01;
  r.orthogonalize_phi = true;
  return r;
}

/// Three features in R^20, N = 200, M = 3, sigma2 = 0.01. The third
/// concentration coordinate is 1 in every mixture component.
inline SimRecipe ss2_recipe(Index N = 200) {
  SimRecipe r;
  r.N = N;
  r.P = 20;
  r.K = 3;
  r.M = 3;
  r.mean_var = 10.0;
  r.phi_var = {1.0, 0.5, 0.2};
  r.mix_weights = {0.2, 0.2, 0.6};
  r.mix_conc = {(VectorXd(3) << 10, 1, 1).finished(), (VectorXd(3) << 1, 10, 1).finished(),
                (VectorXd(3) << 1, 1, 1).finished()};
  r.sigma2 = 0.01;
  r.orthogonalize_phi = false;
  return r;
}

/// Orthonormal basis (columns) of the complement of span(vectors' columns).
/// Gram-Schmidt over the given vectors followed by e_1, ..., e_P in order;
/// candidates with residual norm below 1e-8 are skipped.
inline MatrixXd orthogonal_complement(const MatrixXd& vectors) {
  const Index P = vectors.rows();
  std::vector<VectorXd> basis;
  auto add = [&](VectorXd v) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) v -= b.dot(v) * b;
    const double n = v.norm();
    if (n < 1e-8) return false;
    basis.push_back(v / n);
    return true;
  };
  std::size_t n_span = 0;
  for (Index j = 0; j < vectors.cols(); ++j)
    if (add(vectors.col(j))) ++n_span;
  for (Index p = 0; p < P; ++p) add(VectorXd::Unit(P, p));
  MatrixXd out(P, static_cast<Index>(basis.size() - n_span));
  for (std::size_t j = n_span; j < basis.size(); ++j)
    out.col(static_cast<Index>(j - n_span)) = basis[j];
  return out;
}

inline SimResult generate(const SimRecipe& r, std::uint64_t seed) {
  r.validate();
  auto rng = make_stream(seed, 0, 0, Block::data_draw);
  const ModelDims dims{r.K, r.M};
  SimResult out;
  ModelState& st = out.truth;
  st = ModelState::zeros(r.N, r.P, dims);
  st.sigma2 = r.sigma2;

  const double mean_sd = std::sqrt(r.mean_var);
  for (Index k = 0; k < r.K; ++k)
    for (Index p = 0; p < r.P; ++p) st.nu(k, p) = dist::normal(rng, 0.0, mean_sd);

  for (Index i = 0; i < r.N; ++i)
    for (Index m = 0; m < r.M; ++m) st.chi(i, m) = dist::normal(rng);

  if (r.orthogonalize_phi) {
    const MatrixXd basis = orthogonal_complement(st.nu.transpose());
    for (Index m = 0; m < r.M; ++m) {
      const double sd = std::sqrt(r.phi_var[static_cast<std::size_t>(m)]);
      for (Index k = 0; k < r.K; ++k) {
        VectorXd q(basis.cols());
        for (Index j = 0; j < q.size(); ++j) q[j] = dist::normal(rng, 0.0, sd);
        st.phi[static_cast<std::size_t>(m)].row(k) = (basis * q).transpose();
      }
    }
  } else {
    for (Index m = 0; m < r.M; ++m) {
      const double sd = std::sqrt(r.phi_var[static_cast<std::size_t>(m)]);
      for (Index k = 0; k < r.K; ++k)
        for (Index p = 0; p < r.P; ++p)
          st.phi[static_cast<std::size_t>(m)](k, p) = dist::normal(rng, 0.0, sd);
    }
  }

  std::discrete_distribution<int> pick(r.mix_weights.begin(), r.mix_weights.end());
  out.mixture_component.resize(static_cast<std::size_t>(r.N));
  for (Index i = 0; i < r.N; ++i) {
    const int c = pick(rng);
    out.mixture_component[static_cast<std::size_t>(i)] = c;
    st.z.row(i) = dist::dirichlet(rng, r.mix_conc[static_cast<std::size_t>(c)]).transpose();
  }
  for (Index k = 0; k < r.K; ++k) st.pi[k] = st.z.col(k).mean();

  MatrixXd y = conditional_mean(st);
  if (r.sigma2 > 0.0) {
    const double sd = std::sqrt(r.sigma2);
    for (Index i = 0; i < y.rows(); ++i)
      for (Index p = 0; p < y.cols(); ++p) y(i, p) += dist::normal(rng, 0.0, sd);
  }
  out.data = Dataset(std::move(y));
  return out;
}

inline SimResult generate_ss1(std::uint64_t seed, Index N = 250) { return generate(ss1_recipe(N), seed); }
inline SimResult generate_ss2(std::uint64_t seed, Index N = 200) { return generate(ss2_recipe(N), seed); }

/// Covariance of the natural-parameter mixed membership model at membership z:
/// H = (sum_k z_k C_k^-1)^-1.
inline MatrixXd heller_covariance(const std::vector<MatrixXd>& covs, const VectorXd& z) {
  const Index P = covs.front().rows();
  MatrixXd prec = MatrixXd::Zero(P, P);
  for (std::size_t k = 0; k < covs.size(); ++k)
    prec += z[static_cast<Index>(k)] * covs[k].llt().solve(MatrixXd::Identity(P, P));
  return prec.llt().solve(MatrixXd::Identity(P, P));
}

/// Mean of the natural-parameter model: H * sum_k z_k C_k^-1 nu_k.
inline VectorXd heller_mean(const MatrixXd& nus, const std::vector<MatrixXd>& covs,
                            const VectorXd& z) {
  const Index P = nus.cols();
  VectorXd h = VectorXd::Zero(P);
  for (std::size_t k = 0; k < covs.size(); ++k)
    h += z[static_cast<Index>(k)] * covs[k].llt().solve(nus.row(static_cast<Index>(k)).transpose());
  return heller_covariance(covs, z) * h;
}

template <typename Rng>
VectorXd draw_mvn(Rng& rng, const VectorXd& mean, const MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
  const VectorXd sd = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  VectorXd e(mean.size());
  for (Index j = 0; j < e.size(); ++j) e[j] = dist::normal(rng);
  return mean + es.eigenvectors() * sd.asDiagonal() * e;
}

/// Comparison data from the natural-parameter model: y_i ~ N(H_i h_i, H_i).
/// Used only for side-by-side plots.
inline Dataset generate_heller(const MatrixXd& nus, const std::vector<MatrixXd>& covs,
                               const MatrixXd& z, std::uint64_t seed) {
  if (static_cast<Index>(covs.size()) != nus.rows() || z.cols() != nus.rows())
    throw DimensionError("generate_heller: K mismatch between means, covariances and z");
  auto rng = make_stream(seed, 0, 0, Block::data_draw);
  MatrixXd y(z.rows(), nus.cols());
  for (Index i = 0; i < z.rows(); ++i) {
    const VectorXd zi = z.row(i).transpose();
    y.row(i) = draw_mvn(rng, heller_mean(nus, covs, zi), heller_covariance(covs, zi)).transpose();
  }
  return Dataset(std::move(y));
}

/// Convex-combination model with an explicit KP x KP joint covariance of the
/// stacked features (cross-covariances free): y_i = sum_k z_ik f_k.
inline Dataset generate_convex(const MatrixXd& nus, const MatrixXd& joint_cov, const MatrixXd& z,
                               std::uint64_t seed) {
  const Index K = nus.rows(), P = nus.cols();
  if (joint_cov.rows() != K * P || joint_cov.cols() != K * P || z.cols() != K)
    throw DimensionError("generate_convex: shapes disagree");
  auto rng = make_stream(seed, 0, 0, Block::data_draw);
  VectorXd mean(K * P);
  for (Index k = 0; k < K; ++k) mean.segment(k * P, P) = nus.row(k).transpose();
  MatrixXd y(z.rows(), P);
  for (Index i = 0; i < z.rows(); ++i) {
    const VectorXd f = draw_mvn(rng, mean, joint_cov);
    VectorXd yi = VectorXd::Zero(P);
    for (Index k = 0; k < K; ++k) yi += z(i, k) * f.segment(k * P, P);
    y.row(i) = yi.transpose();
  }
  return Dataset(std::move(y));
}

/// Relative error ||truth - estimate|| / ||truth|| in percent (Frobenius norm).
inline double rse(const MatrixXd& truth, const MatrixXd& estimate) {
  if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols())
    throw DimensionError("rse: shape mismatch");
  return (truth - estimate).norm() / truth.norm() * 100.0;
}

inline double rmse(const MatrixXd& truth, const MatrixXd& estimate) {
  if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols())
    throw DimensionError("rmse: shape mismatch");
  return std::sqrt((truth - estimate).squaredNorm() / static_cast<double>(truth.size()));
}

}  // namespace mixmemb::sim
