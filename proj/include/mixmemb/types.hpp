#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "mixmemb/errors.hpp"

namespace mixmemb {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// N x P table of observations, one row per unit.
class Dataset {
 public:
  Dataset() = default;

  explicit Dataset(MatrixXd y) : y_(std::move(y)) {
    if (y_.rows() < 1 || y_.cols() < 1) {
      throw DimensionError("dataset must have at least one row and one column");
    }
    if (!y_.allFinite()) {
      for (Index i = 0; i < y_.rows(); ++i) {
        for (Index p = 0; p < y_.cols(); ++p) {
          if (!std::isfinite(y_(i, p))) {
            throw DomainError("non-finite entry at row " + std::to_string(i + 1) +
                              ", column " + std::to_string(p + 1));
          }
        }
      }
    }
  }

  const MatrixXd& y() const noexcept { return y_; }
  Index N() const noexcept { return y_.rows(); }
  Index P() const noexcept { return y_.cols(); }

 private:
  MatrixXd y_;
};

struct ModelDims {
  Index K = 2;
  Index M = 1;

  void validate(Index P) const {
    if (K < 2) throw ConfigError("K must be at least 2");
    if (M < 1 || M > K * P) {
      throw ConfigError("M must lie in [1, K*P] = [1, " + std::to_string(K * P) + "]");
    }
  }
};

/// Multiplicative gamma process hyper-state. Arrays indexed per feature k and
/// eigencomponent m; `gamma[m]` is K x P.
struct ShrinkageHyperState {
  std::vector<MatrixXd> gamma;  // M entries, each K x P (local precisions)
  MatrixXd delta;               // K x M increments
  MatrixXd tau_tilde;           // K x M running products of delta
  VectorXd a1;                  // K
  VectorXd a2;                  // K
  VectorXd tau;                 // K, prior variance of nu_k

  /// Recompute tau_tilde(k, .) as running products of delta(k, .).
  void refresh_tau_tilde(Index k) {
    double prod = 1.0;
    for (Index m = 0; m < delta.cols(); ++m) {
      prod *= delta(k, m);
      tau_tilde(k, m) = prod;
    }
  }
  void refresh_tau_tilde() {
    for (Index k = 0; k < delta.rows(); ++k) refresh_tau_tilde(k);
  }
};

/// One point in parameter space.
struct ModelState {
  MatrixXd nu;               // K x P feature means
  std::vector<MatrixXd> phi; // M entries, each K x P; phi[m].row(k) is phi_km
  MatrixXd chi;              // N x M latent scores
  MatrixXd z;                // N x K memberships, rows on the simplex
  VectorXd pi;               // K
  double alpha3 = 1.0;
  double sigma2 = 1.0;
  ShrinkageHyperState shrink;

  Index K() const noexcept { return nu.rows(); }
  Index P() const noexcept { return nu.cols(); }
  Index M() const noexcept { return static_cast<Index>(phi.size()); }
  Index N() const noexcept { return z.rows(); }

  /// Zero-initialised state with consistent shapes: uniform memberships,
  /// unit hyperparameters.
  static ModelState zeros(Index N, Index P, ModelDims dims) {
    const Index K = dims.K, M = dims.M;
    ModelState st;
    st.nu = MatrixXd::Zero(K, P);
    st.phi.assign(static_cast<std::size_t>(M), MatrixXd::Zero(K, P));
    st.chi = MatrixXd::Zero(N, M);
    st.z = MatrixXd::Constant(N, K, 1.0 / static_cast<double>(K));
    st.pi = VectorXd::Constant(K, 1.0 / static_cast<double>(K));
    st.shrink.gamma.assign(static_cast<std::size_t>(M), MatrixXd::Ones(K, P));
    st.shrink.delta = MatrixXd::Ones(K, M);
    st.shrink.tau_tilde = MatrixXd::Ones(K, M);
    st.shrink.a1 = VectorXd::Ones(K);
    st.shrink.a2 = VectorXd::Ones(K);
    st.shrink.tau = VectorXd::Ones(K);
    return st;
  }

  /// Throws DimensionError if shapes disagree with each other or with (N, P).
  void check_shapes(Index N, Index P) const {
    const Index K = this->K(), M = this->M();
    auto need = [](bool ok, const char* what) {
      if (!ok) throw DimensionError(std::string("model state: ") + what);
    };
    need(P == this->P(), "nu has wrong number of columns");
    need(K >= 1 && M >= 1, "K and M must be positive");
    for (const auto& f : phi) need(f.rows() == K && f.cols() == P, "phi block shape");
    need(chi.rows() == N && chi.cols() == M, "chi shape");
    need(z.rows() == N && z.cols() == K, "z shape");
    need(pi.size() == K, "pi length");
    need(static_cast<Index>(shrink.gamma.size()) == M, "gamma count");
    for (const auto& g : shrink.gamma) need(g.rows() == K && g.cols() == P, "gamma block shape");
    need(shrink.delta.rows() == K && shrink.delta.cols() == M, "delta shape");
    need(shrink.tau_tilde.rows() == K && shrink.tau_tilde.cols() == M, "tau_tilde shape");
    need(shrink.a1.size() == K && shrink.a2.size() == K && shrink.tau.size() == K,
         "per-feature hyperparameter length");
  }
};

/// Fixed prior hyperparameters and Metropolis-Hastings proposal scales.
/// Gamma distributions use the (shape, rate) convention throughout.
struct PriorConfig {
  double alpha = 1.0, beta = 1.0;    // IG on tau_k
  double alpha0 = 1.0, beta0 = 1.0;  // IG on sigma2
  double nu_gamma = 3.0;
  double alpha1 = 2.0, beta1 = 1.0;  // Gamma on a_1k
  double alpha2 = 3.0, beta2 = 1.0;  // Gamma on a_2k
  VectorXd c;                        // Dirichlet on pi; empty means all ones
  double b = 1.0;                    // exponential rate on alpha3

  double eps1 = 0.5, eps2 = 0.5;
  double a_z = 100.0, a_pi = 100.0;
  double sigma2_alpha3 = 0.1;

  VectorXd c_for(Index K) const {
    if (c.size() == 0) return VectorXd::Ones(K);
    if (c.size() != K) {
      throw DimensionError("prior c has length " + std::to_string(c.size()) +
                           " but K = " + std::to_string(K));
    }
    return c;
  }

  void validate() const {
    const double scalars[] = {alpha, beta, alpha0, beta0, nu_gamma, alpha1, beta1, alpha2,
                              beta2, b, eps1, eps2, a_z, a_pi, sigma2_alpha3};
    for (double v : scalars) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw ConfigError("prior hyperparameters and proposal scales must be positive");
      }
    }
    if (!(alpha2 > beta2)) throw ConfigError("alpha2 must exceed beta2");
    for (Index k = 0; k < c.size(); ++k) {
      if (!(c[k] > 0.0)) throw ConfigError("prior c entries must be positive");
    }
  }
};

}  // namespace mixmemb
