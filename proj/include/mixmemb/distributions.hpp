#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace mixmemb::dist {

using Eigen::Index;
using Eigen::VectorXd;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

// Log densities. Gamma is (shape, rate); inverse gamma is (shape, scale).

inline double log_normal(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var)) - 0.5 * d * d / var;
}

inline double log_gamma(double x, double shape, double rate) {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

inline double log_inv_gamma(double x, double shape, double scale) {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

inline double log_exponential(double x, double rate) {
  if (x < 0.0) return kNegInf;
  return std::log(rate) - rate * x;
}

/// log of the Dirichlet normaliser 1 / B(alpha).
inline double log_inv_beta_fn(const VectorXd& alpha) {
  double s = 0.0, lg = 0.0;
  for (Index k = 0; k < alpha.size(); ++k) {
    s += alpha[k];
    lg += std::lgamma(alpha[k]);
  }
  return std::lgamma(s) - lg;
}

inline constexpr double kSimplexFloor = 1e-12;

/// Dirichlet log density. Coordinates are clamped to [1e-12, 1 - 1e-12] so that
/// round-off on the simplex boundary does not produce -inf.
template <typename Vec>
double log_dirichlet(const Vec& x, const VectorXd& alpha) {
  double out = log_inv_beta_fn(alpha);
  for (Index k = 0; k < alpha.size(); ++k) {
    const double xk = std::clamp(static_cast<double>(x[k]), kSimplexFloor, 1.0 - kSimplexFloor);
    out += (alpha[k] - 1.0) * std::log(xk);
  }
  return out;
}

/// log Phi(x) for the standard normal cdf.
inline double log_std_normal_cdf(double x) {
  return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
}

/// Density of N(mean, var) truncated to (0, inf), evaluated at x.
inline double log_truncnorm_positive(double x, double mean, double var) {
  if (!(x > 0.0)) return kNegInf;
  return log_normal(x, mean, var) - log_std_normal_cdf(mean / std::sqrt(var));
}

inline double logsumexp(const VectorXd& v) {
  if (v.size() == 0) return kNegInf;
  const double mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((v.array() - mx).exp().sum());
}

// Samplers. Distribution objects are constructed per call so that no hidden
// state carries between blocks.

template <typename Rng>
double uniform(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

template <typename Rng>
double normal(Rng& rng, double mean = 0.0, double sd = 1.0) {
  return mean + sd * std::normal_distribution<double>(0.0, 1.0)(rng);
}

template <typename Rng>
double gamma(Rng& rng, double shape, double rate) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

/// log of a Gamma(shape, 1) draw, accurate for tiny shapes where the draw
/// itself would underflow.
template <typename Rng>
double log_gamma_draw(Rng& rng, double shape) {
  if (shape >= 1.0) return std::log(std::gamma_distribution<double>(shape, 1.0)(rng));
  const double g = std::gamma_distribution<double>(shape + 1.0, 1.0)(rng);
  double u = uniform(rng);
  while (u <= 0.0) u = uniform(rng);
  return std::log(g) + std::log(u) / shape;
}

template <typename Rng>
double inv_gamma(Rng& rng, double shape, double scale) {
  return 1.0 / gamma(rng, shape, scale);
}

/// N(mean, sd^2) conditioned on x > 0.
template <typename Rng>
double truncnorm_positive(Rng& rng, double mean, double sd) {
  const double lower = -mean / sd;  // standardised truncation point
  if (lower < 1.0) {
    for (;;) {
      const double x = normal(rng, mean, sd);
      if (x > 0.0) return x;
    }
  }
  // Far tail: exponential proposal (Robert, 1995) on the standardised scale.
  const double rate = 0.5 * (lower + std::sqrt(lower * lower + 4.0));
  for (;;) {
    const double t = lower - std::log(1.0 - uniform(rng)) / rate;
    const double d = t - rate;
    if (uniform(rng) <= std::exp(-0.5 * d * d)) {
      const double x = mean + sd * t;
      if (x > 0.0) return x;
    }
  }
}

/// Dirichlet draw built from log-gamma variates. The last coordinate is set to
/// one minus the sum of the others so the row sums to one without a separate
/// renormalisation pass. A coordinate may still underflow to zero; callers
/// treat such draws as degenerate.
template <typename Rng>
VectorXd dirichlet(Rng& rng, const VectorXd& alpha) {
  const Index K = alpha.size();
  VectorXd lg(K);
  for (Index k = 0; k < K; ++k) lg[k] = log_gamma_draw(rng, alpha[k]);
  const double lse = logsumexp(lg);
  VectorXd x = (lg.array() - lse).exp().matrix();
  x /= x.sum();
  return x;
}

/// True if every coordinate is strictly inside (0, 1).
inline bool interior(const VectorXd& x) {
  return (x.array() > 0.0).all() && (x.array() < 1.0).all();
}

}  // namespace mixmemb::dist
