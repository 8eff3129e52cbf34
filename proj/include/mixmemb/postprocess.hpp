#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "mixmemb/chain.hpp"
#include "mixmemb/errors.hpp"
#include "mixmemb/model.hpp"
#include "mixmemb/modelselect.hpp"

namespace mixmemb {

// ---------------------------------------------------------------------------
// Membership rescale (two features)
// ---------------------------------------------------------------------------

struct RescaleResult {
  MatrixXd T;                   // K x K; row k is the membership row holding column k's maximum
  MatrixXd z_t;                 // z * T^-1
  MatrixXd nu_t;                // T * nu
  std::vector<MatrixXd> phi_t;  // T * phi[m]
};

/// Re-express (z, nu, phi) so that the observation with the largest membership
/// in each feature becomes a pure member of it. Only K = 2 is supported.
inline RescaleResult membership_rescale(const ModelState& st) {
  if (st.K() != 2) throw DomainError("membership rescale is implemented for K = 2 only");
  RescaleResult out;
  out.T.resize(2, 2);
  Index rows[2];
  for (Index k = 0; k < 2; ++k) {
    st.z.col(k).maxCoeff(&rows[k]);
    out.T.row(k) = st.z.row(rows[k]);
  }
  const double det = out.T.determinant();
  if (rows[0] == rows[1] || std::abs(det) < 1e-14) {
    throw NumericalError(
        "membership rescale: both column maxima fall on one row (singular transform); "
        "relabel the draw first",
        static_cast<std::size_t>(rows[0]));
  }
  const MatrixXd t_inv = out.T.inverse();
  out.z_t = st.z * t_inv;
  out.nu_t = out.T * st.nu;
  out.phi_t.reserve(st.phi.size());
  for (const auto& f : st.phi) out.phi_t.push_back(out.T * f);
  return out;
}

/// State with (z, nu, phi) replaced by their rescaled versions.
inline ModelState apply_rescale(const ModelState& st, const RescaleResult& r) {
  ModelState out = st;
  out.z = r.z_t;
  out.nu = r.nu_t;
  out.phi = r.phi_t;
  return out;
}

inline ChainStore rescale_chain(const ChainStore& chain) {
  ChainStore out = chain;
  for (auto& d : out.draws) d = apply_rescale(d, membership_rescale(d));
  return out;
}

// ---------------------------------------------------------------------------
// Label switching
// ---------------------------------------------------------------------------

/// New feature j takes old feature perm[j]; applied to every per-feature
/// quantity, so the likelihood is unchanged.
inline ModelState permute_features(const ModelState& st, const std::vector<Index>& perm) {
  const Index K = st.K();
  ModelState out = st;
  for (Index j = 0; j < K; ++j) {
    const Index s = perm[static_cast<std::size_t>(j)];
    out.nu.row(j) = st.nu.row(s);
    for (std::size_t m = 0; m < st.phi.size(); ++m) {
      out.phi[m].row(j) = st.phi[m].row(s);
      out.shrink.gamma[m].row(j) = st.shrink.gamma[m].row(s);
    }
    out.z.col(j) = st.z.col(s);
    out.pi[j] = st.pi[s];
    out.shrink.delta.row(j) = st.shrink.delta.row(s);
    out.shrink.tau_tilde.row(j) = st.shrink.tau_tilde.row(s);
    out.shrink.a1[j] = st.shrink.a1[s];
    out.shrink.a2[j] = st.shrink.a2[s];
    out.shrink.tau[j] = st.shrink.tau[s];
  }
  return out;
}

struct RelabelResult {
  ChainStore chain;
  std::vector<std::vector<Index>> perms;  // one per draw
};

/// Per-draw permutation minimising the squared distance of nu to the running
/// mean of already relabelled nu. Exhaustive over K! permutations (K <= 8).
inline RelabelResult relabel_with_perms(const ChainStore& chain) {
  RelabelResult out{chain, {}};
  if (chain.empty()) return out;
  const Index K = chain.dims.K;
  if (K > 8) throw DomainError("relabelling enumerates K! permutations; K must be at most 8");

  std::vector<std::vector<Index>> all;
  std::vector<Index> p(static_cast<std::size_t>(K));
  std::iota(p.begin(), p.end(), Index{0});
  do all.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));

  MatrixXd ref_sum = MatrixXd::Zero(K, chain.P);
  for (std::size_t t = 0; t < chain.size(); ++t) {
    const MatrixXd& nu = chain.draws[t].nu;
    std::size_t best = 0;
    if (t > 0) {
      const MatrixXd ref = ref_sum / static_cast<double>(t);
      double best_loss = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < all.size(); ++c) {
        double loss = 0.0;
        for (Index j = 0; j < K; ++j)
          loss += (nu.row(all[c][static_cast<std::size_t>(j)]) - ref.row(j)).squaredNorm();
        if (loss < best_loss) {
          best_loss = loss;
          best = c;
        }
      }
    }
    out.chain.draws[t] = permute_features(chain.draws[t], all[best]);
    out.perms.push_back(all[best]);
    ref_sum += out.chain.draws[t].nu;
  }
  return out;
}

inline ChainStore relabel(const ChainStore& chain) { return relabel_with_perms(chain).chain; }

// ---------------------------------------------------------------------------
// Posterior summaries
// ---------------------------------------------------------------------------

/// Quantile of sorted data by linear interpolation between order statistics.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = static_cast<std::size_t>(std::ceil(h));
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Elementwise posterior median and central 95% interval.
struct Interval {
  MatrixXd median;
  MatrixXd lower;
  MatrixXd upper;
};

/// Summarise a rows x cols quantity over n draws. `block(t, r0, nr)` returns
/// rows [r0, r0 + nr) of draw t; rows are processed in chunks to bound memory.
inline Interval summarize_elements(std::size_t n, Index rows, Index cols,
                                   const std::function<MatrixXd(std::size_t, Index, Index)>& block) {
  Interval out{MatrixXd(rows, cols), MatrixXd(rows, cols), MatrixXd(rows, cols)};
  const Index budget = 4'000'000;
  const Index per_row = std::max<Index>(1, cols * static_cast<Index>(n));
  const Index chunk = std::max<Index>(1, budget / per_row);
  std::vector<double> buf(n);
  for (Index r0 = 0; r0 < rows; r0 += chunk) {
    const Index nr = std::min(chunk, rows - r0);
    std::vector<MatrixXd> blocks;
    blocks.reserve(n);
    for (std::size_t t = 0; t < n; ++t) blocks.push_back(block(t, r0, nr));
    for (Index r = 0; r < nr; ++r) {
      for (Index c = 0; c < cols; ++c) {
        for (std::size_t t = 0; t < n; ++t) buf[t] = blocks[t](r, c);
        std::sort(buf.begin(), buf.end());
        out.median(r0 + r, c) = quantile_sorted(buf, 0.5);
        out.lower(r0 + r, c) = quantile_sorted(buf, 0.025);
        out.upper(r0 + r, c) = quantile_sorted(buf, 0.975);
      }
    }
  }
  return out;
}

struct FitReport {
  Index K = 0, P = 0, N = 0, M = 0;
  std::size_t n_draws = 0;
  Interval nu;          // K x P
  Interval z;           // N x K
  Interval pi;          // K x 1
  Interval sigma2;      // 1 x 1
  Interval alpha3;      // 1 x 1
  Interval covariance;  // KP x KP stacked; block (k, k') is the cross-covariance
  Interval eigenvalues; // KP x 1, per-draw spectra sorted nonincreasing
  VectorXd median_cov_eigenvalues;   // spectrum of the median covariance
  MatrixXd median_cov_eigenvectors;  // matching orthonormal columns
  std::optional<IcReport> ic;
};

inline FitReport summarize(const ChainStore& chain) {
  if (chain.empty()) throw DomainError("cannot summarise an empty chain");
  const auto& d = chain.draws;
  const std::size_t n = d.size();
  FitReport rep;
  rep.K = chain.dims.K;
  rep.M = chain.dims.M;
  rep.P = chain.P;
  rep.N = chain.N;
  rep.n_draws = n;
  const Index K = rep.K, P = rep.P, KP = K * P;

  rep.nu = summarize_elements(n, K, P, [&](std::size_t t, Index r0, Index nr) -> MatrixXd {
    return d[t].nu.middleRows(r0, nr);
  });
  rep.z = summarize_elements(n, rep.N, K, [&](std::size_t t, Index r0, Index nr) -> MatrixXd {
    return d[t].z.middleRows(r0, nr);
  });
  rep.pi = summarize_elements(n, K, 1, [&](std::size_t t, Index r0, Index nr) -> MatrixXd {
    return d[t].pi.segment(r0, nr);
  });
  rep.sigma2 = summarize_elements(n, 1, 1, [&](std::size_t t, Index, Index) -> MatrixXd {
    return MatrixXd::Constant(1, 1, d[t].sigma2);
  });
  rep.alpha3 = summarize_elements(n, 1, 1, [&](std::size_t t, Index, Index) -> MatrixXd {
    return MatrixXd::Constant(1, 1, d[t].alpha3);
  });

  std::vector<MatrixXd> stacks;
  stacks.reserve(n);
  for (const auto& st : d) {
    MatrixXd s(KP, st.M());
    for (Index m = 0; m < st.M(); ++m) s.col(m) = stacked_component(st, m);
    stacks.push_back(std::move(s));
  }
  rep.covariance = summarize_elements(n, KP, KP, [&](std::size_t t, Index r0, Index nr) -> MatrixXd {
    return stacks[t].middleRows(r0, nr) * stacks[t].transpose();
  });
  std::vector<VectorXd> spectra;
  spectra.reserve(n);
  for (const auto& st : d) spectra.push_back(reconstruct_covariance(st).eigenvalues);
  rep.eigenvalues = summarize_elements(n, KP, 1, [&](std::size_t t, Index r0, Index nr) -> MatrixXd {
    return spectra[t].segment(r0, nr);
  });

  const MatrixXd med = 0.5 * (rep.covariance.median + rep.covariance.median.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(med);
  rep.median_cov_eigenvalues = es.eigenvalues().reverse();
  rep.median_cov_eigenvectors = es.eigenvectors().rowwise().reverse();
  return rep;
}

}  // namespace mixmemb
