#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mixmemb/chain.hpp"
#include "mixmemb/distributions.hpp"
#include "mixmemb/errors.hpp"
#include "mixmemb/model.hpp"

namespace mixmemb {

struct IcReport {
  Index k = 0;
  std::int64_t d = 0;
  double bic = 0.0;
  double aic = 0.0;
  double dic = 0.0;
  double mean_loglik = 0.0;
};

/// Number of free parameters: (N + P)K + 2MKP + 4K + (N + K)M + 2.
inline std::int64_t param_count(std::int64_t N, std::int64_t P, std::int64_t K, std::int64_t M) {
  return (N + P) * K + 2 * M * K * P + 4 * K + (N + K) * M + 2;
}

inline void require_draws(const ChainStore& chain) {
  if (chain.empty()) throw DomainError("information criteria need at least one stored draw");
}

/// Conditional log-likelihood at the posterior mean of each observation's mean
/// vector and the posterior mean of sigma2. Label switching and rescaling
/// leave both quantities unchanged, unlike per-parameter posterior means.
inline double plugin_loglik(const ChainStore& chain, const Dataset& ds) {
  require_draws(chain);
  MatrixXd mean = MatrixXd::Zero(ds.N(), ds.P());
  double s2 = 0.0;
  for (const auto& st : chain.draws) {
    check_compatible(ds, st);
    mean += conditional_mean(st);
    s2 += st.sigma2;
  }
  const double n = static_cast<double>(chain.size());
  mean /= n;
  s2 /= n;
  const MatrixXd r = ds.y() - mean;
  VectorXd terms(ds.N());
  const double c = -0.5 * static_cast<double>(ds.P()) * (dist::kLog2Pi + std::log(s2));
  for (Index i = 0; i < ds.N(); ++i) terms[i] = c - 0.5 * r.row(i).squaredNorm() / s2;
  return tree_sum(terms);
}

/// Larger is better under this sign convention.
inline double bic_from(double loglik, std::int64_t d, Index N) {
  return 2.0 * loglik - static_cast<double>(d) * std::log(static_cast<double>(N));
}

/// Smaller is better.
inline double aic_from(double loglik, std::int64_t d) {
  return -2.0 * loglik + 2.0 * static_cast<double>(d);
}

inline double bic(const ChainStore& chain, const Dataset& ds) {
  return bic_from(plugin_loglik(chain, ds),
                  param_count(ds.N(), ds.P(), chain.dims.K, chain.dims.M), ds.N());
}

inline double aic(const ChainStore& chain, const Dataset& ds) {
  return aic_from(plugin_loglik(chain, ds),
                  param_count(ds.N(), ds.P(), chain.dims.K, chain.dims.M));
}

/// Which density enters DIC: chi integrated out (default) or conditional on chi.
enum class DicDensity { marginal, conditional };

/// DIC = -4 E[log f(Y | Theta)] + 2 log fhat(Y), where fhat(y_i) is the
/// Monte-Carlo average of f(y_i | draw). Averages are taken in the log domain.
inline double dic(const ChainStore& chain, const Dataset& ds,
                  DicDensity density = DicDensity::marginal) {
  require_draws(chain);
  const Index L = static_cast<Index>(chain.size());
  const Index N = ds.N();
  MatrixXd terms(L, N);  // log f(y_i | draw l)
  for (Index l = 0; l < L; ++l) {
    const ModelState& st = chain.draws[static_cast<std::size_t>(l)];
    terms.row(l) = (density == DicDensity::marginal ? loglik_marginal_terms(ds, st)
                                                    : loglik_conditional_terms(ds, st))
                       .transpose();
  }
  VectorXd per_draw(L);
  for (Index l = 0; l < L; ++l) per_draw[l] = tree_sum(terms.row(l).transpose());
  // Sorting fixes the summation order, so the result is independent of draw order.
  std::sort(per_draw.data(), per_draw.data() + L);
  const double expected = tree_sum(per_draw) / static_cast<double>(L);

  VectorXd log_fhat(N);
  const double log_l = std::log(static_cast<double>(L));
  for (Index i = 0; i < N; ++i) {
    VectorXd col = terms.col(i);
    std::sort(col.data(), col.data() + col.size());
    log_fhat[i] = dist::logsumexp(col) - log_l;
  }
  return -4.0 * expected + 2.0 * tree_sum(log_fhat);
}

inline double mean_loglik(const ChainStore& chain) {
  require_draws(chain);
  VectorXd v = Eigen::Map<const VectorXd>(chain.loglik.data(), static_cast<Index>(chain.loglik.size()));
  return tree_sum(v) / static_cast<double>(v.size());
}

inline IcReport ic_report(const ChainStore& chain, const Dataset& ds,
                          DicDensity density = DicDensity::marginal) {
  IcReport r;
  r.k = chain.dims.K;
  r.d = param_count(ds.N(), ds.P(), chain.dims.K, chain.dims.M);
  const double ll = plugin_loglik(chain, ds);
  r.bic = bic_from(ll, r.d, ds.N());
  r.aic = aic_from(ll, r.d);
  r.dic = dic(chain, ds, density);
  r.mean_loglik = mean_loglik(chain);
  return r;
}

struct ElbowPoint {
  Index k = 0;
  double mean_loglik = 0.0;
};

/// Average log-likelihood per K, sorted by K, for elbow plots.
inline std::vector<ElbowPoint> elbow_data(const std::vector<IcReport>& reports) {
  std::vector<ElbowPoint> out;
  out.reserve(reports.size());
  for (const auto& r : reports) out.push_back({r.k, r.mean_loglik});
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.k < b.k; });
  return out;
}

/// Indices of the preferred report under each criterion (BIC max, AIC min, DIC min).
struct IcChoice {
  Index bic_k = 0, aic_k = 0, dic_k = 0;
};

inline IcChoice choose_k(const std::vector<IcReport>& reports) {
  if (reports.empty()) throw DomainError("no IC reports to choose from");
  IcChoice c;
  const IcReport* b = &reports[0];
  const IcReport* a = &reports[0];
  const IcReport* d = &reports[0];
  for (const auto& r : reports) {
    if (r.bic > b->bic) b = &r;
    if (r.aic < a->aic) a = &r;
    if (r.dic < d->dic) d = &r;
  }
  c.bic_k = b->k;
  c.aic_k = a->k;
  c.dic_k = d->k;
  return c;
}

}  // namespace mixmemb
