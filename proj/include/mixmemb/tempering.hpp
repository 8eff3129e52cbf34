#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "mixmemb/errors.hpp"
#include "mixmemb/model.hpp"
#include "mixmemb/sampler.hpp"

namespace mixmemb {

/// Ladder of likelihood exponents 1 = betas[0] <= ... <= betas[n_temps] = beta_max.
struct TemperSchedule {
  int n_temps = 10;
  double beta_max = 8.0;
  std::vector<double> betas;
  double mix_prob = 0.1;

  /// beta_h = beta_max^(h / n_temps).
  static TemperSchedule geometric(int n_temps, double beta_max, double mix_prob) {
    TemperSchedule s;
    s.n_temps = n_temps;
    s.beta_max = beta_max;
    s.mix_prob = mix_prob;
    s.betas.resize(static_cast<std::size_t>(n_temps) + 1);
    for (int h = 0; h <= n_temps; ++h) {
      s.betas[static_cast<std::size_t>(h)] =
          n_temps == 0 ? 1.0 : std::pow(beta_max, static_cast<double>(h) / n_temps);
    }
    s.betas.front() = 1.0;
    s.betas.back() = beta_max;
    return s;
  }

  /// Ladder of ones: every tempered rung is the untempered kernel.
  static TemperSchedule constant(int n_temps, double mix_prob) {
    TemperSchedule s;
    s.n_temps = n_temps;
    s.beta_max = 1.0;
    s.mix_prob = mix_prob;
    s.betas.assign(static_cast<std::size_t>(n_temps) + 1, 1.0);
    return s;
  }

  static TemperSchedule none() { return constant(0, 0.0); }

  void validate() const {
    if (n_temps < 0) throw ConfigError("number of tempering levels must be nonnegative");
    if (betas.size() != static_cast<std::size_t>(n_temps) + 1)
      throw ConfigError("tempering ladder must have n_temps + 1 entries");
    if (betas.front() != 1.0) throw ConfigError("tempering ladder must start at 1");
    for (std::size_t h = 1; h < betas.size(); ++h)
      if (betas[h] < betas[h - 1]) throw ConfigError("tempering ladder must be nondecreasing");
    if (betas.back() != beta_max) throw ConfigError("tempering ladder must end at beta_max");
    if (!(beta_max >= 1.0)) throw ConfigError("beta_max must be at least 1");
    if (!(mix_prob >= 0.0 && mix_prob <= 1.0)) throw ConfigError("mix_prob must lie in [0, 1]");
  }
};

struct TemperedResult {
  ModelState state;
  bool accepted = false;
  double log_accept = 0.0;  // log of the acceptance ratio before min{1, .}
};

/// Log acceptance ratio of a tempered transition given the conditional
/// log-likelihood of each visited state. `loglik[j]` belongs to Theta_j for
/// j = 0..2*N_t; the final state's ratio uses the level it was produced at.
inline double tempered_log_ratio(const std::vector<double>& betas,
                                 const std::vector<double>& loglik) {
  const std::size_t nt = betas.size() - 1;
  double out = 0.0;
  for (std::size_t h = 0; h < nt; ++h) out += (betas[h + 1] - betas[h]) * loglik[h];
  for (std::size_t j = nt + 1; j <= 2 * nt; ++j) {
    const std::size_t level = 2 * nt + 1 - j;
    out += (betas[level - 1] - betas[level]) * loglik[j];
  }
  return out;
}

/// One tempered transition: sweeps up the ladder beta_1..beta_Nt, one more
/// sweep at beta_Nt, then down to beta_1; the composite move is accepted with
/// the ladder's likelihood-ratio product. Down-ladder sweeps run the plan in
/// reverse so each rung pair is a forward/reverse kernel pair. On rejection
/// the input state is returned unchanged.
inline TemperedResult tempered_transition(const Dataset& ds, const ModelState& st,
                                          const PriorConfig& cfg, const TemperSchedule& sched,
                                          SweepPlan& plan, std::uint64_t iteration,
                                          const SamplerOptions& opts = {}) {
  const std::size_t nt = static_cast<std::size_t>(sched.n_temps);
  TemperedResult out;
  if (nt == 0) {
    out.state = st;
    out.accepted = true;
    return out;
  }
  std::vector<double> ll(2 * nt + 1);
  ModelState cur = st;
  ll[0] = loglik_conditional(ds, cur);
  for (std::size_t j = 1; j <= 2 * nt; ++j) {
    const bool up = j <= nt;
    const std::size_t level = up ? j : 2 * nt + 1 - j;
    sweep_in_place(ds, cur, cfg, plan, sched.betas[level], SweepKey{iteration, j}, opts, !up);
    ll[j] = loglik_conditional(ds, cur);
  }
  out.log_accept = tempered_log_ratio(sched.betas, ll);
  auto rng = make_stream(plan.seed, iteration, 0, Block::tempered_accept);
  out.accepted = mh_accept(rng, out.log_accept);
  out.state = out.accepted ? std::move(cur) : st;
  return out;
}

}  // namespace mixmemb
