#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mixmemb/errors.hpp"
#include "mixmemb/model.hpp"
#include "mixmemb/rng.hpp"
#include "mixmemb/sampler.hpp"
#include "mixmemb/tempering.hpp"

namespace mixmemb {

/// Thinned sequence of states and their conditional log-likelihoods.
struct ChainStore {
  ModelDims dims;
  Index N = 0;
  Index P = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> iteration;  // 1-based iteration of each stored draw
  std::vector<ModelState> draws;
  std::vector<double> loglik;
  // Per-column centre/scale applied to the data before fitting; empty when
  // the chain was run on raw data.
  VectorXd center;
  VectorXd scale;
  // Sampler diagnostics (not persisted).
  AcceptanceStats stats{};
  std::uint64_t tempered_proposed = 0;
  std::uint64_t tempered_accepted = 0;

  std::size_t size() const noexcept { return draws.size(); }
  bool empty() const noexcept { return draws.empty(); }

  void push(std::uint64_t iter, ModelState st, double ll) {
    iteration.push_back(iter);
    draws.push_back(std::move(st));
    loglik.push_back(ll);
  }
};

struct ChainOptions {
  SamplerOptions sampler;
  SweepPlan plan_template;  // order only; seed and stats are overwritten
};

/// Runs n_iter iterations starting from `init`. Each iteration is a tempered
/// transition with probability sched.mix_prob, otherwise one untempered sweep.
/// Every thin-th state is stored.
inline ChainStore run_chain(const Dataset& ds, const PriorConfig& cfg, ModelDims dims,
                            const TemperSchedule& sched, std::uint64_t n_iter, std::uint64_t thin,
                            std::uint64_t seed, ModelState init, const ChainOptions& opts = {}) {
  cfg.validate();
  sched.validate();
  dims.validate(ds.P());
  if (thin < 1) throw ConfigError("thin must be at least 1");
  check_compatible(ds, init);

  SweepPlan plan = opts.plan_template;
  plan.seed = seed;
  plan.stats = {};
  plan.validate();

  ChainStore out;
  out.dims = dims;
  out.N = ds.N();
  out.P = ds.P();
  out.seed = seed;
  out.draws.reserve(static_cast<std::size_t>(n_iter / thin));

  ModelState st = std::move(init);
  for (std::uint64_t t = 1; t <= n_iter; ++t) {
    bool tempered = false;
    if (sched.n_temps > 0 && sched.mix_prob > 0.0) {
      auto rng = make_stream(seed, t, 0, Block::tempered_choice);
      tempered = dist::uniform(rng) < sched.mix_prob;
    }
    if (tempered) {
      TemperedResult r = tempered_transition(ds, st, cfg, sched, plan, t, opts.sampler);
      ++out.tempered_proposed;
      if (r.accepted) {
        ++out.tempered_accepted;
        st = std::move(r.state);
      }
    } else {
      sweep_in_place(ds, st, cfg, plan, 1.0, SweepKey{t, 0}, opts.sampler);
    }
    if (t % thin == 0) {
      const double ll = loglik_conditional(ds, st);
      if (!std::isfinite(ll)) {
        throw NumericalError("non-finite log-likelihood at iteration " + std::to_string(t),
                             static_cast<std::size_t>(t));
      }
      out.push(t, st, ll);
    }
  }
  out.stats = plan.stats;
  return out;
}

/// Starting state drawn from the priors, except that memberships start at the
/// uniform Dirichlet so that no row begins pinned to a simplex vertex.
template <typename Rng>
ModelState draw_initial_state(Index N, Index P, ModelDims dims, const PriorConfig& cfg, Rng& rng) {
  ModelState st = draw_prior_state(N, P, dims, cfg, rng);
  const VectorXd ones = VectorXd::Ones(dims.K);
  for (Index i = 0; i < N; ++i) {
    VectorXd zi = dist::dirichlet(rng, ones);
    while (!dist::interior(zi)) zi = dist::dirichlet(rng, ones);
    st.z.row(i) = zi.transpose();
  }
  st.pi = VectorXd::Constant(dims.K, 1.0 / static_cast<double>(dims.K));
  st.alpha3 = 1.0;
  return st;
}

inline ChainStore run_chain(const Dataset& ds, const PriorConfig& cfg, ModelDims dims,
                            const TemperSchedule& sched, std::uint64_t n_iter, std::uint64_t thin,
                            std::uint64_t seed, const ChainOptions& opts = {}) {
  auto rng = make_stream(seed, 0, 0, Block::prior_draw);
  ModelState init = draw_initial_state(ds.N(), ds.P(), dims, cfg, rng);
  return run_chain(ds, cfg, dims, sched, n_iter, thin, seed, std::move(init), opts);
}

}  // namespace mixmemb
