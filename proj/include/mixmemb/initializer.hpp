#pragma once

#include <cstdint>
#include <vector>

#include "mixmemb/chain.hpp"
#include "mixmemb/errors.hpp"
#include "mixmemb/model.hpp"
#include "mixmemb/parallel.hpp"
#include "mixmemb/rng.hpp"
#include "mixmemb/sampler.hpp"

namespace mixmemb {

struct MsaConfig {
  int n_try1 = 10;
  int n_try2 = 5;
  int n_mcmc1 = 500;
  int n_mcmc2 = 500;

  void validate() const {
    if (n_try1 < 1 || n_try2 < 1 || n_mcmc1 < 1 || n_mcmc2 < 1)
      throw ConfigError("multiple-start counts and run lengths must be at least 1");
  }
};

struct InitFit {
  ModelState state;
  double loglik = 0.0;
};

/// Blocks sampled while phi and chi are pinned at zero.
inline std::vector<UpdateBlock> nu_z_blocks() {
  using B = UpdateBlock;
  return {B::nu, B::sigma2, B::tau, B::z, B::pi, B::alpha3};
}

/// Blocks sampled with (nu, z) held fixed.
inline std::vector<UpdateBlock> theta_blocks() {
  using B = UpdateBlock;
  return {B::phi, B::chi, B::sigma2, B::tau, B::delta, B::gamma, B::a1, B::a2, B::pi, B::alpha3};
}

inline InitFit run_restricted(const Dataset& ds, ModelState st, const PriorConfig& cfg,
                              std::vector<UpdateBlock> blocks, int n_iter, std::uint64_t seed,
                              const SamplerOptions& opts) {
  SweepPlan plan;
  plan.order = std::move(blocks);
  plan.seed = seed;
  for (int t = 1; t <= n_iter; ++t)
    sweep_in_place(ds, st, cfg, plan, 1.0, SweepKey{static_cast<std::uint64_t>(t), 0}, opts);
  const double ll = loglik_conditional(ds, st);
  return {std::move(st), ll};
}

/// Stage one: fresh start, phi and chi fixed at zero, short run over the mean
/// and membership blocks (sigma2 included so the likelihood is comparable).
inline InitFit fit_nu_z(const Dataset& ds, const PriorConfig& cfg, ModelDims dims, int n_iter,
                        std::uint64_t seed, const SamplerOptions& opts = {}) {
  auto rng = make_stream(seed, 0, 0, Block::prior_draw);
  ModelState st = draw_initial_state(ds.N(), ds.P(), dims, cfg, rng);
  for (auto& f : st.phi) f.setZero();
  st.chi.setZero();
  return run_restricted(ds, std::move(st), cfg, nu_z_blocks(), n_iter, seed, opts);
}

/// Stage two: (nu, z) taken from `partial` and held fixed; everything else
/// starts from a prior draw and is sampled.
inline InitFit fit_theta(const ModelState& partial, const Dataset& ds, const PriorConfig& cfg,
                         ModelDims dims, int n_iter, std::uint64_t seed,
                         const SamplerOptions& opts = {}) {
  check_compatible(ds, partial);
  auto rng = make_stream(seed, 0, 0, Block::prior_draw);
  ModelState st = draw_prior_state(ds.N(), ds.P(), dims, cfg, rng);
  st.nu = partial.nu;
  st.z = partial.z;
  st.shrink.tau = partial.shrink.tau;
  st.pi = partial.pi;
  st.alpha3 = partial.alpha3;
  st.sigma2 = partial.sigma2;
  if (opts.orthogonal_phi) {
    for (auto& f : st.phi) f.setZero();
  }
  return run_restricted(ds, std::move(st), cfg, theta_blocks(), n_iter, seed, opts);
}

struct MultiStartResult {
  ModelState state;
  double loglik = 0.0;
  std::vector<double> stage1_loglik;
  std::vector<double> stage2_loglik;
  std::size_t stage1_winner = 0;
  std::size_t stage2_winner = 0;
};

inline std::uint64_t restart_seed(std::uint64_t seed, std::uint64_t stage, std::uint64_t r) {
  return stream_key({seed, stage, r});
}

/// Index of the largest value; ties go to the lowest index.
inline std::size_t argmax_first(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

/// Two-stage multiple start: best of n_try1 stage-one fits, then best of
/// n_try2 stage-two fits conditioned on the stage-one winner.
inline MultiStartResult multi_start(const Dataset& ds, const PriorConfig& cfg, ModelDims dims,
                                    const MsaConfig& msa, std::uint64_t seed,
                                    const SamplerOptions& opts = {},
                                    unsigned workers = worker_count()) {
  msa.validate();
  cfg.validate();
  dims.validate(ds.P());

  auto stage1 = parallel_map<InitFit>(
      static_cast<std::size_t>(msa.n_try1),
      [&](std::size_t r) { return fit_nu_z(ds, cfg, dims, msa.n_mcmc1, restart_seed(seed, 1, r), opts); },
      workers);
  MultiStartResult out;
  for (const auto& f : stage1) out.stage1_loglik.push_back(f.loglik);
  out.stage1_winner = argmax_first(out.stage1_loglik);
  const ModelState& partial = stage1[out.stage1_winner].state;

  auto stage2 = parallel_map<InitFit>(
      static_cast<std::size_t>(msa.n_try2),
      [&](std::size_t r) {
        return fit_theta(partial, ds, cfg, dims, msa.n_mcmc2, restart_seed(seed, 2, r), opts);
      },
      workers);
  for (const auto& f : stage2) out.stage2_loglik.push_back(f.loglik);
  out.stage2_winner = argmax_first(out.stage2_loglik);
  out.state = std::move(stage2[out.stage2_winner].state);
  out.loglik = out.stage2_loglik[out.stage2_winner];
  return out;
}

}  // namespace mixmemb
