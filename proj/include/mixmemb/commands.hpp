#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mixmemb/chain.hpp"
#include "mixmemb/config.hpp"
#include "mixmemb/errors.hpp"
#include "mixmemb/initializer.hpp"
#include "mixmemb/io.hpp"
#include "mixmemb/modelselect.hpp"
#include "mixmemb/parallel.hpp"
#include "mixmemb/postprocess.hpp"
#include "mixmemb/simgen.hpp"

namespace mixmemb {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitData = 3, kExitNumerical = 4 };

/// Run `body`, mapping library exceptions to exit codes and printing the
/// message to `err`. Unexpected errors (I/O failures and the like) return 1.
inline int guarded(const std::function<void()>& body, std::ostream& err = std::cerr) {
  try {
    body();
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const DimensionError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DomainError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

struct PreparedData {
  Dataset raw;
  Dataset fit;  // standardised copy when requested, else raw
  std::optional<io::Standardization> record;
};

inline PreparedData prepare_data(const RunConfig& cfg) {
  PreparedData d;
  d.raw = io::load_csv(cfg.data, cfg.header);
  if (cfg.standardize) {
    auto [s, rec] = io::standardize(d.raw);
    d.fit = std::move(s);
    d.record = std::move(rec);
  } else {
    d.fit = d.raw;
  }
  return d;
}

/// Initial state (multiple start or plain draw) followed by the main chain.
inline ChainStore fit_chain(const Dataset& ds, const RunConfig& cfg, ModelDims dims,
                            unsigned workers = 1) {
  const SamplerOptions opts = cfg.sampler_options();
  ModelState init;
  if (cfg.use_msa) {
    init = multi_start(ds, cfg.prior, dims, cfg.msa, cfg.seed, opts, workers).state;
  } else {
    auto rng = make_stream(cfg.seed, 0, 0, Block::prior_draw);
    init = draw_initial_state(ds.N(), ds.P(), dims, cfg.prior, rng);
  }
  ChainOptions copts;
  copts.sampler = opts;
  return run_chain(ds, cfg.prior, dims, cfg.schedule(), cfg.n_iter, cfg.thin, cfg.seed,
                   std::move(init), copts);
}

/// Relabel and/or rescale as configured; relabelling runs first.
inline ChainStore postprocess_chain(const ChainStore& chain, bool relabel_draws, bool rescale_draws) {
  ChainStore out = relabel_draws ? relabel(chain) : chain;
  if (rescale_draws) out = rescale_chain(out);
  return out;
}

inline void write_fit_outputs(const ChainStore& processed, const Dataset& ds,
                              const std::optional<io::Standardization>& record,
                              DicDensity density, const std::string& dir) {
  FitReport rep = summarize(processed);
  rep.ic = ic_report(processed, ds, density);
  auto j = io::report_json(rep);
  if (record) {
    j["standardization"] = {{"center", io::vector_json(record->center)},
                            {"scale", io::vector_json(record->scale)}};
  }
  io::write_json(j, dir + "/fit_report.json");
  io::write_feature_means_csv(rep, dir + "/feature_means.csv", record ? &*record : nullptr);
  io::write_membership_csv(rep, dir + "/membership.csv");
}

/// fit: chain to <out>/chain.{bin,json}, summaries to <out>/fit_report.json,
/// feature_means.csv and membership.csv.
inline int cmd_fit(const RunConfig& cfg, std::ostream& err = std::cerr) {
  return guarded(
      [&] {
        cfg.validate();
        PreparedData d = prepare_data(cfg);
        cfg.dims.validate(d.fit.P());
        ChainStore chain = fit_chain(d.fit, cfg, cfg.dims, worker_count());
        if (d.record) {
          chain.center = d.record->center;
          chain.scale = d.record->scale;
        }
        io::write_chain(chain, cfg.out + "/chain");
        const ChainStore processed = postprocess_chain(chain, cfg.relabel, cfg.rescale);
        write_fit_outputs(processed, d.fit, d.record, cfg.dic_density, cfg.out);
      },
      err);
}

/// select: one fit per K in [k_lo, k_hi], fanned out over worker threads.
/// Writes <out>/ic_table.{csv,json}, <out>/elbow.csv and <out>/k<K>/chain.*.
inline int cmd_select(const RunConfig& cfg, Index k_lo, Index k_hi, std::ostream& err = std::cerr) {
  return guarded(
      [&] {
        cfg.validate();
        if (k_lo < 2 || k_hi < k_lo) throw ConfigError("k range must satisfy 2 <= lo <= hi");
        PreparedData d = prepare_data(cfg);
        const auto n = static_cast<std::size_t>(k_hi - k_lo + 1);
        for (std::size_t j = 0; j < n; ++j) ModelDims{k_lo + static_cast<Index>(j), cfg.dims.M}.validate(d.fit.P());
        auto reports = parallel_map<IcReport>(n, [&](std::size_t j) {
          const ModelDims dims{k_lo + static_cast<Index>(j), cfg.dims.M};
          ChainStore chain = fit_chain(d.fit, cfg, dims, 1);
          if (d.record) {
            chain.center = d.record->center;
            chain.scale = d.record->scale;
          }
          io::write_chain(chain, cfg.out + "/k" + std::to_string(dims.K) + "/chain");
          return ic_report(cfg.relabel ? relabel(chain) : chain, d.fit, cfg.dic_density);
        });
        io::write_ic_csv(reports, cfg.out + "/ic_table.csv");
        io::write_ic_json(reports, cfg.out + "/ic_table.json");
        io::write_elbow_csv(elbow_data(reports), cfg.out + "/elbow.csv");
        const IcChoice c = choose_k(reports);
        std::cout << "BIC picks K=" << c.bic_k << ", AIC picks K=" << c.aic_k
                  << ", DIC picks K=" << c.dic_k << '\n';
      },
      err);
}

/// simulate: <out>/data.csv and <out>/truth.json for recipe "ss1" or "ss2".
inline int cmd_simulate(const std::string& recipe, std::optional<Index> n, std::uint64_t seed,
                        const std::string& out, std::ostream& err = std::cerr) {
  return guarded(
      [&] {
        sim::SimRecipe r;
        if (recipe == "ss1") r = sim::ss1_recipe(n.value_or(250));
        else if (recipe == "ss2") r = sim::ss2_recipe(n.value_or(200));
        else throw ConfigError("unknown recipe '" + recipe + "' (expected ss1 or ss2)");
        if (out.empty()) throw ConfigError("output directory is empty");
        const sim::SimResult s = sim::generate(r, seed);
        io::write_dataset_csv(s.data, out + "/data.csv");
        auto j = io::state_json(s.truth);
        j["recipe"] = recipe;
        j["seed"] = seed;
        j["mixture_component"] = s.mixture_component;
        io::write_json(j, out + "/truth.json");
      },
      err);
}

/// summarize: re-summarise a stored chain. IC values need the data the chain
/// was fitted to; pass an empty path to skip them.
inline int cmd_summarize(const std::string& chain_prefix, const RunConfig& cfg,
                         std::ostream& err = std::cerr) {
  return guarded(
      [&] {
        if (cfg.out.empty()) throw ConfigError("output directory is empty");
        const ChainStore chain = io::read_chain(chain_prefix);
        if (cfg.rescale && chain.dims.K != 2) throw ConfigError("rescale is only available for K = 2");
        const ChainStore processed = postprocess_chain(chain, cfg.relabel, cfg.rescale);
        std::optional<io::Standardization> record;
        if (chain.center.size() > 0) record = io::Standardization{chain.center, chain.scale};
        if (cfg.data.empty()) {
          FitReport rep = summarize(processed);
          io::write_json(io::report_json(rep), cfg.out + "/fit_report.json");
          io::write_feature_means_csv(rep, cfg.out + "/feature_means.csv", record ? &*record : nullptr);
          io::write_membership_csv(rep, cfg.out + "/membership.csv");
          return;
        }
        Dataset ds = io::load_csv(cfg.data, cfg.header);
        if (record) ds = io::apply_standardization(ds, *record);
        write_fit_outputs(processed, ds, record, cfg.dic_density, cfg.out);
      },
      err);
}

/// rescale: relabel (optional) and rescale every draw of a K = 2 chain.
inline int cmd_rescale(const std::string& chain_prefix, const std::string& out_prefix, bool relabel_first,
                       std::ostream& err = std::cerr) {
  return guarded(
      [&] {
        const ChainStore chain = io::read_chain(chain_prefix);
        if (chain.dims.K != 2) throw ConfigError("rescale is only available for K = 2");
        io::write_chain(postprocess_chain(chain, relabel_first, true), out_prefix);
      },
      err);
}

}  // namespace mixmemb
