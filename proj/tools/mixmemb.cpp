// Command-line driver: fit, select, simulate, summarize, rescale.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "mixmemb/mixmemb.hpp"

namespace {

using nlohmann::json;

// Flags shared by fit/select/summarize. Each one maps to a dotted config key
// and is applied after the config file, so the command line wins.
struct CommonFlags {
  std::string config;
  std::optional<std::string> data, out;
  std::optional<bool> header, standardize, orthogonal_phi, rescale, relabel, msa;
  std::optional<long long> k, m, iters, thin, seed, temper_levels;
  std::optional<double> temper_beta_max;

  void attach(CLI::App* app, bool model_flags) {
    app->add_option("--config", config, "JSON file of dotted keys");
    app->add_option("--data", data, "input CSV");
    app->add_option("--out", out, "output directory");
    app->add_option("--header", header, "CSV has a header row (true/false)");
    app->add_option("--standardize", standardize, "standardise columns before fitting");
    app->add_flag("--rescale", rescale, "rescale memberships (K = 2)");
    app->add_flag("--relabel", relabel, "relabel features across draws (--relabel=false disables)");
    if (!model_flags) return;
    app->add_option("--k", k, "number of features");
    app->add_option("--m", m, "number of covariance components");
    app->add_option("--iters", iters, "MCMC iterations");
    app->add_option("--thin", thin, "keep every thin-th draw");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--temper-levels", temper_levels, "tempering ladder size (0 disables)");
    app->add_option("--temper-beta-max", temper_beta_max, "largest ladder exponent");
    app->add_flag("--orthogonal-phi", orthogonal_phi, "constrain phi orthogonal to other components");
    app->add_option("--msa", msa, "use the multiple-start initialiser");
  }

  json overrides() const {
    json j = json::object();
    auto put = [&j](const char* key, const auto& v) {
      if (v) j[key] = *v;
    };
    put("data.path", data);
    put("output.dir", out);
    put("data.header", header);
    put("data.standardize", standardize);
    put("mode.orthogonal_phi", orthogonal_phi);
    put("mode.rescale", rescale);
    put("mode.relabel", relabel);
    put("msa.enabled", msa);
    put("model.k", k);
    put("model.m", m);
    put("mcmc.iters", iters);
    put("mcmc.thin", thin);
    put("mcmc.seed", seed);
    put("temper.levels", temper_levels);
    put("temper.beta_max", temper_beta_max);
    return j;
  }

  mixmemb::RunConfig resolve() const {
    mixmemb::RunConfig cfg = config.empty() ? mixmemb::RunConfig{} : mixmemb::load_config(config);
    mixmemb::apply_config(cfg, overrides());
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian mixed membership models with dependent Gaussian features"};
  app.require_subcommand(1);

  CommonFlags fit_flags, select_flags, sum_flags;
  auto* fit = app.add_subcommand("fit", "fit one model and summarise it");
  fit_flags.attach(fit, true);

  auto* select = app.add_subcommand("select", "fit a range of K and tabulate BIC/AIC/DIC");
  select_flags.attach(select, true);
  std::string k_range = "2:5";
  select->add_option("--k-range", k_range, "inclusive range lo:hi");

  auto* simulate = app.add_subcommand("simulate", "generate a synthetic data set");
  std::string recipe = "ss1", sim_out = "sim";
  std::optional<long long> sim_n;
  unsigned long long sim_seed = 1;
  simulate->add_option("--recipe", recipe, "ss1 or ss2");
  simulate->add_option("--n", sim_n, "number of observations");
  simulate->add_option("--seed", sim_seed, "random seed");
  simulate->add_option("--out", sim_out, "output directory");

  auto* summarize = app.add_subcommand("summarize", "summarise a stored chain");
  std::string sum_chain;
  summarize->add_option("--chain", sum_chain, "chain prefix (without .bin/.json)")->required();
  sum_flags.attach(summarize, false);

  auto* rescale = app.add_subcommand("rescale", "rescale every draw of a K = 2 chain");
  std::string rs_chain, rs_out;
  bool rs_relabel = false;
  rescale->add_option("--chain", rs_chain, "input chain prefix")->required();
  rescale->add_option("--out", rs_out, "output chain prefix")->required();
  rescale->add_flag("--relabel", rs_relabel, "relabel before rescaling");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return mixmemb::kExitConfig;
  }

  mixmemb::RunConfig cfg;
  const auto load = [&](const CommonFlags& f) {
    return mixmemb::guarded([&] { cfg = f.resolve(); });
  };

  if (*fit) {
    if (int rc = load(fit_flags)) return rc;
    return mixmemb::cmd_fit(cfg);
  }
  if (*select) {
    if (int rc = load(select_flags)) return rc;
    const auto colon = k_range.find(':');
    long long lo = 0, hi = 0;
    try {
      lo = std::stoll(k_range.substr(0, colon));
      hi = colon == std::string::npos ? lo : std::stoll(k_range.substr(colon + 1));
    } catch (const std::exception&) {
      std::cerr << "config error: --k-range must look like 2:5\n";
      return mixmemb::kExitConfig;
    }
    return mixmemb::cmd_select(cfg, lo, hi);
  }
  if (*simulate) {
    std::optional<mixmemb::Index> n;
    if (sim_n) n = *sim_n;
    return mixmemb::cmd_simulate(recipe, n, sim_seed, sim_out);
  }
  if (*summarize) {
    if (int rc = load(sum_flags)) return rc;
    return mixmemb::cmd_summarize(sum_chain, cfg);
  }
  if (*rescale) return mixmemb::cmd_rescale(rs_chain, rs_out, rs_relabel);
  return 0;
}
