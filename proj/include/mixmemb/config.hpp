#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "json.hpp"

#include "mixmemb/errors.hpp"
#include "mixmemb/initializer.hpp"
#include "mixmemb/io.hpp"
#include "mixmemb/modelselect.hpp"
#include "mixmemb/sampler.hpp"
#include "mixmemb/tempering.hpp"
#include "mixmemb/types.hpp"

namespace mixmemb {

struct RunConfig {
  std::string data;
  bool header = true;
  bool standardize = true;
  ModelDims dims{2, 1};
  PriorConfig prior;
  bool use_msa = true;
  MsaConfig msa;
  int temper_levels = 10;
  double temper_beta_max = 8.0;
  double temper_mix_prob = 0.1;
  std::uint64_t n_iter = 10000;
  std::uint64_t thin = 10;
  std::uint64_t seed = 1;
  std::string out = "out";
  bool orthogonal_phi = false;
  bool rescale = false;
  bool relabel = true;
  NuTempering nu_tempering = NuTempering::likelihood_only;
  DicDensity dic_density = DicDensity::marginal;

  TemperSchedule schedule() const {
    if (temper_levels == 0) return TemperSchedule::none();
    return TemperSchedule::geometric(temper_levels, temper_beta_max, temper_mix_prob);
  }

  SamplerOptions sampler_options() const { return SamplerOptions{orthogonal_phi, nu_tempering}; }

  void validate() const {
    if (data.empty()) throw ConfigError("data path is empty");
    if (out.empty()) throw ConfigError("output directory is empty");
    if (thin < 1) throw ConfigError("thin must be at least 1");
    if (n_iter < thin) throw ConfigError("iterations must be at least thin");
    if (dims.K < 2) throw ConfigError("K must be at least 2");
    if (dims.M < 1) throw ConfigError("M must be at least 1");
    if (temper_levels < 0) throw ConfigError("temper levels must be nonnegative");
    if (rescale && dims.K != 2) throw ConfigError("rescale is only available for K = 2");
    prior.validate();
    if (use_msa) msa.validate();
    schedule().validate();
  }
};

namespace detail {

using json = nlohmann::json;

template <typename T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

inline std::uint64_t get_count(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ConfigError("config key '" + key + "' must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

using Setter = std::function<void(RunConfig&, const json&, const std::string&)>;

inline const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto dbl = [&t](const char* key, double PriorConfig::*field) {
      t[key] = [field](RunConfig& c, const json& v, const std::string& k) {
        c.prior.*field = get_as<double>(v, k);
      };
    };
    auto cnt = [&t](const char* key, int MsaConfig::*field) {
      t[key] = [field](RunConfig& c, const json& v, const std::string& k) {
        c.msa.*field = static_cast<int>(get_count(v, k));
      };
    };
    auto flag = [&t](const char* key, bool RunConfig::*field) {
      t[key] = [field](RunConfig& c, const json& v, const std::string& k) {
        c.*field = get_as<bool>(v, k);
      };
    };
    t["data.path"] = [](RunConfig& c, const json& v, const std::string& k) {
      c.data = get_as<std::string>(v, k);
    };
    flag("data.header", &RunConfig::header);
    flag("data.standardize", &RunConfig::standardize);
    t["model.k"] = [](RunConfig& c, const json& v, const std::string& k) {
      c.dims.K = static_cast<Index>(get_count(v, k));
    };
    t["model.m"] = [](RunConfig& c, const json& v, const std::string& k) {
      c.dims.M = static_cast<Index>(get_count(v, k));
    };
    dbl("prior.alpha", &PriorConfig::alpha);
    dbl("prior.beta", &PriorConfig::beta);
    dbl("prior.alpha0", &PriorConfig::alpha0);
    dbl("prior.beta0", &PriorConfig::beta0);
    dbl("prior.nu_gamma", &PriorConfig::nu_gamma);
    dbl("prior.alpha1", &PriorConfig::alpha1);
    dbl("prior.beta1", &PriorConfig::beta1);
    dbl("prior.alpha2", &PriorConfig::alpha2);
    dbl("prior.beta2", &PriorConfig::beta2);
    dbl("prior.b", &PriorConfig::b);
    dbl("prior.eps1", &PriorConfig::eps1);
    dbl("prior.eps2", &PriorConfig::eps2);
    dbl("prior.a_z", &PriorConfig::a_z);
    dbl("prior.a_pi", &PriorConfig::a_pi);
    dbl("prior.sigma2_alpha3", &PriorConfig::sigma2_alpha3);
    t["prior.c"] = [](RunConfig& c, const json& v, const std::string& k) {
      if (!v.is_array()) throw ConfigError("config key '" + k + "' must be an array");
      c.prior.c.resize(static_cast<Index>(v.size()));
      for (std::size_t j = 0; j < v.size(); ++j)
        c.prior.c[static_cast<Index>(j)] = get_as<double>(v[j], k);
    };
    flag("msa.enabled", &RunConfig::use_msa);
    cnt("msa.n_try1", &MsaConfig::n_try1);
    cnt("msa.n_try2", &MsaConfig::n_try2);
    cnt("msa.n_mcmc1", &MsaConfig::n_mcmc1);
    cnt("msa.n_mcmc2", &MsaConfig::n_mcmc2);
    t["temper.levels"] = [](RunConfig& c, const json& v, const std::string& k) {
      c.temper_levels = static_cast<int>(get_count(v, k));
    };
    t["temper.beta_max"] = [](RunConfig& c, const json& v, const std::string& k) {
      c.temper_beta_max = get_as<double>(v, k);
    };
    t["temper.mix_prob"] = [](RunConfig& c, const json& v, const std::string& k) {
      c.temper_mix_prob = get_as<double>(v, k);
    };
    t["mcmc.iters"] = [](RunConfig& c, const json& v, const std::string& k) {
      c.n_iter = get_count(v, k);
    };
    t["mcmc.thin"] = [](RunConfig& c, const json& v, const std::string& k) {
      c.thin = get_count(v, k);
    };
    t["mcmc.seed"] = [](RunConfig& c, const json& v, const std::string& k) {
      c.seed = get_count(v, k);
    };
    t["output.dir"] = [](RunConfig& c, const json& v, const std::string& k) {
      c.out = get_as<std::string>(v, k);
    };
    flag("mode.orthogonal_phi", &RunConfig::orthogonal_phi);
    flag("mode.rescale", &RunConfig::rescale);
    flag("mode.relabel", &RunConfig::relabel);
    t["mode.nu_tempering"] = [](RunConfig& c, const json& v, const std::string& k) {
      const auto s = get_as<std::string>(v, k);
      if (s == "likelihood_only") c.nu_tempering = NuTempering::likelihood_only;
      else if (s == "prior_scaled") c.nu_tempering = NuTempering::prior_scaled;
      else throw ConfigError("mode.nu_tempering must be likelihood_only or prior_scaled");
    };
    t["mode.dic_density"] = [](RunConfig& c, const json& v, const std::string& k) {
      const auto s = get_as<std::string>(v, k);
      if (s == "marginal") c.dic_density = DicDensity::marginal;
      else if (s == "conditional") c.dic_density = DicDensity::conditional;
      else throw ConfigError("mode.dic_density must be marginal or conditional");
    };
    return t;
  }();
  return table;
}

}  // namespace detail

/// Apply a flat object of dotted keys ("prior.alpha": 2, ...). Unknown keys
/// are rejected.
inline void apply_config(RunConfig& cfg, const nlohmann::json& flat) {
  if (!flat.is_object()) throw ConfigError("config must be a JSON object");
  const auto& table = detail::setters();
  for (auto it = flat.begin(); it != flat.end(); ++it) {
    auto s = table.find(it.key());
    if (s == table.end()) throw ConfigError("unknown config key '" + it.key() + "'");
    s->second(cfg, it.value(), it.key());
  }
}

inline std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : detail::setters()) keys.push_back(k);
  return keys;
}

inline RunConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const ParseError&) {
    throw ConfigError("cannot open config file " + path);
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  RunConfig cfg;
  apply_config(cfg, j);
  return cfg;
}

}  // namespace mixmemb
