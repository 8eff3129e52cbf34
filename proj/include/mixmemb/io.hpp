#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "mixmemb/chain.hpp"
#include "mixmemb/errors.hpp"
#include "mixmemb/modelselect.hpp"
#include "mixmemb/postprocess.hpp"
#include "mixmemb/types.hpp"

namespace mixmemb::io {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Split CSV text into records of fields (RFC 4180: quoted fields may hold
/// commas, doubled quotes and line breaks). Blank lines are skipped.
/// Each record carries its 1-based starting line.
struct CsvRecord {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

inline std::vector<CsvRecord> parse_csv_text(const std::string& text) {
  std::vector<CsvRecord> out;
  CsvRecord rec;
  std::string field;
  bool in_quotes = false, field_started = false, any = false;
  std::size_t line = 1;
  rec.line = 1;
  auto end_field = [&] {
    rec.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    if (any) {
      end_field();
      out.push_back(std::move(rec));
    }
    rec = CsvRecord{};
    field.clear();
    field_started = false;
    any = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    if (!any) rec.line = line;
    switch (ch) {
      case '"':
        if (field_started && !field.empty())
          throw ParseError("stray quote inside unquoted field", line, rec.fields.size() + 1);
        in_quotes = true;
        field_started = any = true;
        break;
      case ',':
        any = true;
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(ch);
        field_started = any = true;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field", line, rec.fields.size() + 1);
  end_record();
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path, 0, 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline bool parse_double(const std::string& raw, double& out) {
  std::size_t a = 0, b = raw.size();
  while (a < b && std::isspace(static_cast<unsigned char>(raw[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(raw[b - 1]))) --b;
  if (a == b) return false;
  const std::string s = raw.substr(a, b - a);
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

/// Rectangular numeric table. Row indices in errors are 1-based data rows
/// (the header, if any, is not counted); columns are 1-based.
inline Dataset parse_dataset(const std::string& text, bool has_header) {
  auto recs = parse_csv_text(text);
  std::size_t first = has_header ? 1 : 0;
  if (recs.size() <= first) throw ParseError("no data rows", 0, 0);
  const std::size_t P = has_header ? recs[0].fields.size() : recs[first].fields.size();
  MatrixXd y(static_cast<Index>(recs.size() - first), static_cast<Index>(P));
  for (std::size_t r = first; r < recs.size(); ++r) {
    const std::size_t row = r - first + 1;
    if (recs[r].fields.size() != P) {
      throw ParseError("row " + std::to_string(row) + " has " +
                           std::to_string(recs[r].fields.size()) + " fields, expected " +
                           std::to_string(P),
                       row, 0);
    }
    for (std::size_t c = 0; c < P; ++c) {
      double v;
      if (!parse_double(recs[r].fields[c], v)) {
        throw ParseError("non-numeric cell '" + recs[r].fields[c] + "' at row " +
                             std::to_string(row) + ", column " + std::to_string(c + 1),
                         row, c + 1);
      }
      y(static_cast<Index>(row - 1), static_cast<Index>(c)) = v;
    }
  }
  return Dataset(std::move(y));
}

inline Dataset load_csv(const std::string& path, bool has_header) {
  return parse_dataset(read_file(path), has_header);
}

/// Shortest text that round-trips a double exactly.
inline std::string fmt(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void ensure_parent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

inline std::ofstream open_out(const std::string& path, bool binary = false) {
  ensure_parent(path);
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(open_out(path)) {}

  CsvWriter& row(const std::vector<std::string>& cells) {
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (j) out_ << ',';
      out_ << csv_quote(cells[j]);
    }
    out_ << '\n';
    return *this;
  }

 private:
  std::ofstream out_;
};

inline void write_dataset_csv(const Dataset& ds, const std::string& path) {
  CsvWriter w(path);
  std::vector<std::string> cells;
  for (Index p = 0; p < ds.P(); ++p) cells.push_back("y" + std::to_string(p + 1));
  w.row(cells);
  for (Index i = 0; i < ds.N(); ++i) {
    cells.clear();
    for (Index p = 0; p < ds.P(); ++p) cells.push_back(fmt(ds.y()(i, p)));
    w.row(cells);
  }
}

// ---------------------------------------------------------------------------
// Standardisation
// ---------------------------------------------------------------------------

struct Standardization {
  VectorXd center;
  VectorXd scale;
};

/// Column means and sample standard deviations (n - 1 denominator).
inline Standardization column_moments(const Dataset& ds) {
  if (ds.N() < 2) throw DimensionError("standardising needs at least two rows");
  Standardization s;
  s.center = ds.y().colwise().mean().transpose();
  s.scale.resize(ds.P());
  for (Index p = 0; p < ds.P(); ++p) {
    const double ss = (ds.y().col(p).array() - s.center[p]).square().sum();
    s.scale[p] = std::sqrt(ss / static_cast<double>(ds.N() - 1));
    if (!(s.scale[p] > 0.0))
      throw DimensionError("column " + std::to_string(p + 1) + " is constant; cannot standardise");
  }
  return s;
}

inline Dataset apply_standardization(const Dataset& ds, const Standardization& s) {
  MatrixXd y = (ds.y().rowwise() - s.center.transpose()).array().rowwise() /
               s.scale.transpose().array();
  return Dataset(std::move(y));
}

inline std::pair<Dataset, Standardization> standardize(const Dataset& ds) {
  Standardization s = column_moments(ds);
  return {apply_standardization(ds, s), s};
}

inline Dataset destandardize(const Dataset& ds, const Standardization& s) {
  MatrixXd y = (ds.y().array().rowwise() * s.scale.transpose().array()).rowwise() +
               s.center.transpose().array();
  return Dataset(std::move(y));
}

/// Map feature means and covariance components back to data units. Because
/// memberships sum to one, the column centre moves every nu_k. sigma2 stays on
/// the standardised scale (it is a per-column variance only there).
inline ModelState destandardize_state(const ModelState& st, const Standardization& s) {
  ModelState out = st;
  out.nu = (st.nu.array().rowwise() * s.scale.transpose().array()).rowwise() +
           s.center.transpose().array();
  for (auto& f : out.phi) f = f.array().rowwise() * s.scale.transpose().array();
  return out;
}

// ---------------------------------------------------------------------------
// Chain persistence
// ---------------------------------------------------------------------------

inline constexpr int kChainSchemaVersion = 1;

struct FieldLayout {
  std::string name;
  Index rows = 0, cols = 0;
  std::size_t offset = 0;  // in 8-byte words from the start of the record
};

/// Record layout: iteration (uint64), loglik, then every parameter block
/// flattened row-major.
inline std::vector<FieldLayout> record_layout(ModelDims dims, Index N, Index P) {
  const Index K = dims.K, M = dims.M;
  std::vector<FieldLayout> f;
  std::size_t off = 0;
  auto add = [&](std::string name, Index r, Index c) {
    f.push_back({std::move(name), r, c, off});
    off += static_cast<std::size_t>(r * c);
  };
  add("iteration", 1, 1);
  add("loglik", 1, 1);
  add("nu", K, P);
  for (Index m = 0; m < M; ++m) add("phi" + std::to_string(m + 1), K, P);
  add("chi", N, M);
  add("z", N, K);
  add("pi", K, 1);
  add("alpha3", 1, 1);
  add("sigma2", 1, 1);
  for (Index m = 0; m < M; ++m) add("gamma" + std::to_string(m + 1), K, P);
  add("delta", K, M);
  add("tau_tilde", K, M);
  add("a1", K, 1);
  add("a2", K, 1);
  add("tau", K, 1);
  return f;
}

inline std::size_t record_words(const std::vector<FieldLayout>& layout) {
  const auto& last = layout.back();
  return last.offset + static_cast<std::size_t>(last.rows * last.cols);
}

namespace detail {

template <typename Fn>
void visit_blocks(ModelState& st, Fn&& fn) {
  fn(st.nu);
  for (auto& f : st.phi) fn(f);
  fn(st.chi);
  fn(st.z);
  fn(st.pi);
  fn(st.alpha3);
  fn(st.sigma2);
  for (auto& g : st.shrink.gamma) fn(g);
  fn(st.shrink.delta);
  fn(st.shrink.tau_tilde);
  fn(st.shrink.a1);
  fn(st.shrink.a2);
  fn(st.shrink.tau);
}

struct Packer {
  double* out;
  void operator()(double& v) { *out++ = v; }
  template <typename D>
  void operator()(Eigen::PlainObjectBase<D>& m) {
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c) *out++ = m(r, c);
  }
};

struct Unpacker {
  const double* in;
  void operator()(double& v) { v = *in++; }
  template <typename D>
  void operator()(Eigen::PlainObjectBase<D>& m) {
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c) m(r, c) = *in++;
  }
};

}  // namespace detail

inline std::vector<double> pack_record(std::uint64_t iteration, double loglik, const ModelState& st) {
  ModelState tmp = st;  // visit_blocks takes a mutable state
  const auto layout = record_layout(ModelDims{st.K(), st.M()}, st.N(), st.P());
  std::vector<double> rec(record_words(layout));
  std::memcpy(&rec[0], &iteration, sizeof iteration);
  rec[1] = loglik;
  detail::visit_blocks(tmp, detail::Packer{rec.data() + 2});
  return rec;
}

inline json chain_header(const ChainStore& chain) {
  const auto layout = record_layout(chain.dims, chain.N, chain.P);
  json h;
  h["schema_version"] = kChainSchemaVersion;
  h["K"] = chain.dims.K;
  h["M"] = chain.dims.M;
  h["N"] = chain.N;
  h["P"] = chain.P;
  h["seed"] = chain.seed;
  h["n_records"] = chain.size();
  h["record_words"] = record_words(layout);
  h["byte_order"] = "little";
  json fields = json::array();
  for (const auto& f : layout)
    fields.push_back({{"name", f.name}, {"rows", f.rows}, {"cols", f.cols}, {"offset", f.offset}});
  h["fields"] = fields;
  auto vec = [](const VectorXd& v) {
    json a = json::array();
    for (Index j = 0; j < v.size(); ++j) a.push_back(v[j]);
    return a;
  };
  h["center"] = vec(chain.center);
  h["scale"] = vec(chain.scale);
  return h;
}

/// Writes `<prefix>.bin` (records back to back, 8 bytes per word, host byte
/// order) and `<prefix>.json` (header and field layout).
inline void write_chain(const ChainStore& chain, const std::string& prefix) {
  {
    auto out = open_out(prefix + ".json");
    out << chain_header(chain).dump(2) << '\n';
  }
  auto out = open_out(prefix + ".bin", true);
  for (std::size_t t = 0; t < chain.size(); ++t) {
    const auto rec = pack_record(chain.iteration[t], chain.loglik[t], chain.draws[t]);
    out.write(reinterpret_cast<const char*>(rec.data()),
              static_cast<std::streamsize>(rec.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("short write to " + prefix + ".bin");
}

inline ChainStore read_chain(const std::string& prefix) {
  json h;
  try {
    h = json::parse(read_file(prefix + ".json"));
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad chain header: ") + e.what(), 0, 0);
  }
  try {
    if (h.at("schema_version").get<int>() != kChainSchemaVersion)
      throw ParseError("unsupported chain schema version", 0, 0);
    ChainStore chain;
    chain.dims = ModelDims{h.at("K").get<Index>(), h.at("M").get<Index>()};
    chain.N = h.at("N").get<Index>();
    chain.P = h.at("P").get<Index>();
    chain.seed = h.at("seed").get<std::uint64_t>();
    const auto n = h.at("n_records").get<std::size_t>();
    const auto words = record_words(record_layout(chain.dims, chain.N, chain.P));
    if (h.at("record_words").get<std::size_t>() != words)
      throw ParseError("chain header record size does not match its dimensions", 0, 0);
    auto vec = [](const json& a) {
      VectorXd v(static_cast<Index>(a.size()));
      for (std::size_t j = 0; j < a.size(); ++j) v[static_cast<Index>(j)] = a[j].get<double>();
      return v;
    };
    chain.center = vec(h.at("center"));
    chain.scale = vec(h.at("scale"));

    const std::string bytes = read_file(prefix + ".bin");
    if (bytes.size() != n * words * sizeof(double))
      throw ParseError("chain body has " + std::to_string(bytes.size()) + " bytes, expected " +
                           std::to_string(n * words * sizeof(double)),
                       0, 0);
    std::vector<double> rec(words);
    for (std::size_t t = 0; t < n; ++t) {
      std::memcpy(rec.data(), bytes.data() + t * words * sizeof(double), words * sizeof(double));
      std::uint64_t it;
      std::memcpy(&it, &rec[0], sizeof it);
      ModelState st = ModelState::zeros(chain.N, chain.P, chain.dims);
      detail::visit_blocks(st, detail::Unpacker{rec.data() + 2});
      chain.push(it, std::move(st), rec[1]);
    }
    return chain;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad chain header: ") + e.what(), 0, 0);
  }
}

/// One row per stored draw, one column per scalar, named like nu[k,p].
inline void write_chain_csv(const ChainStore& chain, const std::string& path) {
  CsvWriter w(path);
  const auto layout = record_layout(chain.dims, chain.N, chain.P);
  std::vector<std::string> cells;
  for (const auto& f : layout) {
    if (f.rows * f.cols == 1) {
      cells.push_back(f.name);
      continue;
    }
    for (Index r = 0; r < f.rows; ++r)
      for (Index c = 0; c < f.cols; ++c)
        cells.push_back(f.cols == 1 ? f.name + "[" + std::to_string(r + 1) + "]"
                                    : f.name + "[" + std::to_string(r + 1) + "," +
                                          std::to_string(c + 1) + "]");
  }
  w.row(cells);
  for (std::size_t t = 0; t < chain.size(); ++t) {
    const auto rec = pack_record(chain.iteration[t], chain.loglik[t], chain.draws[t]);
    cells.clear();
    cells.push_back(std::to_string(chain.iteration[t]));
    for (std::size_t j = 1; j < rec.size(); ++j) cells.push_back(fmt(rec[j]));
    w.row(cells);
  }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json matrix_json(const MatrixXd& m) {
  json a = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(row);
  }
  return a;
}

inline json vector_json(const VectorXd& v) {
  json a = json::array();
  for (Index j = 0; j < v.size(); ++j) a.push_back(v[j]);
  return a;
}

inline json interval_json(const Interval& iv) {
  return {{"median", matrix_json(iv.median)},
          {"lower", matrix_json(iv.lower)},
          {"upper", matrix_json(iv.upper)}};
}

inline json ic_json(const IcReport& r) {
  return {{"k", r.k}, {"d", r.d}, {"bic", r.bic}, {"aic", r.aic}, {"dic", r.dic},
          {"mean_loglik", r.mean_loglik}};
}

inline json state_json(const ModelState& st) {
  json j;
  j["nu"] = matrix_json(st.nu);
  json phi = json::array();
  for (const auto& f : st.phi) phi.push_back(matrix_json(f));
  j["phi"] = phi;
  j["chi"] = matrix_json(st.chi);
  j["z"] = matrix_json(st.z);
  j["pi"] = vector_json(st.pi);
  j["alpha3"] = st.alpha3;
  j["sigma2"] = st.sigma2;
  return j;
}

inline json report_json(const FitReport& rep) {
  json j;
  j["K"] = rep.K;
  j["M"] = rep.M;
  j["N"] = rep.N;
  j["P"] = rep.P;
  j["n_draws"] = rep.n_draws;
  j["nu"] = interval_json(rep.nu);
  j["z"] = interval_json(rep.z);
  j["pi"] = interval_json(rep.pi);
  j["sigma2"] = interval_json(rep.sigma2);
  j["alpha3"] = interval_json(rep.alpha3);
  j["covariance"] = interval_json(rep.covariance);
  j["eigenvalues"] = interval_json(rep.eigenvalues);
  j["median_covariance_eigenvalues"] = vector_json(rep.median_cov_eigenvalues);
  j["median_covariance_eigenvectors"] = matrix_json(rep.median_cov_eigenvectors);
  if (rep.ic) j["ic"] = ic_json(*rep.ic);
  return j;
}

inline void write_json(const json& j, const std::string& path) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

/// Long-format feature means: feature, dimension, median, lower, upper.
/// When a standardisation record is given, values are mapped to data units.
inline void write_feature_means_csv(const FitReport& rep, const std::string& path,
                                    const Standardization* s = nullptr) {
  CsvWriter w(path);
  w.row({"feature", "dim", "median", "lower", "upper"});
  for (Index k = 0; k < rep.K; ++k) {
    for (Index p = 0; p < rep.P; ++p) {
      double v[3] = {rep.nu.median(k, p), rep.nu.lower(k, p), rep.nu.upper(k, p)};
      if (s)
        for (double& x : v) x = x * s->scale[p] + s->center[p];
      w.row({std::to_string(k + 1), std::to_string(p + 1), fmt(v[0]), fmt(v[1]), fmt(v[2])});
    }
  }
}

/// Long-format memberships: observation, feature, median, lower, upper.
inline void write_membership_csv(const FitReport& rep, const std::string& path) {
  CsvWriter w(path);
  w.row({"obs", "feature", "median", "lower", "upper"});
  for (Index i = 0; i < rep.N; ++i)
    for (Index k = 0; k < rep.K; ++k)
      w.row({std::to_string(i + 1), std::to_string(k + 1), fmt(rep.z.median(i, k)),
             fmt(rep.z.lower(i, k)), fmt(rep.z.upper(i, k))});
}

inline void write_ic_csv(const std::vector<IcReport>& reports, const std::string& path) {
  CsvWriter w(path);
  w.row({"k", "d", "bic", "aic", "dic", "mean_loglik"});
  for (const auto& r : reports)
    w.row({std::to_string(r.k), std::to_string(r.d), fmt(r.bic), fmt(r.aic), fmt(r.dic),
           fmt(r.mean_loglik)});
}

inline void write_ic_json(const std::vector<IcReport>& reports, const std::string& path) {
  json a = json::array();
  for (const auto& r : reports) a.push_back(ic_json(r));
  write_json(a, path);
}

inline void write_elbow_csv(const std::vector<ElbowPoint>& pts, const std::string& path) {
  CsvWriter w(path);
  w.row({"k", "mean_loglik"});
  for (const auto& p : pts) w.row({std::to_string(p.k), fmt(p.mean_loglik)});
}

}  // namespace mixmemb::io
