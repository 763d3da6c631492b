#pragma once

// JSON and CSV plumbing shared by the command-line tool and the tests.
//
// Kernel documents:
//   { "N": 3, "p": [ { "i": 1, "j": 2, "k": 1, "value": 0.25 }, ... ] }
//   { "symmetric": { "N": 5 } }
//   { "one_parameter_q": { "q": 0.25 } }
//   { "asymmetric": {} }
// or a string naming a file that holds one of the above.
//
// Metric documents: "word", "fenced", or
//   { "custom": [ { "i": 1, "j": 2, "k": 1, "weight": 1.5 }, ... ] }

#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "gwalk/chain.hpp"
#include "gwalk/errors.hpp"
#include "gwalk/groupoid.hpp"
#include "gwalk/kernel.hpp"
#include "gwalk/limits.hpp"
#include "gwalk/montecarlo.hpp"
#include "gwalk/oracle.hpp"
#include "gwalk/solver.hpp"

namespace gwalk::io {

using json = nlohmann::ordered_json;

/// Shortest round-trip decimal form, independent of the C locale.
inline std::string fmt(double x) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (res.ec != std::errc{}) throw NumericalFailure("cannot format number");
  return std::string(buf.data(), res.ptr);
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput("'" + path + "' is not valid JSON: " + e.what());
  }
}

namespace detail {

inline void only_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw InvalidInput(where + " must be a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!ok.count(key)) throw InvalidInput("unknown key '" + key + "' in " + where);
  }
}

inline const json& required(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw InvalidInput(where + " is missing '" + key + "'");
  return obj.at(key);
}

inline int as_int(const json& v, const std::string& what) {
  if (!v.is_number_integer()) throw InvalidInput(what + " must be an integer");
  return v.get<int>();
}

inline double as_number(const json& v, const std::string& what) {
  if (!v.is_number()) throw InvalidInput(what + " must be a number");
  return v.get<double>();
}

inline int as_sign(const json& v, const std::string& what) {
  const int k = as_int(v, what);
  if (k != 1 && k != -1) throw InvalidInput(what + " must be 1 or -1");
  return k;
}

}  // namespace detail

/// A kernel request as written, before validation.
struct KernelSpec {
  enum class Family { Explicit, Symmetric, OneParameter, Asymmetric };
  Family family = Family::Explicit;
  int n = 0;
  double q = 0.0;
  RawKernel raw;  // explicit kernels only

  std::string family_name() const {
    switch (family) {
      case Family::Symmetric: return "symmetric";
      case Family::OneParameter: return "one_parameter";
      case Family::Asymmetric: return "asymmetric";
      default: return "explicit";
    }
  }
};

inline KernelSpec parse_kernel_spec(const json& doc) {
  if (doc.is_string()) return parse_kernel_spec(read_json_file(doc.get<std::string>()));
  if (!doc.is_object()) throw InvalidInput("kernel must be an object or a file name");
  KernelSpec s;
  if (doc.contains("symmetric")) {
    detail::only_keys(doc, {"symmetric"}, "kernel");
    const json& body = doc.at("symmetric");
    detail::only_keys(body, {"N"}, "symmetric kernel");
    s.family = KernelSpec::Family::Symmetric;
    s.n = detail::as_int(detail::required(body, "N", "symmetric kernel"), "N");
    return s;
  }
  if (doc.contains("one_parameter_q")) {
    detail::only_keys(doc, {"one_parameter_q"}, "kernel");
    const json& body = doc.at("one_parameter_q");
    detail::only_keys(body, {"q"}, "one-parameter kernel");
    s.family = KernelSpec::Family::OneParameter;
    s.n = 3;
    s.q = detail::as_number(detail::required(body, "q", "one-parameter kernel"), "q");
    return s;
  }
  if (doc.contains("asymmetric")) {
    detail::only_keys(doc, {"asymmetric"}, "kernel");
    detail::only_keys(doc.at("asymmetric"), {}, "asymmetric kernel");
    s.family = KernelSpec::Family::Asymmetric;
    s.n = 3;
    return s;
  }
  detail::only_keys(doc, {"N", "p"}, "kernel");
  s.n = detail::as_int(detail::required(doc, "N", "kernel"), "N");
  s.raw.n = s.n;
  const json& p = detail::required(doc, "p", "kernel");
  if (!p.is_array()) throw InvalidInput("kernel 'p' must be an array");
  for (const json& e : p) {
    detail::only_keys(e, {"i", "j", "k", "value"}, "kernel entry");
    s.raw.entries.push_back({detail::as_int(detail::required(e, "i", "kernel entry"), "i"),
                             detail::as_int(detail::required(e, "j", "kernel entry"), "j"),
                             detail::as_sign(detail::required(e, "k", "kernel entry"), "k"),
                             detail::as_number(detail::required(e, "value", "kernel entry"), "value")});
  }
  return s;
}

/// Full validation report; named families are checked for their parameter
/// range first.
inline KernelCheck check_kernel(const KernelSpec& s) {
  switch (s.family) {
    case KernelSpec::Family::Symmetric:
      if (s.n < 3) {
        return KernelCheck{std::nullopt,
                           {{KernelViolation::Kind::TooFewWindows, 0, 0.0, "symmetric kernel needs N >= 3"}}};
      }
      return validate_kernel(symmetric_kernel(s.n).raw());
    case KernelSpec::Family::OneParameter:
      if (!(s.q > 0.0 && s.q < 0.5)) {
        return KernelCheck{std::nullopt,
                           {{KernelViolation::Kind::OutOfRange, 0, 0.0,
                             "one-parameter kernel needs 0 < q < 1/2, got q = " + fmt(s.q)}}};
      }
      return validate_kernel(one_parameter_kernel(s.q).raw());
    case KernelSpec::Family::Asymmetric:
      return validate_kernel(asymmetric_kernel().raw());
    default:
      return validate_kernel(s.raw);
  }
}

inline TransitionKernel build_kernel(const KernelSpec& s) {
  KernelCheck c = check_kernel(s);
  if (!c.ok()) throw InvalidInput("invalid transition kernel:\n" + c.report());
  return std::move(*c.kernel);
}

inline json kernel_to_json(const TransitionKernel& k) {
  json p = json::array();
  for (std::size_t idx = 0; idx < k.size(); ++idx) {
    const Generator g = generator_at(k.n(), idx);
    p.push_back({{"i", g.i}, {"j", g.j}, {"k", g.k}, {"value", k.probabilities()[idx]}});
  }
  return {{"N", k.n()}, {"p", p}};
}

inline Metric parse_metric(const json& doc, int n) {
  if (doc.is_string()) {
    const std::string name = doc.get<std::string>();
    if (name == "word") return Metric::word(n);
    if (name == "fenced") return Metric::fenced(n);
    throw InvalidInput("unknown metric '" + name + "' (expected word, fenced or a custom table)");
  }
  detail::only_keys(doc, {"custom"}, "metric");
  const json& table = detail::required(doc, "custom", "metric");
  if (!table.is_array()) throw InvalidInput("custom metric must be an array");
  std::vector<Metric::Entry> entries;
  for (const json& e : table) {
    detail::only_keys(e, {"i", "j", "k", "weight"}, "metric entry");
    entries.push_back({{detail::as_int(detail::required(e, "i", "metric entry"), "i"),
                        detail::as_int(detail::required(e, "j", "metric entry"), "j"),
                        detail::as_sign(detail::required(e, "k", "metric entry"), "k")},
                       detail::as_number(detail::required(e, "weight", "metric entry"), "weight")});
  }
  return Metric::custom(n, entries);
}

// Result documents.

inline json generator_values(int n, const std::vector<double>& v) {
  json out = json::array();
  for (std::size_t idx = 0; idx < v.size(); ++idx) {
    const Generator g = generator_at(n, idx);
    out.push_back({{"i", g.i}, {"j", g.j}, {"k", g.k}, {"value", v[idx]}});
  }
  return out;
}

inline json to_json(const RVector& r, const std::optional<RDerivatives>& d = std::nullopt) {
  json out;
  out["lambda"] = r.lambda;
  out["R"] = generator_values(r.n, r.values);
  if (d) {
    out["d1"] = generator_values(r.n, d->d1);
    out["d2"] = generator_values(r.n, d->d2);
  }
  out["iterations"] = r.iterations;
  out["residual"] = r.residual;
  return out;
}

inline json to_json(const HPartials& p) {
  return {{"h", p.h},
          {"d_lambda", p.d_lambda},
          {"d_z", p.d_z},
          {"d_lambda2", p.d_lambda2},
          {"d_lambda_z", p.d_lambda_z},
          {"d_z2", p.d_z2}};
}

inline json to_json(const LimitConstants& c) {
  json out{{"gamma", c.gamma}, {"sigma2", c.sigma2}, {"h_partials", to_json(c.partials)}, {"metric", c.metric}};
  if (!c.warnings.empty()) out["warnings"] = c.warnings;
  return out;
}

/// Closed-form constants in the LimitConstants layout, for one metric.
inline json closed_form_json(const ClosedForm& c, const std::string& metric) {
  const bool fenced = metric == "fenced";
  return {{"family", c.family},
          {"gamma", fenced ? c.gamma_fenced : c.gamma_word},
          {"sigma2", fenced ? c.sigma2_fenced : c.sigma2_word},
          {"metric", metric}};
}

inline json to_json(const TruncatedSeries& s) {
  return {{"truncation", s.truncation()},
          {"coeffs", s.coeffs},
          {"total_mass", s.total_mass()},
          {"dropped_mass", s.dropped_mass()},
          {"peak_states", s.peak_states}};
}

inline json to_json(const McReport& r) {
  json out{{"kind", r.kind},       {"metric", r.metric},       {"n_steps", r.n_steps},
           {"n_paths", r.n_paths}, {"seed", r.seed},           {"start", r.start},
           {"gamma_ref", r.gamma_ref}, {"gamma_hat", r.gamma_hat}, {"gamma_se", r.gamma_se},
           {"lln_band", r.lln_band}, {"lln_pass", r.lln_pass}};
  if (r.alt_start) {
    out["alt_start"] = *r.alt_start;
    out["gamma_hat_alt"] = r.gamma_hat_alt;
    out["gamma_se_alt"] = r.gamma_se_alt;
    out["alt_lln_pass"] = r.alt_lln_pass;
    out["initial_condition_pass"] = r.initial_condition_pass;
  }
  if (r.sigma2_ref) {
    out["sigma2_ref"] = *r.sigma2_ref;
    out["sigma2_hat"] = r.sigma2_hat;
    out["sigma2_band"] = {r.sigma2_band_lo, r.sigma2_band_hi};
    out["variance_pass"] = r.variance_pass;
    out["normality_stat"] = r.normality_stat;
    out["ks_threshold"] = r.ks_threshold;
    out["ks_pass"] = r.ks_pass;
  }
  out["pass"] = r.pass;
  return out;
}

inline json to_json(const LazyWalkReport& r) {
  return {{"N", r.n},
          {"n_steps", r.n_steps},
          {"seed", r.seed},
          {"steps_from_positive_length", r.from_positive},
          {"frequencies", {double(r.up) / double(std::max<std::uint64_t>(r.from_positive, 1)),
                           double(r.stay) / double(std::max<std::uint64_t>(r.from_positive, 1)),
                           double(r.down) / double(std::max<std::uint64_t>(r.from_positive, 1))}},
          {"expected", {r.expected_up, r.expected_stay, r.expected_down}},
          {"z_scores", {r.z_up, r.z_stay, r.z_down}},
          {"steps_from_unit", r.from_unit},
          {"up_from_unit", r.up_from_unit},
          {"pass", r.pass}};
}

// CSV writers: '.' decimals, LF line ends.

inline void write_trajectory_csv(std::ostream& os, const Trajectory& t) {
  os << "n,word_len,metric_len\n";
  for (std::size_t m = 0; m < t.lengths.size(); ++m) {
    os << m << ',' << t.lengths[m].word_len << ',' << fmt(t.lengths[m].metric_len) << '\n';
  }
}

inline void write_paths_csv(std::ostream& os, const McReport& r) {
  os << "path_index,final_word_len,final_metric_len,Z\n";
  const double root_n = std::sqrt(double(r.n_steps));
  for (const auto& p : r.paths) {
    os << p.index << ',' << p.word_len << ',' << fmt(p.metric_len) << ','
       << fmt((p.metric_len - r.gamma_ref * double(r.n_steps)) / root_n) << '\n';
  }
}

inline void write_csv_row(std::ostream& os, const std::vector<double>& row) {
  for (std::size_t t = 0; t < row.size(); ++t) os << (t ? "," : "") << fmt(row[t]);
  os << '\n';
}

/// Everything a subcommand may read from a config file. Unset optionals
/// fall back to per-command defaults.
struct RunConfig {
  std::optional<json> kernel;
  json metric = "word";
  std::optional<double> lambda;
  std::optional<double> z;
  std::optional<double> x;
  double tol = 1e-13;
  long max_iter = 1'000'000;
  std::optional<std::uint64_t> n_steps;
  std::optional<std::uint64_t> n_paths;
  std::uint64_t seed = 20240601;
  unsigned threads = 1;
  std::optional<double> gamma_ref;
  std::optional<double> sigma2_ref;
  std::optional<std::string> start;
  std::vector<double> q_grid;
  std::optional<std::string> target;
  std::optional<std::string> series;
  int window = 1;
  std::optional<std::uint64_t> max_steps;
  double mass_floor = 0.0;
  std::optional<double> prune_lambda;
  std::uint64_t state_cap = kDefaultStateCap;
  std::optional<int> kms_n;
  std::optional<std::string> output;
  std::optional<std::string> paths_csv;
  bool oracle = false;
};

inline RunConfig parse_run_config(const json& doc) {
  detail::only_keys(doc,
                    {"kernel", "metric", "lambda", "z", "x", "tol", "max_iter", "n_steps", "n_paths", "seed",
                     "threads", "gamma_ref", "sigma2_ref", "start", "q_grid", "target", "series", "window",
                     "max_steps", "mass_floor", "prune_lambda", "state_cap", "kms_n", "output", "paths_csv",
                     "oracle"},
                    "config");
  RunConfig c;
  auto num = [&](const char* key) { return detail::as_number(doc.at(key), key); };
  auto count = [&](const char* key) -> std::uint64_t {
    const json& v = doc.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) throw InvalidInput(std::string(key) + " must be a non-negative integer");
    return v.get<std::uint64_t>();
  };
  auto str = [&](const char* key) {
    if (!doc.at(key).is_string()) throw InvalidInput(std::string(key) + " must be a string");
    return doc.at(key).get<std::string>();
  };
  if (doc.contains("kernel")) c.kernel = doc.at("kernel");
  if (doc.contains("metric")) c.metric = doc.at("metric");
  if (doc.contains("lambda")) c.lambda = num("lambda");
  if (doc.contains("z")) c.z = num("z");
  if (doc.contains("x")) c.x = num("x");
  if (doc.contains("tol")) c.tol = num("tol");
  if (doc.contains("max_iter")) c.max_iter = static_cast<long>(count("max_iter"));
  if (doc.contains("n_steps")) c.n_steps = count("n_steps");
  if (doc.contains("n_paths")) c.n_paths = count("n_paths");
  if (doc.contains("seed")) c.seed = count("seed");
  if (doc.contains("threads")) c.threads = static_cast<unsigned>(count("threads"));
  if (doc.contains("gamma_ref")) c.gamma_ref = num("gamma_ref");
  if (doc.contains("sigma2_ref")) c.sigma2_ref = num("sigma2_ref");
  if (doc.contains("start")) c.start = str("start");
  if (doc.contains("q_grid")) {
    if (!doc.at("q_grid").is_array()) throw InvalidInput("q_grid must be an array of numbers");
    for (const json& v : doc.at("q_grid")) c.q_grid.push_back(detail::as_number(v, "q_grid entry"));
  }
  if (doc.contains("target")) c.target = str("target");
  if (doc.contains("series")) c.series = str("series");
  if (doc.contains("window")) c.window = detail::as_int(doc.at("window"), "window");
  if (doc.contains("max_steps")) c.max_steps = count("max_steps");
  if (doc.contains("mass_floor")) c.mass_floor = num("mass_floor");
  if (doc.contains("prune_lambda")) c.prune_lambda = num("prune_lambda");
  if (doc.contains("state_cap")) c.state_cap = count("state_cap");
  if (doc.contains("kms_n")) c.kms_n = detail::as_int(doc.at("kms_n"), "kms_n");
  if (doc.contains("output")) c.output = str("output");
  if (doc.contains("paths_csv")) c.paths_csv = str("paths_csv");
  if (doc.contains("oracle")) {
    if (!doc.at("oracle").is_boolean()) throw InvalidInput("oracle must be true or false");
    c.oracle = doc.at("oracle").get<bool>();
  }
  return c;
}

}  // namespace gwalk::io
