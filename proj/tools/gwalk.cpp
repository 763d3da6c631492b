// gwalk: command-line front end for the groupoid walk library.
//
// Exit codes: 0 success, 1 failed statistical check, 2 invalid input,
// 3 numerical failure.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>

#include "gwalk/chain.hpp"
#include "gwalk/errors.hpp"
#include "gwalk/groupoid.hpp"
#include "gwalk/io.hpp"
#include "gwalk/kernel.hpp"
#include "gwalk/limits.hpp"
#include "gwalk/montecarlo.hpp"
#include "gwalk/oracle.hpp"
#include "gwalk/solver.hpp"

namespace {

using gwalk::io::json;

enum Exit : int { kOk = 0, kStatFail = 1, kInvalid = 2, kNumerical = 3 };

/// Flags that override config-file keys. Each one lands in the config
/// document before validation, so file and flags share one schema.
struct Overrides {
  std::optional<std::string> config;
  json doc = json::object();
  std::vector<std::function<void()>> apply;

  template <class T>
  CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto slot = std::make_shared<std::optional<T>>();
    CLI::Option* opt = app->add_option(flag, *slot, help);
    apply.push_back([this, slot, key] {
      if (*slot) doc[key] = **slot;
    });
    return opt;
  }
};

// Inline JSON starts with a brace, bracket or quote; anything else is kept
// as a string (a file name or a metric name).
json json_arg(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (s[first] == '{' || s[first] == '[' || s[first] == '"')) {
    try {
      return json::parse(s);
    } catch (const json::parse_error& e) {
      throw gwalk::InvalidInput(std::string("inline JSON does not parse: ") + e.what());
    }
  }
  return s;
}

struct Common {
  Overrides ov;
  std::optional<std::string> kernel_arg;
  std::optional<int> symmetric_n;
  std::optional<double> q;
  bool asymmetric = false;
  std::optional<std::string> metric_arg;

  void attach(CLI::App* app, bool with_kernel = true) {
    app->add_option("--config", ov.config, "JSON config file; flags override its keys");
    if (with_kernel) {
      app->add_option("--kernel", kernel_arg, "kernel as inline JSON or a JSON file name");
      app->add_option("--symmetric", symmetric_n, "use the symmetric kernel on N windows");
      app->add_option("--q", q, "use the N = 3 one-parameter kernel with this q");
      app->add_flag("--asymmetric", asymmetric, "use the built-in asymmetric N = 3 kernel");
      app->add_option("--metric", metric_arg, "word, fenced, inline JSON or a JSON file name");
    }
    ov.add<std::string>(app, "--output,-o", "output", "write the result here instead of stdout");
  }

  gwalk::io::RunConfig resolve() {
    json doc = ov.config ? gwalk::io::read_json_file(*ov.config) : json::object();
    if (!doc.is_object()) throw gwalk::InvalidInput("config file must hold a JSON object");
    for (auto& f : ov.apply) f();
    for (const auto& [k, v] : ov.doc.items()) doc[k] = v;
    const int chosen = int(kernel_arg.has_value()) + int(symmetric_n.has_value()) + int(q.has_value()) + int(asymmetric);
    if (chosen > 1) throw gwalk::InvalidInput("give at most one of --kernel, --symmetric, --q, --asymmetric");
    if (kernel_arg) doc["kernel"] = json_arg(*kernel_arg);
    if (symmetric_n) doc["kernel"] = {{"symmetric", {{"N", *symmetric_n}}}};
    if (q) doc["kernel"] = {{"one_parameter_q", {{"q", *q}}}};
    if (asymmetric) doc["kernel"] = {{"asymmetric", json::object()}};
    if (metric_arg) {
      json m = json_arg(*metric_arg);
      if (m.is_string() && m != "word" && m != "fenced" && std::filesystem::exists(m.get<std::string>()))
        m = gwalk::io::read_json_file(m.get<std::string>());
      doc["metric"] = m;
    }
    return gwalk::io::parse_run_config(doc);
  }
};

gwalk::io::KernelSpec kernel_spec(const gwalk::io::RunConfig& c) {
  if (!c.kernel) throw gwalk::InvalidInput("no kernel given (use --kernel, --symmetric, --q or --asymmetric)");
  return gwalk::io::parse_kernel_spec(*c.kernel);
}

void emit(const gwalk::io::RunConfig& c, const std::string& text) {
  if (c.output) {
    std::ofstream out(*c.output, std::ios::binary);
    if (!out) throw gwalk::InvalidInput("cannot write '" + *c.output + "'");
    out << text;
  } else {
    std::cout << text;
  }
}

void emit_json(const gwalk::io::RunConfig& c, const json& j) { emit(c, j.dump(2) + "\n"); }

gwalk::SolveOptions solve_options(const gwalk::io::RunConfig& c) {
  if (!(c.tol > 0.0)) throw gwalk::InvalidInput("tol must be positive");
  return {c.tol, c.max_iter};
}

// validate

int cmd_validate(Common& cm) {
  const auto c = cm.resolve();
  const auto spec = kernel_spec(c);
  const gwalk::KernelCheck check = gwalk::io::check_kernel(spec);
  json report{{"family", spec.family_name()}, {"valid", check.ok()}};
  json vs = json::array();
  for (const auto& v : check.violations) {
    json e{{"message", v.message}};
    if (v.window) e["window"] = v.window;
    if (v.kind == gwalk::KernelViolation::Kind::RowSum) e["deficit"] = v.deficit;
    vs.push_back(e);
  }
  report["violations"] = vs;
  emit_json(c, report);
  for (const auto& v : check.violations) std::cerr << "invalid kernel: " << v.message << "\n";
  return check.ok() ? kOk : kInvalid;
}

// solve-r

int cmd_solve_r(Common& cm) {
  const auto c = cm.resolve();
  const auto kernel = gwalk::io::build_kernel(kernel_spec(c));
  const double lambda = c.lambda.value_or(1.0);
  const gwalk::RVector r = gwalk::solve_r(kernel, lambda, solve_options(c));
  std::optional<gwalk::RDerivatives> d;
  if (lambda > 0.0) d = gwalk::solve_r_derivatives(kernel, r);
  emit_json(c, gwalk::io::to_json(r, d));
  return kOk;
}

// limits

std::optional<gwalk::ClosedForm> closed_form_for(const gwalk::io::KernelSpec& s) {
  using F = gwalk::io::KernelSpec::Family;
  switch (s.family) {
    case F::Symmetric: return gwalk::closed_form_symmetric(s.n);
    case F::OneParameter: return gwalk::closed_form_one_parameter(s.q);
    case F::Asymmetric: return gwalk::closed_form_asymmetric();
    default: return std::nullopt;
  }
}

int cmd_limits(Common& cm) {
  const auto c = cm.resolve();
  const auto spec = kernel_spec(c);
  const auto kernel = gwalk::io::build_kernel(spec);
  const gwalk::Metric metric = gwalk::io::parse_metric(c.metric, kernel.n());
  const gwalk::LimitReport rep = gwalk::compute_limits(kernel, metric, solve_options(c));
  for (const auto& w : rep.constants.warnings) std::cerr << "warning: " << w << "\n";
  json out = gwalk::io::to_json(rep.constants);
  if (c.oracle) {
    const auto cf = closed_form_for(spec);
    if (!cf) throw gwalk::InvalidInput("--oracle needs a named kernel family");
    if (metric.name() == "custom") throw gwalk::InvalidInput("--oracle needs the word or fenced metric");
    json ref = gwalk::io::closed_form_json(*cf, metric.name());
    const double dg = std::abs(rep.constants.gamma - ref["gamma"].get<double>());
    const double ds = std::abs(rep.constants.sigma2 - ref["sigma2"].get<double>());
    out = {{"limits", out}, {"closed_form", ref}, {"abs_delta", {{"gamma", dg}, {"sigma2", ds}}}};
  }
  emit_json(c, out);
  return kOk;
}

// sweep-q

std::vector<double> default_q_grid() {
  std::vector<double> g{0.02};
  for (int t = 1; t <= 9; ++t) g.push_back(0.05 * t);
  return g;
}

int cmd_sweep_q(Common& cm) {
  const auto c = cm.resolve();
  const std::vector<double> grid = c.q_grid.empty() ? default_q_grid() : c.q_grid;
  for (double q : grid) {
    if (!(q > 0.0 && q < 0.5)) throw gwalk::InvalidInput("q grid must lie in (0, 1/2), got " + gwalk::io::fmt(q));
  }
  std::ostringstream os;
  os << "q,gamma_word,sigma2_word,gamma_F,sigma2_F,cf_gamma_word,cf_sigma2_word,cf_gamma_F,cf_sigma2_F,"
        "max_abs_delta\n";
  for (double q : grid) {
    const auto kernel = gwalk::one_parameter_kernel(q);
    const gwalk::RVector r = gwalk::solve_r(kernel, 1.0, solve_options(c));
    const gwalk::RDerivatives d = gwalk::solve_r_derivatives(kernel, r);
    const auto w = gwalk::compute_limits(kernel, gwalk::Metric::word(3), r, d).constants;
    const auto f = gwalk::compute_limits(kernel, gwalk::Metric::fenced(3), r, d).constants;
    const auto cf = gwalk::closed_form_one_parameter(q);
    const double delta = std::max({std::abs(w.gamma - cf.gamma_word), std::abs(w.sigma2 - cf.sigma2_word),
                                   std::abs(f.gamma - cf.gamma_fenced), std::abs(f.sigma2 - cf.sigma2_fenced)});
    gwalk::io::write_csv_row(os, {q, w.gamma, w.sigma2, f.gamma, f.sigma2, cf.gamma_word, cf.sigma2_word,
                                  cf.gamma_fenced, cf.sigma2_fenced, delta});
  }
  emit(c, os.str());
  return kOk;
}

// simulate

int cmd_simulate(Common& cm, bool lazy_check) {
  const auto c = cm.resolve();
  const auto kernel = gwalk::io::build_kernel(kernel_spec(c));
  const std::uint64_t n_steps = c.n_steps.value_or(10000);
  if (lazy_check) {
    const auto rep = gwalk::verify_lazy_walk(kernel, n_steps, c.seed);
    emit_json(c, gwalk::io::to_json(rep));
    return rep.pass ? kOk : kStatFail;
  }
  const gwalk::Metric metric = gwalk::io::parse_metric(c.metric, kernel.n());
  const gwalk::ReducedWord start = c.start ? gwalk::parse_word(*c.start) : gwalk::ReducedWord::unit(1);
  const gwalk::Trajectory t = gwalk::simulate(start, kernel, n_steps, c.seed, metric);
  std::ostringstream os;
  gwalk::io::write_trajectory_csv(os, t);
  emit(c, os.str());
  std::cerr << "seed " << c.seed << ", final word length " << t.final_state.length() << "\n";
  return kOk;
}

// mc-lln / mc-clt

struct References {
  double gamma;
  double sigma2;
};

References references(const gwalk::io::RunConfig& c, const gwalk::TransitionKernel& kernel,
                      const gwalk::Metric& metric) {
  if (c.gamma_ref && c.sigma2_ref) return {*c.gamma_ref, *c.sigma2_ref};
  const auto rep = gwalk::compute_limits(kernel, metric, solve_options(c));
  return {c.gamma_ref.value_or(rep.constants.gamma), c.sigma2_ref.value_or(rep.constants.sigma2)};
}

void write_paths(const gwalk::io::RunConfig& c, const gwalk::McReport& r) {
  if (!c.paths_csv) return;
  std::ofstream out(*c.paths_csv, std::ios::binary);
  if (!out) throw gwalk::InvalidInput("cannot write '" + *c.paths_csv + "'");
  gwalk::io::write_paths_csv(out, r);
}

int cmd_mc(Common& cm, bool clt, double gamma_shift) {
  const auto c = cm.resolve();
  const auto kernel = gwalk::io::build_kernel(kernel_spec(c));
  const gwalk::Metric metric = gwalk::io::parse_metric(c.metric, kernel.n());
  const References ref = references(c, kernel, metric);
  gwalk::McOptions opt;
  opt.threads = c.threads;
  opt.keep_paths = c.paths_csv.has_value();
  if (c.start) opt.alt_start = gwalk::parse_word(*c.start);
  gwalk::McReport r;
  if (clt) {
    r = gwalk::verify_clt(kernel, metric, ref.gamma + gamma_shift, ref.sigma2, c.n_steps.value_or(20000),
                          c.n_paths.value_or(2000), c.seed, opt);
  } else {
    r = gwalk::verify_lln(kernel, metric, ref.gamma + gamma_shift, c.n_steps.value_or(20000),
                          c.n_paths.value_or(200), c.seed, opt);
  }
  write_paths(c, r);
  emit_json(c, gwalk::io::to_json(r));
  if (!r.pass) std::cerr << "statistical check failed\n";
  return r.pass ? kOk : kStatFail;
}

// kms

double kms_direct(int n, double x, double z) {
  Eigen::MatrixXd u(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) u(a, b) = std::pow(z, std::abs(a - b));
  return (u - x * Eigen::MatrixXd::Identity(n, n)).determinant();
}

int cmd_kms(Common& cm) {
  const auto c = cm.resolve();
  const int n = c.kms_n.value_or(10);
  if (n < 1) throw gwalk::InvalidInput("kms_n must be at least 1");
  const double x = c.x.value_or(0.5), z = c.z.value_or(0.5);
  json rows = json::array();
  for (int m = 1; m <= n; ++m) {
    const double phi = gwalk::kms_phi(m, x, z);
    const double det = kms_direct(m, x, z);
    rows.push_back({{"n", m}, {"phi", phi}, {"det", det}, {"abs_diff", std::abs(phi - det)}});
  }
  emit_json(c, {{"x", x}, {"z", z}, {"rows", rows}});
  return kOk;
}

// oracle-dp

int cmd_oracle_dp(Common& cm) {
  const auto c = cm.resolve();
  const auto kernel = gwalk::io::build_kernel(kernel_spec(c));
  const std::string series = c.series.value_or("hitting");
  gwalk::DpOptions opt;
  opt.mass_floor = c.mass_floor;
  opt.state_cap = c.state_cap;
  const std::uint64_t m = c.max_steps.value_or(24);
  json out{{"series", series}, {"max_steps", m}};
  if (series == "hitting") {
    const gwalk::ReducedWord t = gwalk::parse_word(c.target.value_or("A(1,2,+)"));
    if (t.length() != 1) throw gwalk::InvalidInput("target must be a single letter");
    const gwalk::Generator g = t.letters().front();
    if (c.lambda) opt.prune_lambda = c.prune_lambda.value_or(*c.lambda > 0.0 && *c.lambda <= 1.0 ? *c.lambda : 1.0);
    else if (c.prune_lambda) opt.prune_lambda = *c.prune_lambda;
    const auto s = gwalk::dp_hitting_series(kernel, g, m, opt);
    out["target"] = gwalk::format_word(t);
    out.update(gwalk::io::to_json(s));
    if (c.lambda) {
      const double lam = *c.lambda;
      const gwalk::RVector r = gwalk::solve_r(kernel, lam, solve_options(c));
      out["lambda"] = lam;
      out["value"] = s.evaluate(lam);
      out["dropped_bound"] = s.dropped_bound(lam);
      out["solver"] = r[g];
      out["tail_bound"] = lam < 1.0 ? std::pow(lam, double(m)) / (1.0 - lam) : 1.0;
    }
  } else if (series == "return") {
    if (c.prune_lambda) opt.prune_lambda = *c.prune_lambda;
    const auto s = gwalk::dp_return_series(kernel, c.window, m, opt);
    out["window"] = c.window;
    out.update(gwalk::io::to_json(s));
  } else if (series == "G") {
    const gwalk::Metric metric = gwalk::io::parse_metric(c.metric, kernel.n());
    const double lam = c.lambda.value_or(0.5), z = c.z.value_or(1.0);
    if (c.prune_lambda) opt.prune_lambda = *c.prune_lambda;
    const auto g = gwalk::dp_truncated_G(kernel, metric, c.window, lam, z, m, opt);
    out.update(json{{"window", c.window}, {"metric", metric.name()}, {"lambda", lam}, {"z", z},
                    {"value", g.value}, {"error_bound", g.error_bound}, {"peak_states", g.peak_states}});
  } else {
    throw gwalk::InvalidInput("series must be hitting, return or G");
  }
  emit_json(c, out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact drift and variance of word length for Markov chains on the two-chamber groupoid"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "gwalk 1.0.0");

  Common validate, solve, limits, sweep, simulate, lln, clt, kms, dp;
  std::function<int()> run;

  auto* v = app.add_subcommand("validate", "check a kernel; exit 2 with per-constraint messages if invalid");
  validate.attach(v);
  v->callback([&] { run = [&] { return cmd_validate(validate); }; });

  auto* s = app.add_subcommand("solve-r", "first-passage generating functions R and their lambda derivatives");
  solve.attach(s);
  solve.ov.add<double>(s, "--lambda", "lambda", "evaluation point in [0, 1] (default 1)");
  solve.ov.add<double>(s, "--tol", "tol", "stopping tolerance of the monotone iteration");
  solve.ov.add<long>(s, "--max-iter", "max_iter", "iteration cap");
  s->callback([&] { run = [&] { return cmd_solve_r(solve); }; });

  auto* l = app.add_subcommand("limits", "drift gamma and variance sigma^2 with the partials of h");
  limits.attach(l);
  limits.ov.add<double>(l, "--tol", "tol", "stopping tolerance of the monotone iteration");
  bool oracle = false;
  l->add_flag("--oracle", oracle, "compare with the closed form of a named family");
  l->callback([&] {
    if (oracle) limits.ov.doc["oracle"] = true;
    run = [&] { return cmd_limits(limits); };
  });

  auto* w = app.add_subcommand("sweep-q", "CSV of gamma and sigma^2 over the one-parameter family");
  sweep.attach(w, false);
  std::optional<std::string> grid;
  w->add_option("--q-grid", grid, "comma-separated q values in (0, 1/2)");
  w->callback([&] {
    if (grid) {
      json g = json::array();
      std::stringstream ss(*grid);
      std::string item;
      while (std::getline(ss, item, ',')) {
        try {
          std::size_t used = 0;
          const double q = std::stod(item, &used);
          if (used != item.size()) throw std::invalid_argument(item);
          g.push_back(q);
        } catch (const std::exception&) {
          throw gwalk::InvalidInput("bad q value '" + item + "'");
        }
      }
      sweep.ov.doc["q_grid"] = g;
    }
    run = [&] { return cmd_sweep_q(sweep); };
  });

  auto* sim = app.add_subcommand("simulate", "one trajectory as CSV (n, word_len, metric_len)");
  simulate.attach(sim);
  simulate.ov.add<std::uint64_t>(sim, "--n-steps", "n_steps", "number of steps (default 10000)");
  simulate.ov.add<std::uint64_t>(sim, "--seed", "seed", "master seed");
  simulate.ov.add<std::string>(sim, "--start", "start", "initial word, e.g. e1 or A(1,2,+)A(2,3,-)");
  bool lazy = false;
  sim->add_flag("--lazy-walk", lazy, "instead check the lazy-walk length law of the symmetric kernel");
  sim->callback([&] { run = [&] { return cmd_simulate(simulate, lazy); }; });

  double shift_lln = 0.0, shift_clt = 0.0;
  auto mc_flags = [](Common& cm, CLI::App* a, double& shift) {
    cm.attach(a);
    cm.ov.add<std::uint64_t>(a, "--n-steps", "n_steps", "steps per path (default 20000)");
    cm.ov.add<std::uint64_t>(a, "--n-paths", "n_paths", "number of paths");
    cm.ov.add<std::uint64_t>(a, "--seed", "seed", "master seed");
    cm.ov.add<unsigned>(a, "--threads", "threads", "worker threads (results do not depend on it)");
    cm.ov.add<double>(a, "--gamma-ref", "gamma_ref", "reference drift (default: computed)");
    cm.ov.add<double>(a, "--sigma2-ref", "sigma2_ref", "reference variance (default: computed)");
    cm.ov.add<std::string>(a, "--start", "start", "second initial word for the LLN initial-condition check");
    cm.ov.add<std::string>(a, "--paths-csv", "paths_csv", "per-path CSV output");
    a->add_option("--gamma-shift", shift, "add this to the reference drift (negative control)");
  };
  auto* ml = app.add_subcommand("mc-lln", "Monte Carlo check of the drift (default 200 paths)");
  mc_flags(lln, ml, shift_lln);
  ml->callback([&] { run = [&] { return cmd_mc(lln, false, shift_lln); }; });
  auto* mcc = app.add_subcommand("mc-clt", "Monte Carlo check of the Gaussian fluctuations (default 2000 paths)");
  mc_flags(clt, mcc, shift_clt);
  mcc->callback([&] { run = [&] { return cmd_mc(clt, true, shift_clt); }; });

  auto* k = app.add_subcommand("kms", "Kac-Murdock-Szego characteristic polynomial by recurrence and directly");
  kms.attach(k, false);
  kms.ov.add<int>(k, "--n", "kms_n", "largest matrix size (default 10)");
  kms.ov.add<double>(k, "--x", "x", "spectral variable (default 0.5)");
  kms.ov.add<double>(k, "--z", "z", "matrix parameter (default 0.5)");
  k->callback([&] { run = [&] { return cmd_kms(kms); }; });

  auto* o = app.add_subcommand("oracle-dp", "word-space dynamic programs for the generating functions");
  dp.attach(o);
  dp.ov.add<std::string>(o, "--series", "series", "hitting (default), return or G");
  dp.ov.add<std::string>(o, "--target", "target", "hitting target letter, e.g. A(1,2,+)");
  dp.ov.add<int>(o, "--window", "window", "start window for return and G");
  dp.ov.add<std::uint64_t>(o, "--max-steps", "max_steps", "truncation M (default 24)");
  dp.ov.add<double>(o, "--lambda", "lambda", "evaluation point");
  dp.ov.add<double>(o, "--z", "z", "length variable for G (default 1)");
  dp.ov.add<double>(o, "--mass-floor", "mass_floor", "drop states below this weighted mass (default 0: exact)");
  dp.ov.add<double>(o, "--prune-lambda", "prune_lambda", "discount used when weighting the mass floor");
  dp.ov.add<std::uint64_t>(o, "--state-cap", "state_cap", "abort above this many live states");
  o->callback([&] { run = [&] { return cmd_oracle_dp(dp); }; });

  try {
    app.parse(argc, argv);
    return run();
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalid;
  } catch (const gwalk::StateSpaceExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  } catch (const gwalk::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const gwalk::NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
}
