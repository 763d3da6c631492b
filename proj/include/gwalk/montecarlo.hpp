#pragma once

// Statistical checks of the limit theorems for |W_n|_metric:
//
//   |W_n| / n -> gamma          almost surely
//   (|W_n| - gamma n)/sqrt(n) -> N(0, sigma^2)   in law
//
// Paths are independent; path p uses the engine seeded by
// derive_seed(seed, p), so results do not depend on the thread count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "gwalk/chain.hpp"
#include "gwalk/errors.hpp"
#include "gwalk/groupoid.hpp"
#include "gwalk/kernel.hpp"
#include "gwalk/rng.hpp"

namespace gwalk {

struct PathResult {
  std::uint64_t index = 0;
  std::size_t word_len = 0;
  double metric_len = 0.0;
};

/// Runs `n_paths` chains of `n_steps` from `start` and returns their final
/// lengths in path order.
inline std::vector<PathResult> run_paths(const TransitionKernel& kernel, const Metric& metric,
                                         const ReducedWord& start, std::uint64_t n_steps, std::uint64_t n_paths,
                                         std::uint64_t seed, unsigned threads = 1) {
  if (start.target() < 1 || start.target() > kernel.n()) throw InvalidInput("start word is not in G_N");
  if (metric.n() != kernel.n()) throw InvalidInput("metric and kernel disagree on N");
  std::vector<PathResult> out(n_paths);
  auto work = [&](std::uint64_t first, std::uint64_t stride) {
    for (std::uint64_t p = first; p < n_paths; p += stride) {
      Engine rng = path_engine(seed, p);
      const ReducedWord w = run_chain(start, kernel, n_steps, rng);
      out[p] = {p, w.length(), metric_length(w, metric)};
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::uint64_t>(n_paths, 1))));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    for (auto& th : pool) th.join();
  }
  return out;
}

struct SampleMoments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double se = 0.0;        // standard error of the mean
};

inline SampleMoments moments(const std::vector<double>& xs) {
  if (xs.size() < 2) throw InvalidInput("need at least two samples");
  SampleMoments m;
  // two-pass for stability; fixed order keeps results bit-reproducible
  double s = 0.0;
  for (double x : xs) s += x;
  m.mean = s / double(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - m.mean) * (x - m.mean);
  m.variance = ss / double(xs.size() - 1);
  m.se = std::sqrt(m.variance / double(xs.size()));
  return m;
}

/// Kolmogorov-Smirnov distance between the sample and N(mu, sigma^2).
inline double ks_distance_normal(std::vector<double> xs, double mu, double sigma) {
  if (xs.empty()) throw InvalidInput("empty sample");
  if (!(sigma > 0.0)) throw InvalidInput("sigma must be positive");
  std::sort(xs.begin(), xs.end());
  const double n = double(xs.size());
  double d = 0.0;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    const double f = 0.5 * std::erfc(-(xs[t] - mu) / (sigma * std::sqrt(2.0)));
    d = std::max({d, double(t + 1) / n - f, f - double(t) / n});
  }
  return d;
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
inline double ks_threshold_1pct(std::size_t n) { return 1.63 / std::sqrt(double(n)); }

struct McReport {
  std::string kind;  // "lln" or "clt"
  std::string metric;
  std::uint64_t n_steps = 0;
  std::uint64_t n_paths = 0;
  std::uint64_t seed = 0;
  std::string start;

  double gamma_ref = 0.0;
  double gamma_hat = 0.0;
  double gamma_se = 0.0;
  double lln_band = 0.0;
  bool lln_pass = false;

  // second start (LLN only)
  std::optional<std::string> alt_start;
  double gamma_hat_alt = 0.0;
  double gamma_se_alt = 0.0;
  bool alt_lln_pass = false;
  bool initial_condition_pass = false;

  // CLT only
  std::optional<double> sigma2_ref;
  double sigma2_hat = 0.0;
  double sigma2_band_lo = 0.0;
  double sigma2_band_hi = 0.0;
  bool variance_pass = false;
  double normality_stat = 0.0;
  double ks_threshold = 0.0;
  bool ks_pass = false;

  bool pass = false;
  std::vector<PathResult> paths;  // kept for per-path CSV output
};

struct McOptions {
  unsigned threads = 1;
  /// Second initial word for the initial-condition check; empty skips it.
  std::optional<ReducedWord> alt_start = ReducedWord::from_letters(1, {{1, 2, 1}, {2, 3, -1}});
  bool keep_paths = false;
};

/// LLN check: |gamma_hat - gamma_ref| < 4 SE. The O(1/n) start bias of
/// |W_n| / n is far below this band at the sizes the check accepts.
inline McReport verify_lln(const TransitionKernel& kernel, const Metric& metric, double gamma_ref,
                           std::uint64_t n_steps, std::uint64_t n_paths, std::uint64_t seed,
                           const McOptions& opt = {}) {
  if (n_steps < 1000) throw InvalidInput("LLN check needs n_steps >= 1000");
  if (n_paths < 50) throw InvalidInput("LLN check needs n_paths >= 50");
  McReport r;
  r.kind = "lln";
  r.metric = metric.name();
  r.n_steps = n_steps;
  r.n_paths = n_paths;
  r.seed = seed;
  r.gamma_ref = gamma_ref;
  const ReducedWord e1 = ReducedWord::unit(1);
  r.start = format_word(e1);

  auto rates = [&](const std::vector<PathResult>& ps) {
    std::vector<double> xs;
    xs.reserve(ps.size());
    for (const auto& p : ps) xs.push_back(p.metric_len / double(n_steps));
    return moments(xs);
  };

  auto paths = run_paths(kernel, metric, e1, n_steps, n_paths, seed, opt.threads);
  const SampleMoments m = rates(paths);
  r.gamma_hat = m.mean;
  r.gamma_se = m.se;
  r.lln_band = 4.0 * m.se;
  r.lln_pass = std::abs(m.mean - gamma_ref) < r.lln_band;
  if (opt.keep_paths) r.paths = std::move(paths);

  r.pass = r.lln_pass;
  if (opt.alt_start) {
    r.alt_start = format_word(*opt.alt_start);
    const SampleMoments a =
        rates(run_paths(kernel, metric, *opt.alt_start, n_steps, n_paths, derive_seed(seed, ~0ULL), opt.threads));
    r.gamma_hat_alt = a.mean;
    r.gamma_se_alt = a.se;
    r.alt_lln_pass = std::abs(a.mean - gamma_ref) < 4.0 * a.se;
    r.initial_condition_pass = std::abs(a.mean - m.mean) < 4.0 * std::hypot(a.se, m.se);
    r.pass = r.pass && r.alt_lln_pass && r.initial_condition_pass;
  }
  return r;
}

/// Two-sided 99% band for the sample variance of n normal draws with true
/// variance sigma2: sigma2 * chi2_{q, n-1} / (n - 1), q = 0.005, 0.995.
inline std::pair<double, double> variance_band_99(double sigma2, std::size_t n) {
  const double df = double(n - 1);
  const boost::math::chi_squared_distribution<double> chi(df);
  return {sigma2 * boost::math::quantile(chi, 0.005) / df, sigma2 * boost::math::quantile(chi, 0.995) / df};
}

/// CLT check on Z_p = (|W_n|_p - gamma_ref n) / sqrt(n), centred with the
/// exact drift rather than the sample mean.
inline McReport verify_clt(const TransitionKernel& kernel, const Metric& metric, double gamma_ref,
                           double sigma2_ref, std::uint64_t n_steps, std::uint64_t n_paths, std::uint64_t seed,
                           const McOptions& opt = {}) {
  if (n_steps < 10000) throw InvalidInput("CLT check needs n_steps >= 10^4");
  if (n_paths < 1000) throw InvalidInput("CLT check needs n_paths >= 10^3");
  if (!(sigma2_ref > 0.0)) throw InvalidInput("sigma2_ref must be positive");
  McReport r;
  r.kind = "clt";
  r.metric = metric.name();
  r.n_steps = n_steps;
  r.n_paths = n_paths;
  r.seed = seed;
  r.gamma_ref = gamma_ref;
  r.sigma2_ref = sigma2_ref;
  const ReducedWord e1 = ReducedWord::unit(1);
  r.start = format_word(e1);

  auto paths = run_paths(kernel, metric, e1, n_steps, n_paths, seed, opt.threads);
  const double root_n = std::sqrt(double(n_steps));
  std::vector<double> z, rate;
  z.reserve(paths.size());
  rate.reserve(paths.size());
  for (const auto& p : paths) {
    z.push_back((p.metric_len - gamma_ref * double(n_steps)) / root_n);
    rate.push_back(p.metric_len / double(n_steps));
  }
  const SampleMoments mr = moments(rate);
  r.gamma_hat = mr.mean;
  r.gamma_se = mr.se;
  r.lln_band = 4.0 * mr.se;
  r.lln_pass = std::abs(mr.mean - gamma_ref) < r.lln_band;

  r.sigma2_hat = moments(z).variance;
  std::tie(r.sigma2_band_lo, r.sigma2_band_hi) = variance_band_99(sigma2_ref, z.size());
  r.variance_pass = r.sigma2_hat >= r.sigma2_band_lo && r.sigma2_hat <= r.sigma2_band_hi;
  r.normality_stat = ks_distance_normal(z, 0.0, std::sqrt(sigma2_ref));
  r.ks_threshold = ks_threshold_1pct(z.size());
  r.ks_pass = r.normality_stat < r.ks_threshold;
  r.pass = r.variance_pass && r.ks_pass;
  if (opt.keep_paths) r.paths = std::move(paths);
  return r;
}

/// Length moves of the symmetric walk: up/stay/down from |W| >= 1 are
/// (N-1, N-2, 1) / (2N-2), and every step from a unit goes up.
struct LazyWalkReport {
  int n = 0;
  std::uint64_t n_steps = 0;
  std::uint64_t seed = 0;
  std::uint64_t from_positive = 0;
  std::uint64_t up = 0, stay = 0, down = 0;
  std::uint64_t from_unit = 0, up_from_unit = 0;
  double expected_up = 0.0, expected_stay = 0.0, expected_down = 0.0;
  double z_up = 0.0, z_stay = 0.0, z_down = 0.0;  // deviations in standard errors
  bool pass = false;
};

inline bool is_symmetric_kernel(const TransitionKernel& kernel) {
  const auto& p = kernel.probabilities();
  return std::all_of(p.begin(), p.end(), [&](double x) { return std::abs(x - p.front()) <= 1e-12; });
}

inline LazyWalkReport verify_lazy_walk(const TransitionKernel& kernel, std::uint64_t n_steps, std::uint64_t seed) {
  if (!is_symmetric_kernel(kernel)) throw InvalidInput("lazy-walk check needs the symmetric kernel");
  if (n_steps < 1) throw InvalidInput("n_steps must be positive");
  LazyWalkReport r;
  r.n = kernel.n();
  r.n_steps = n_steps;
  r.seed = seed;
  const double denom = 2.0 * (r.n - 1);
  r.expected_up = (r.n - 1) / denom;
  r.expected_stay = (r.n - 2) / denom;
  r.expected_down = 1.0 / denom;

  Engine rng(seed);
  ReducedWord w = ReducedWord::unit(1);
  for (std::uint64_t s = 0; s < n_steps; ++s) {
    const std::size_t before = w.length();
    w.append_in_place(draw_letter(w, kernel, rng));
    const std::size_t after = w.length();
    if (before == 0) {
      ++r.from_unit;
      if (after == 1) ++r.up_from_unit;
      continue;
    }
    ++r.from_positive;
    if (after > before) ++r.up;
    else if (after == before) ++r.stay;
    else ++r.down;
  }
  auto zscore = [&](std::uint64_t count, double p) {
    if (r.from_positive == 0) return 0.0;
    const double n = double(r.from_positive);
    return (double(count) / n - p) / std::sqrt(p * (1.0 - p) / n);
  };
  r.z_up = zscore(r.up, r.expected_up);
  r.z_stay = zscore(r.stay, r.expected_stay);
  r.z_down = zscore(r.down, r.expected_down);
  r.pass = r.from_positive > 0 && std::abs(r.z_up) <= 3.0 && std::abs(r.z_stay) <= 3.0 &&
           std::abs(r.z_down) <= 3.0 && r.up_from_unit == r.from_unit;
  return r;
}

}  // namespace gwalk
