#pragma once

// Independent checks on the solver and limit pipeline:
//
//  * forward dynamic programs over the reduced-word state space, which
//    never touch the quadratic system, and
//  * the closed-form constants of the symmetric, one-parameter and
//    asymmetric N = 3 examples.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <unordered_map>
#include <limits>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "gwalk/errors.hpp"
#include "gwalk/groupoid.hpp"
#include "gwalk/kernel.hpp"

namespace gwalk {

inline constexpr std::size_t kDefaultStateCap = 5'000'000;

struct DpOptions {
  /// A state with mass m that can first register at step t is dropped when
  /// m * prune_lambda^t < mass_floor; its mass is booked under t so the
  /// effect on any evaluation stays bounded. A zero floor means exact.
  double mass_floor = 0.0;
  double prune_lambda = 1.0;
  std::size_t state_cap = kDefaultStateCap;
};

/// Coefficients c_0..c_M of a probability generating function truncated at
/// M, plus the mass discarded by pruning.
struct TruncatedSeries {
  std::vector<double> coeffs;
  /// dropped[t]: mass removed from states that could register no earlier
  /// than step t.
  std::vector<double> dropped;
  /// True when a state can register at several later steps (occupation
  /// series), false for first-passage series.
  bool repeated_visits = false;
  std::size_t peak_states = 0;

  std::size_t truncation() const noexcept { return coeffs.empty() ? 0 : coeffs.size() - 1; }

  double evaluate(double lambda) const {
    double acc = 0.0, pw = 1.0;
    for (double c : coeffs) {
      acc += c * pw;
      pw *= lambda;
    }
    return acc;
  }

  double total_mass() const {
    double s = 0.0;
    for (double c : coeffs) s += c;
    return s;
  }

  double dropped_mass() const {
    double s = 0.0;
    for (double c : dropped) s += c;
    return s;
  }

  /// Upper bound on what the dropped mass could have added to evaluate(lambda).
  double dropped_bound(double lambda) const {
    double acc = 0.0;
    for (std::size_t t = 0; t < dropped.size(); ++t) {
      if (dropped[t] == 0.0) continue;
      double w = std::pow(lambda, double(t));
      if (repeated_visits) w *= (1.0 - std::pow(lambda, double(dropped.size() - t))) / (1.0 - lambda);
      acc += dropped[t] * w;
    }
    return acc;
  }
};

namespace detail {

// Compact word keys for the DP: byte 0 is the source window; a non-unit
// word continues with its first sign (0 for +1, 1 for -1) followed by the
// windows i_2 .. i_{d+1} it passes through. Signs of later letters follow
// from alternation.
class WordKey {
 public:
  static std::string unit(int window) { return std::string(1, static_cast<char>(window)); }

  static std::size_t length(const std::string& key) { return key.size() <= 1 ? 0 : key.size() - 2; }
  static int target(const std::string& key) { return static_cast<unsigned char>(key.back()); }

  static int last_sign(const std::string& key) {
    const int first = key[1] == 0 ? 1 : -1;
    return (length(key) % 2 == 1) ? first : -first;
  }

  /// Window the last letter starts from.
  static int last_source(const std::string& key) {
    return length(key) == 1 ? static_cast<unsigned char>(key[0]) : static_cast<unsigned char>(key[key.size() - 2]);
  }

  /// Right-multiplies by the letter (target(key), c, s).
  static std::string append(const std::string& key, int c, int s) {
    if (length(key) == 0) {
      std::string out = key;
      out.push_back(s == 1 ? char(0) : char(1));
      out.push_back(static_cast<char>(c));
      return out;
    }
    if (last_sign(key) != s) {
      std::string out = key;
      out.push_back(static_cast<char>(c));
      return out;
    }
    if (last_source(key) == c) {
      if (length(key) == 1) return unit(static_cast<unsigned char>(key[0]));
      return key.substr(0, key.size() - 1);
    }
    std::string out = key;
    out.back() = static_cast<char>(c);
    return out;
  }

  static ReducedWord to_word(const std::string& key) {
    const int src = static_cast<unsigned char>(key[0]);
    if (length(key) == 0) return ReducedWord::unit(src);
    int s = key[1] == 0 ? 1 : -1;
    int at = src;
    std::vector<Generator> letters;
    for (std::size_t t = 2; t < key.size(); ++t) {
      const int next = static_cast<unsigned char>(key[t]);
      letters.push_back({at, next, s});
      at = next;
      s = -s;
    }
    return ReducedWord::from_letters(src, std::move(letters));
  }

  static double metric_length(const std::string& key, const Metric& m) {
    if (length(key) == 0) return 0.0;
    int s = key[1] == 0 ? 1 : -1;
    int at = static_cast<unsigned char>(key[0]);
    double acc = 0.0;
    for (std::size_t t = 2; t < key.size(); ++t) {
      const int next = static_cast<unsigned char>(key[t]);
      acc += m.weight({at, next, s});
      at = next;
      s = -s;
    }
    return acc;
  }
};

using Distribution = std::unordered_map<std::string, double>;

/// One step of the chain applied to a distribution over words.
/// `earliest(key)` is the number of further steps before the state can
/// register; states that cannot register by max_steps are removed exactly,
/// states under the weighted floor are removed and booked in `dropped`.
template <class Earliest>
void advance(const Distribution& from, Distribution& to, const TransitionKernel& kernel, const DpOptions& opt,
             std::size_t step, std::size_t max_steps, Earliest earliest, std::vector<double>& dropped) {
  to.clear();
  to.reserve(from.size() * 2);
  for (const auto& [key, mass] : from) {
    const int i = WordKey::target(key);
    for (const Generator& g : kernel.outgoing(i)) {
      std::string next = WordKey::append(key, g.j, g.k);
      if (step + earliest(next) > max_steps) continue;
      to[std::move(next)] += mass * kernel.p(g);
    }
  }
  if (opt.mass_floor > 0.0) {
    for (auto it = to.begin(); it != to.end();) {
      const std::size_t t = step + earliest(it->first);
      if (it->second * std::pow(opt.prune_lambda, double(t)) < opt.mass_floor) {
        dropped[t] += it->second;
        it = to.erase(it);
      } else {
        ++it;
      }
    }
  }
  if (to.size() > opt.state_cap) {
    throw StateSpaceExceeded("word DP exceeded the state cap of " + std::to_string(opt.state_cap) + " states",
                             opt.state_cap);
  }
}

inline void check_dp_options(const DpOptions& opt) {
  if (!(opt.mass_floor >= 0.0)) throw InvalidInput("mass floor must be non-negative");
  if (!(opt.prune_lambda > 0.0 && opt.prune_lambda <= 1.0)) throw InvalidInput("prune_lambda must lie in (0, 1]");
  if (opt.state_cap == 0) throw InvalidInput("state cap must be positive");
}

}  // namespace detail

/// c_m = P_{e_i}(T = m), T the first time W_n is the one-letter word
/// `target` = A(i,j,k), for m = 0..max_steps. A word of length L needs at
/// least max(L - 1, 1) more steps to become the target.
inline TruncatedSeries dp_hitting_series(const TransitionKernel& kernel, const Generator& target,
                                         std::size_t max_steps, const DpOptions& opt = {}) {
  if (max_steps < 1) throw InvalidInput("max_steps must be at least 1");
  if (!is_letter(target, kernel.n())) throw InvalidInput("hitting target is not a letter of G_N");
  detail::check_dp_options(opt);
  const std::string goal = detail::WordKey::append(detail::WordKey::unit(target.i), target.j, target.k);
  TruncatedSeries out;
  out.coeffs.assign(max_steps + 1, 0.0);
  out.dropped.assign(max_steps + 1, 0.0);
  auto earliest = [&](const std::string& key) -> std::size_t {
    if (key == goal) return 0;
    const std::size_t len = detail::WordKey::length(key);
    return len <= 2 ? 1 : len - 1;
  };
  detail::Distribution cur{{detail::WordKey::unit(target.i), 1.0}}, next;
  for (std::size_t n = 1; n <= max_steps; ++n) {
    detail::advance(cur, next, kernel, opt, n, max_steps, earliest, out.dropped);
    if (auto it = next.find(goal); it != next.end()) {
      out.coeffs[n] = it->second;
      next.erase(it);
    }
    std::swap(cur, next);
    out.peak_states = std::max(out.peak_states, cur.size());
  }
  return out;
}

/// c_m = P_{e_i}(W_m = e_i), m = 0..max_steps.
inline TruncatedSeries dp_return_series(const TransitionKernel& kernel, int window, std::size_t max_steps,
                                        const DpOptions& opt = {}) {
  if (max_steps < 1) throw InvalidInput("max_steps must be at least 1");
  if (window < 1 || window > kernel.n()) throw InvalidInput("window out of range");
  detail::check_dp_options(opt);
  const std::string home = detail::WordKey::unit(window);
  TruncatedSeries out;
  out.coeffs.assign(max_steps + 1, 0.0);
  out.dropped.assign(max_steps + 1, 0.0);
  out.repeated_visits = true;
  out.coeffs[0] = 1.0;
  auto earliest = [](const std::string& key) { return detail::WordKey::length(key); };
  detail::Distribution cur{{home, 1.0}}, next;
  for (std::size_t n = 1; n <= max_steps; ++n) {
    detail::advance(cur, next, kernel, opt, n, max_steps, earliest, out.dropped);
    if (auto it = next.find(home); it != next.end()) out.coeffs[n] = it->second;
    std::swap(cur, next);
    out.peak_states = std::max(out.peak_states, cur.size());
  }
  return out;
}

struct TruncatedG {
  double value = 0.0;        // sum_{n <= M} lambda^n E[z^{|W_n|}] over retained mass
  double error_bound = 0.0;  // what dropped mass could have added
  std::size_t peak_states = 0;
};

/// Truncated double generating function sum_{n <= M} lambda^n E_{e_i}[z^{|W_n|_metric}].
/// States are full reduced words: a pop exposes the previous letter, whose
/// source is not recoverable from (target, sign, length) alone.
inline TruncatedG dp_truncated_G(const TransitionKernel& kernel, const Metric& metric, int window, double lambda,
                                 double z, std::size_t max_steps, const DpOptions& opt = {}) {
  if (!(lambda >= 0.0 && lambda < 1.0)) throw InvalidInput("lambda must lie in [0, 1)");
  if (!(z > 0.0 && z <= 1.0)) throw InvalidInput("z must lie in (0, 1]");
  if (window < 1 || window > kernel.n()) throw InvalidInput("window out of range");
  detail::check_dp_options(opt);
  TruncatedSeries book;
  book.dropped.assign(max_steps + 1, 0.0);
  book.repeated_visits = true;
  TruncatedG out;
  out.value = 1.0;
  auto earliest = [](const std::string&) -> std::size_t { return 0; };
  detail::Distribution cur{{detail::WordKey::unit(window), 1.0}}, next;
  double pw = 1.0;
  for (std::size_t n = 1; n <= max_steps; ++n) {
    detail::advance(cur, next, kernel, opt, n, max_steps, earliest, book.dropped);
    std::swap(cur, next);
    pw *= lambda;
    double expect = 0.0;
    for (const auto& [key, mass] : cur) expect += mass * std::pow(z, detail::WordKey::metric_length(key, metric));
    out.value += pw * expect;
    out.peak_states = std::max(out.peak_states, cur.size());
  }
  out.error_bound = book.dropped_bound(lambda);
  return out;
}

// Closed-form constants.

struct ClosedForm {
  std::string family;  // "symmetric", "one_parameter" or "asymmetric"
  double gamma_word = 0.0;
  double sigma2_word = 0.0;
  double gamma_fenced = 0.0;
  double sigma2_fenced = 0.0;
  /// R(1), R'(1) and R''(1) per symmetry class (one value for the symmetric
  /// family, R_1..R_3 for the one-parameter family). Empty R'' entries are
  /// not available in closed form.
  std::vector<double> r;
  std::vector<double> r1;
  std::vector<double> r2;
};

/// Totally symmetric kernel p = 1/(2N-2).
inline ClosedForm closed_form_symmetric(int n) {
  if (n < 3) throw InvalidInput("symmetric family needs N >= 3");
  const double N = n;
  ClosedForm c;
  c.family = "symmetric";
  c.gamma_word = (N - 2) / (2 * (N - 1));
  c.gamma_fenced = (N + 1) * (N - 2) / (6 * (N - 1));
  c.sigma2_word = (N * N + 2 * N - 4) / (4 * (N - 1) * (N - 1));
  c.sigma2_fenced = (11 * std::pow(N, 5) - 2 * std::pow(N, 4) + 15 * std::pow(N, 3) - 36 * N - 8) /
                    (180 * N * (N - 1) * (N - 1));
  c.r = {1 / (N - 1)};
  c.r1 = {2 / (N - 2)};
  c.r2 = {4 * (N * N - 2) / std::pow(N - 2, 3)};
  return c;
}

/// Q = sqrt((8 - 7q) q).
inline double one_parameter_Q(double q) { return std::sqrt((8 - 7 * q) * q); }

/// N = 3 one-parameter family, 0 < q < 1/2. R_1 = R(2,1,.) = R(2,3,.),
/// R_2 = R(1,2,.) = R(3,2,.), R_3 = R(1,3,.) = R(3,1,.).
///
/// Two expressions are used in corrected form, fixed against the solver
/// and against the q = 1/4 point where the family is the symmetric kernel:
/// sigma2_fenced has denominator 2 (1+2q)^3 (8-7q) (= Q^2 / q, not Q^2),
/// and R_1'' subtracts its q^3 term and has a single power of q below.
inline ClosedForm closed_form_one_parameter(double q) {
  if (!(q > 0.0 && q < 0.5)) throw InvalidInput("one-parameter family needs 0 < q < 1/2");
  const double Q = one_parameter_Q(q);
  const double q2 = q * q, q3 = q2 * q, q4 = q3 * q, q5 = q4 * q, q6 = q5 * q;
  ClosedForm c;
  c.family = "one_parameter";
  c.gamma_word = (3 * q + (1 - 4 * q) * Q) / (4 * (1 - 4 * q2));
  c.gamma_fenced = (Q - q) / (2 * (2 * q + 1));
  c.sigma2_word = (4 * (8 + 5 * Q) + (68 - 56 * Q) * q + (500 - 101 * Q) * q2 - (1471 + 64 * Q) * q3 +
                   8 * (1 + 42 * Q) * q4 + 728 * q5) /
                  (8 * std::pow(1 + 2 * q, 3) * (8 - 23 * q + 14 * q2));
  c.sigma2_fenced = ((32 + 4 * Q) + (36 + 28 * Q) * q + (80 - 21 * Q) * q2 - (199 + 30 * Q) * q3 + 70 * q4) /
                    (2 * std::pow(1 + 2 * q, 3) * (8 - 7 * q));
  c.r = {0.5, (3 * q - Q) / (2 * (2 * q - 1)), (q - 2 + Q) / (2 * (2 * q - 1))};
  c.r1 = {(3 * q + 2 + Q) / (2 * (Q - q)), 2 * (q + 1) / Q,
          (2 * Q + q * (Q - 6 + q * (5 - 4 * q - 4 * Q))) / (q * (2 * q - 1) * (Q + 7 * q - 8))};
  c.r2 = {(4 * Q + 16 * (2 + Q) * q + 2 * (42 + 19 * Q) * q2 - (26 + 31 * Q) * q3 - 3 * (53 + 4 * Q) * q4 +
           84 * q5) /
              (4 * std::pow(1 - q, 2) * q * Q * Q),
          (8 * (3 + Q) + (25 * Q - 12) * q + (49 + 4 * Q) * q2 - 4 * (9 + 7 * Q) * q3 - 16 * q4) /
              ((1 - q) * std::pow(Q, 3)),
          (-16 * (1 + Q) + (48 - 34 * Q) * q + 6 * (23 * Q - 43) * q2 + 2 * (329 + 18 * Q) * q3 -
           (176 + 137 * Q) * q4 + (28 * Q - 541) * q5 + 300 * q6) /
              (2 * std::pow(1 - q, 2) * (2 * q - 1) * std::pow(Q, 3))};
  return c;
}

/// Published six-digit values for the asymmetric N = 3 kernel.
struct AsymmetricTable {
  struct Row {
    Generator g;
    double r, d, v;
  };
  std::vector<Row> rows;
  double gamma_word = 0.272913;
  double sigma2_word = 0.587598;
  double gamma_fenced = 0.334211;
  double sigma2_fenced = 0.916276;
};

inline AsymmetricTable asymmetric_table() {
  AsymmetricTable t;
  t.rows = {
      {{2, 1, 1}, 0.591572, 1.36978, 10.3365},  {{2, 3, 1}, 0.404666, 1.37284, 12.8916},
      {{2, 1, -1}, 0.388890, 2.05937, 26.2278}, {{2, 3, -1}, 0.579542, 2.69097, 32.1490},
      {{1, 2, 1}, 0.769190, 1.44102, 9.45100},  {{3, 2, 1}, 0.791039, 1.71828, 13.7182},
      {{1, 2, -1}, 0.305398, 1.31219, 15.3088}, {{3, 2, -1}, 0.245890, 0.991008, 11.6415},
      {{1, 3, 1}, 0.386687, 1.56411, 15.5010},  {{3, 1, 1}, 0.538119, 1.99059, 18.8416},
      {{1, 3, -1}, 0.387184, 2.01524, 26.1337}, {{3, 1, -1}, 0.300936, 1.19855, 14.3857},
  };
  return t;
}

inline ClosedForm closed_form_asymmetric() {
  const AsymmetricTable t = asymmetric_table();
  ClosedForm c;
  c.family = "asymmetric";
  c.gamma_word = t.gamma_word;
  c.sigma2_word = t.sigma2_word;
  c.gamma_fenced = t.gamma_fenced;
  c.sigma2_fenced = t.sigma2_fenced;
  for (const auto& row : t.rows) {
    c.r.push_back(row.r);
    c.r1.push_back(row.d);
    c.r2.push_back(row.v);
  }
  return c;
}

struct Maximum {
  double q = 0.0;
  double value = 0.0;
};

/// Local maximum of f on [lo, hi] by Brent's method; the location is
/// resolved to about 1e-8 for smooth f.
template <class F>
Maximum maximize_on(F f, double lo, double hi) {
  if (!(lo < hi)) throw InvalidInput("maximize_on needs lo < hi");
  const auto r = boost::math::tools::brent_find_minima([&](double q) { return -f(q); }, lo, hi,
                                                       std::numeric_limits<double>::digits / 2);
  return {r.first, -r.second};
}

}  // namespace gwalk
