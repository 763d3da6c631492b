#pragma once

// Transition law of the chain W_{n+1} = W_n A(i,j,k): the increment is a
// letter leaving the current target window i, drawn with probability
// p(i,j,k) independent of everything else.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gwalk/errors.hpp"
#include "gwalk/groupoid.hpp"

namespace gwalk {

inline constexpr double kRowSumTolerance = 1e-12;

struct RawKernel {
  struct Entry {
    int i = 0;
    int j = 0;
    int k = 0;
    double value = 0.0;
  };
  int n = 0;
  std::vector<Entry> entries;
};

struct KernelViolation {
  enum class Kind { TooFewWindows, BadLetter, Duplicate, Missing, OutOfRange, RowSum };
  Kind kind;
  int window = 0;  // row for RowSum, source window otherwise (0 when not applicable)
  double deficit = 0.0;  // 1 - row sum for RowSum
  std::string message;
};

struct KernelCheck;

class TransitionKernel {
 public:
  int n() const noexcept { return n_; }
  std::size_t size() const noexcept { return p_.size(); }
  double p(const Generator& g) const { return p_[generator_index(n_, g)]; }
  double p(int i, int j, int k) const { return p(Generator{i, j, k}); }

  /// Probabilities in generator_index order.
  const std::vector<double>& probabilities() const noexcept { return p_; }

  /// Letters leaving window i, in the order used by the cumulative table.
  const std::vector<Generator>& outgoing(int i) const { return out_[static_cast<std::size_t>(i - 1)]; }

  /// Inverse-CDF draw of a letter leaving window i from u in [0, 1).
  const Generator& sample(int i, double u) const {
    const auto& cdf = cdf_[static_cast<std::size_t>(i - 1)];
    const auto& letters = out_[static_cast<std::size_t>(i - 1)];
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t idx = static_cast<std::size_t>(it - cdf.begin());
    if (idx >= letters.size()) idx = letters.size() - 1;
    return letters[idx];
  }

  RawKernel raw() const {
    RawKernel r;
    r.n = n_;
    for (std::size_t idx = 0; idx < p_.size(); ++idx) {
      const Generator g = generator_at(n_, idx);
      r.entries.push_back({g.i, g.j, g.k, p_[idx]});
    }
    return r;
  }

 private:
  friend KernelCheck validate_kernel(const RawKernel& raw);

  TransitionKernel(int n, std::vector<double> probs) : n_(n), p_(std::move(probs)) {
    out_.resize(static_cast<std::size_t>(n_));
    cdf_.resize(static_cast<std::size_t>(n_));
    for (int i = 1; i <= n_; ++i) {
      auto& letters = out_[static_cast<std::size_t>(i - 1)];
      auto& cdf = cdf_[static_cast<std::size_t>(i - 1)];
      double acc = 0.0;
      for (int k : {1, -1}) {
        for (int j = 1; j <= n_; ++j) {
          if (j == i) continue;
          letters.push_back({i, j, k});
          acc += p(i, j, k);
          cdf.push_back(acc);
        }
      }
      // absorb the row-sum rounding so that u < 1 always lands on a letter
      for (double& c : cdf) c /= acc;
    }
  }

  int n_ = 0;
  std::vector<double> p_;
  std::vector<std::vector<Generator>> out_;
  std::vector<std::vector<double>> cdf_;
};

struct KernelCheck {
  std::optional<TransitionKernel> kernel;
  std::vector<KernelViolation> violations;

  bool ok() const noexcept { return kernel.has_value(); }
  std::string report() const {
    std::string out;
    for (const auto& v : violations) out += v.message + "\n";
    return out;
  }
};

/// Checks N >= 3, every letter present exactly once, p in (0,1) and unit
/// row sums; collects every violation rather than stopping at the first.
inline KernelCheck validate_kernel(const RawKernel& raw) {
  KernelCheck check;
  auto fail = [&](KernelViolation::Kind kind, int window, double deficit, std::string msg) {
    check.violations.push_back({kind, window, deficit, std::move(msg)});
  };
  if (raw.n < 3) {
    fail(KernelViolation::Kind::TooFewWindows, 0, 0.0,
         "N = " + std::to_string(raw.n) + ": at least 3 windows are required");
    return check;
  }
  const int n = raw.n;
  std::vector<double> p(generator_count(n), 0.0);
  std::vector<bool> seen(generator_count(n), false);
  auto name = [](int i, int j, int k) {
    return "p(" + std::to_string(i) + "," + std::to_string(j) + "," + (k == 1 ? "+1" : "-1") + ")";
  };
  for (const auto& e : raw.entries) {
    const Generator g{e.i, e.j, e.k};
    if (!is_letter(g, n)) {
      fail(KernelViolation::Kind::BadLetter, 0, 0.0,
           "entry (" + std::to_string(e.i) + "," + std::to_string(e.j) + "," + std::to_string(e.k) +
               ") is not a letter of G_" + std::to_string(n));
      continue;
    }
    const std::size_t idx = generator_index(n, g);
    if (seen[idx]) {
      fail(KernelViolation::Kind::Duplicate, e.i, 0.0, name(e.i, e.j, e.k) + " is given more than once");
      continue;
    }
    seen[idx] = true;
    p[idx] = e.value;
    if (!(e.value > 0.0 && e.value < 1.0)) {
      std::ostringstream os;
      os << name(e.i, e.j, e.k) << " = " << e.value << " is not in (0,1)";
      fail(KernelViolation::Kind::OutOfRange, e.i, 0.0, os.str());
    }
  }
  for (std::size_t idx = 0; idx < seen.size(); ++idx) {
    if (!seen[idx]) {
      const Generator g = generator_at(n, idx);
      fail(KernelViolation::Kind::Missing, g.i, 0.0, name(g.i, g.j, g.k) + " is missing");
    }
  }
  for (int i = 1; i <= n; ++i) {
    double sum = 0.0;
    for (int k : {1, -1}) {
      for (int j = 1; j <= n; ++j) {
        if (j != i) sum += p[generator_index(n, {i, j, k})];
      }
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      std::ostringstream os;
      os.precision(15);
      os << "row " << i << " sums to " << sum << " (deficit " << 1.0 - sum << ")";
      fail(KernelViolation::Kind::RowSum, i, 1.0 - sum, os.str());
    }
  }
  if (check.violations.empty()) check.kernel = TransitionKernel(n, std::move(p));
  return check;
}

inline TransitionKernel require_valid(const RawKernel& raw) {
  KernelCheck c = validate_kernel(raw);
  if (!c.ok()) throw InvalidInput("invalid transition kernel:\n" + c.report());
  return std::move(*c.kernel);
}

// Named families.

/// p = 1/(2N-2) for every letter.
inline TransitionKernel symmetric_kernel(int n) {
  if (n < 3) throw InvalidInput("symmetric kernel needs N >= 3");
  RawKernel raw;
  raw.n = n;
  for (std::size_t idx = 0; idx < generator_count(n); ++idx) {
    const Generator g = generator_at(n, idx);
    raw.entries.push_back({g.i, g.j, g.k, 1.0 / (2.0 * n - 2.0)});
  }
  return require_valid(raw);
}

/// N = 3, left-right and up-down symmetric, 0 < q < 1/2.
inline TransitionKernel one_parameter_kernel(double q) {
  if (!(q > 0.0 && q < 0.5)) throw InvalidInput("one-parameter kernel needs 0 < q < 1/2");
  RawKernel raw;
  raw.n = 3;
  for (int k : {1, -1}) {
    raw.entries.push_back({2, 1, k, 0.25});
    raw.entries.push_back({2, 3, k, 0.25});
    raw.entries.push_back({1, 2, k, q});
    raw.entries.push_back({3, 2, k, q});
    raw.entries.push_back({1, 3, k, 0.5 - q});
    raw.entries.push_back({3, 1, k, 0.5 - q});
  }
  return require_valid(raw);
}

/// The fixed N = 3 kernel with no symmetry.
inline TransitionKernel asymmetric_kernel() {
  RawKernel raw;
  raw.n = 3;
  raw.entries = {
      {2, 1, 1, 17.0 / 40}, {2, 3, 1, 1.0 / 5},   {2, 1, -1, 1.0 / 8}, {2, 3, -1, 1.0 / 4},
      {1, 2, 1, 43.0 / 70}, {3, 2, 1, 43.0 / 72}, {1, 2, -1, 1.0 / 7}, {3, 2, -1, 1.0 / 8},
      {1, 3, 1, 1.0 / 10},  {3, 1, 1, 1.0 / 9},   {1, 3, -1, 1.0 / 7}, {3, 1, -1, 1.0 / 6},
  };
  return require_valid(raw);
}

}  // namespace gwalk
