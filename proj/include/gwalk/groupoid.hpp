#pragma once

// Word algebra of the fundamental groupoid G_N of an N-window domain.
//
// Arrows are generated by the letters A(i,j,k), i != j, k = +1 (upper
// half-plane) or -1 (lower half-plane), subject to
//
//     A(i,j,k) A(j,l,k) = A(i,l,k),      A(i,i,k) = e_i.
//
// Every arrow has a unique reduced representative in which consecutive
// letters alternate in sign. Window indices are 1-based everywhere.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gwalk/errors.hpp"

namespace gwalk {

struct Generator {
  int i = 1;
  int j = 2;
  int k = 1;

  constexpr int source() const noexcept { return i; }
  constexpr int target() const noexcept { return j; }
  constexpr Generator inverse() const noexcept { return {j, i, k}; }

  friend constexpr bool operator==(const Generator&, const Generator&) = default;
};

/// True when g is a letter of G_n: i != j, both in [1, n], k = +-1.
constexpr bool is_letter(const Generator& g, int n) noexcept {
  return g.i != g.j && g.i >= 1 && g.j >= 1 && g.i <= n && g.j <= n &&
         (g.k == 1 || g.k == -1);
}

/// Number of letters, 2N(N-1).
constexpr std::size_t generator_count(int n) noexcept {
  return static_cast<std::size_t>(2 * n * (n - 1));
}

/// Linear order of letters: k = +1 block first, then k = -1; inside a block
/// by i, then by j with j = i skipped.
constexpr std::size_t generator_index(int n, const Generator& g) noexcept {
  const std::size_t block = g.k == 1 ? 0 : static_cast<std::size_t>(n * (n - 1));
  const int jj = g.j < g.i ? g.j - 1 : g.j - 2;
  return block + static_cast<std::size_t>((g.i - 1) * (n - 1) + jj);
}

constexpr Generator generator_at(int n, std::size_t index) noexcept {
  const std::size_t half = static_cast<std::size_t>(n * (n - 1));
  const int k = index < half ? 1 : -1;
  const std::size_t r = index % half;
  const int i = static_cast<int>(r / static_cast<std::size_t>(n - 1)) + 1;
  int j = static_cast<int>(r % static_cast<std::size_t>(n - 1)) + 1;
  if (j >= i) ++j;
  return {i, j, k};
}

/// The unique reduced representative of an arrow. Empty letter sequence
/// means the unit e_source; units at different windows are distinct.
class ReducedWord {
 public:
  ReducedWord() = default;

  static ReducedWord unit(int window) {
    ReducedWord w;
    w.source_ = window;
    return w;
  }

  static ReducedWord letter(const Generator& g) {
    ReducedWord w;
    w.source_ = g.i;
    w.letters_.push_back(g);
    return w;
  }

  /// Builds a word from letters that are already reduced; throws
  /// InvalidInput if the sequence breaks chaining or sign alternation.
  static ReducedWord from_letters(int source, std::vector<Generator> letters) {
    ReducedWord w;
    w.source_ = source;
    w.letters_ = std::move(letters);
    if (!w.is_reduced()) throw InvalidInput("letter sequence is not a reduced word");
    return w;
  }

  int source() const noexcept { return source_; }
  int target() const noexcept { return letters_.empty() ? source_ : letters_.back().j; }
  bool is_unit() const noexcept { return letters_.empty(); }
  std::size_t length() const noexcept { return letters_.size(); }
  const std::vector<Generator>& letters() const noexcept { return letters_; }

  /// Right-multiplies by g in place and returns the change in letter count.
  ///
  /// At most one local rewrite happens. If the last letter has the same
  /// sign as g the two merge (or cancel when they backtrack); the letter
  /// before the last one has the opposite sign, so the merged letter can
  /// never combine further.
  int append_in_place(const Generator& g) {
    if (g.i != target()) {
      throw CompositionUndefined("cannot append A(" + std::to_string(g.i) + "," +
                                 std::to_string(g.j) + ") to a word ending at window " +
                                 std::to_string(target()));
    }
    if (g.i == g.j) return 0;
    if (!letters_.empty() && letters_.back().k == g.k) {
      Generator& last = letters_.back();
      if (last.i == g.j) {
        letters_.pop_back();
        return -1;
      }
      last.j = g.j;
      return 0;
    }
    letters_.push_back(g);
    return 1;
  }

  /// Chaining, sign alternation and i != j on every letter.
  bool is_reduced() const noexcept {
    int at = source_;
    for (std::size_t l = 0; l < letters_.size(); ++l) {
      const Generator& g = letters_[l];
      if (g.i != at || g.i == g.j || (g.k != 1 && g.k != -1)) return false;
      if (l > 0 && letters_[l - 1].k != -g.k) return false;
      at = g.j;
    }
    return true;
  }

  friend bool operator==(const ReducedWord&, const ReducedWord&) = default;

 private:
  int source_ = 1;
  std::vector<Generator> letters_;
};

inline ReducedWord append(ReducedWord w, const Generator& g) {
  w.append_in_place(g);
  return w;
}

inline ReducedWord compose(ReducedWord w1, const ReducedWord& w2) {
  if (w1.target() != w2.source()) {
    throw CompositionUndefined("target " + std::to_string(w1.target()) +
                               " does not match source " + std::to_string(w2.source()));
  }
  for (const Generator& g : w2.letters()) w1.append_in_place(g);
  return w1;
}

inline ReducedWord inverse(const ReducedWord& w) {
  std::vector<Generator> rev;
  rev.reserve(w.length());
  for (auto it = w.letters().rbegin(); it != w.letters().rend(); ++it) rev.push_back(it->inverse());
  return ReducedWord::from_letters(w.target(), std::move(rev));
}

/// Non-negative weight per letter; the length of a word is the sum over its
/// reduced letters.
class Metric {
 public:
  struct Entry {
    Generator g;
    double weight;
  };

  /// |.|: every letter has weight 1.
  static Metric word(int n) { return Metric(n, "word", [](const Generator&) { return 1.0; }); }

  /// |.|_F: letter A(i,j,k) has weight |i - j|.
  static Metric fenced(int n) {
    return Metric(n, "fenced", [](const Generator& g) { return std::abs(double(g.i - g.j)); });
  }

  static Metric uniform(int n, double w) {
    return Metric(n, "custom", [w](const Generator&) { return w; });
  }

  /// Every letter of G_n must appear exactly once.
  static Metric custom(int n, const std::vector<Entry>& entries) {
    check_n(n);
    Metric m;
    m.n_ = n;
    m.name_ = "custom";
    m.weights_.assign(generator_count(n), -1.0);
    for (const Entry& e : entries) {
      if (!is_letter(e.g, n)) throw InvalidInput("custom metric entry is not a letter of G_N");
      if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
        throw InvalidInput("metric weights must be finite and non-negative");
      }
      double& slot = m.weights_[generator_index(n, e.g)];
      if (slot >= 0.0) throw InvalidInput("duplicate custom metric entry");
      slot = e.weight;
    }
    for (double w : m.weights_) {
      if (w < 0.0) throw InvalidInput("custom metric is missing entries");
    }
    return m;
  }

  int n() const noexcept { return n_; }
  const std::string& name() const noexcept { return name_; }
  double weight(const Generator& g) const { return weights_[generator_index(n_, g)]; }
  const std::vector<double>& weights() const noexcept { return weights_; }

 private:
  Metric() = default;

  template <class F>
  Metric(int n, std::string name, F f) : n_(n), name_(std::move(name)) {
    check_n(n);
    weights_.resize(generator_count(n));
    for (std::size_t idx = 0; idx < weights_.size(); ++idx) weights_[idx] = f(generator_at(n, idx));
    for (double w : weights_) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInput("metric weights must be finite and non-negative");
    }
  }

  static void check_n(int n) {
    if (n < 2) throw InvalidInput("metric needs at least two windows");
  }

  int n_ = 0;
  std::string name_;
  std::vector<double> weights_;
};

inline double metric_length(const ReducedWord& w, const Metric& m) {
  double total = 0.0;
  for (const Generator& g : w.letters()) total += m.weight(g);
  return total;
}

// Text form: "e3" for units, "A(1,2,+)A(2,5,-)" otherwise.

inline std::string format_word(const ReducedWord& w) {
  if (w.is_unit()) return "e" + std::to_string(w.source());
  std::string out;
  for (const Generator& g : w.letters()) {
    out += "A(" + std::to_string(g.i) + "," + std::to_string(g.j) + "," + (g.k == 1 ? "+" : "-") + ")";
  }
  return out;
}

namespace detail {

inline int parse_index(std::string_view s, std::size_t& pos) {
  const std::size_t start = pos;
  long value = 0;
  while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
    value = value * 10 + (s[pos] - '0');
    if (value > 1000000) throw InvalidInput("window index too large");
    ++pos;
  }
  if (pos == start) throw InvalidInput("expected a window index in word text");
  if (s[start] == '0') throw InvalidInput("window indices are 1-based without leading zeros");
  return static_cast<int>(value);
}

inline void expect(std::string_view s, std::size_t& pos, char c) {
  if (pos >= s.size() || s[pos] != c) {
    throw InvalidInput(std::string("malformed word text: expected '") + c + "'");
  }
  ++pos;
}

}  // namespace detail

/// Inverse of format_word. Rejects text that is not already reduced.
inline ReducedWord parse_word(std::string_view s) {
  std::size_t pos = 0;
  if (!s.empty() && s[0] == 'e') {
    ++pos;
    const int window = detail::parse_index(s, pos);
    if (pos != s.size()) throw InvalidInput("trailing characters after unit word");
    return ReducedWord::unit(window);
  }
  std::vector<Generator> letters;
  while (pos < s.size()) {
    detail::expect(s, pos, 'A');
    detail::expect(s, pos, '(');
    Generator g;
    g.i = detail::parse_index(s, pos);
    detail::expect(s, pos, ',');
    g.j = detail::parse_index(s, pos);
    detail::expect(s, pos, ',');
    if (pos >= s.size() || (s[pos] != '+' && s[pos] != '-')) throw InvalidInput("letter sign must be + or -");
    g.k = s[pos] == '+' ? 1 : -1;
    ++pos;
    detail::expect(s, pos, ')');
    letters.push_back(g);
  }
  if (letters.empty()) throw InvalidInput("empty word text");
  const int source = letters.front().i;
  return ReducedWord::from_letters(source, std::move(letters));
}

}  // namespace gwalk
