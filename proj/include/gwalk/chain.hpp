#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "gwalk/errors.hpp"
#include "gwalk/groupoid.hpp"
#include "gwalk/kernel.hpp"
#include "gwalk/rng.hpp"

namespace gwalk {

inline constexpr std::uint64_t kDefaultHittingCap = 1'000'000;

/// Draws the next letter from the target window of w.
inline const Generator& draw_letter(const ReducedWord& w, const TransitionKernel& kernel, Engine& rng) {
  return kernel.sample(w.target(), uniform01(rng));
}

inline ReducedWord step(ReducedWord w, const TransitionKernel& kernel, Engine& rng) {
  w.append_in_place(draw_letter(w, kernel, rng));
  return w;
}

struct LengthPair {
  std::size_t word_len = 0;
  double metric_len = 0.0;
};

/// A simulated path. In full mode `states` holds W_0..W_n; in streaming
/// mode only `lengths` is recorded and `final_state` is the last word.
struct Trajectory {
  ReducedWord initial;
  std::vector<ReducedWord> states;
  std::vector<LengthPair> lengths;
  ReducedWord final_state;
  std::uint64_t seed = 0;
};

enum class TrajectoryMode { Full, Streaming };

/// Runs n_steps of the chain from `start` with the engine seeded by `seed`.
/// `lengths` is filled in both modes (entry m is (|W_m|, |W_m|_metric)).
inline Trajectory simulate(const ReducedWord& start, const TransitionKernel& kernel, std::uint64_t n_steps,
                           std::uint64_t seed, const Metric& metric,
                           TrajectoryMode mode = TrajectoryMode::Streaming) {
  if (start.target() < 1 || start.target() > kernel.n()) throw InvalidInput("start word is not in G_N");
  Trajectory t;
  t.initial = start;
  t.seed = seed;
  Engine rng(seed);
  ReducedWord w = start;
  double mlen = metric_length(w, metric);
  t.lengths.reserve(n_steps + 1);
  t.lengths.push_back({w.length(), mlen});
  if (mode == TrajectoryMode::Full) {
    t.states.reserve(n_steps + 1);
    t.states.push_back(w);
  }
  for (std::uint64_t s = 0; s < n_steps; ++s) {
    const Generator& g = draw_letter(w, kernel, rng);
    const Generator last = w.is_unit() ? Generator{} : w.letters().back();
    const int delta = w.append_in_place(g);
    // metric update from the local rewrite alone
    if (delta == 1) {
      mlen += metric.weight(g);
    } else if (delta == -1) {
      mlen -= metric.weight(last);
    } else {
      mlen += metric.weight(w.letters().back()) - metric.weight(last);
    }
    t.lengths.push_back({w.length(), mlen});
    if (mode == TrajectoryMode::Full) t.states.push_back(w);
  }
  t.final_state = std::move(w);
  return t;
}

/// Final word after n_steps, without recording anything per step.
inline ReducedWord run_chain(ReducedWord w, const TransitionKernel& kernel, std::uint64_t n_steps, Engine& rng) {
  for (std::uint64_t s = 0; s < n_steps; ++s) w.append_in_place(draw_letter(w, kernel, rng));
  return w;
}

struct HittingTimeSample {
  Generator target;
  std::optional<std::uint64_t> time;  // empty when censored
  std::uint64_t cap = 0;

  bool censored() const noexcept { return !time.has_value(); }
};

/// First n >= 1 with W_n equal to the one-letter word `target`, started
/// from e_{target.i}; censored if it does not happen within `cap` steps.
inline HittingTimeSample sample_hitting_time(const Generator& target, const TransitionKernel& kernel,
                                             std::uint64_t cap, Engine& rng) {
  if (cap < 1) throw InvalidInput("hitting-time cap must be at least 1");
  if (!is_letter(target, kernel.n())) throw InvalidInput("hitting target is not a letter of G_N");
  ReducedWord w = ReducedWord::unit(target.i);
  for (std::uint64_t n = 1; n <= cap; ++n) {
    w.append_in_place(draw_letter(w, kernel, rng));
    if (w.length() == 1 && w.letters().front() == target) return {target, n, cap};
  }
  return {target, std::nullopt, cap};
}

inline HittingTimeSample sample_hitting_time(const Generator& target, const TransitionKernel& kernel,
                                             std::uint64_t cap, std::uint64_t seed) {
  Engine rng(seed);
  return sample_hitting_time(target, kernel, cap, rng);
}

}  // namespace gwalk
