#include <cmath>
#include <functional>
#include <map>

#include <gtest/gtest.h>

#include "frozen.hpp"
#include "gwalk/limits.hpp"
#include "gwalk/oracle.hpp"
#include "support.hpp"

using namespace gwalk;
using testkit::rel_err;

namespace {

// Exhaustive path enumeration with ReducedWord, independent of the DP's keys.
// visit(step, word, probability) is called for every path prefix.
void enumerate_paths(const TransitionKernel& k, const ReducedWord& w, double prob, int step, int max_steps,
                     const std::function<bool(int, const ReducedWord&, double)>& visit) {
  if (step == max_steps) return;
  for (const Generator& g : k.outgoing(w.target())) {
    ReducedWord next = append(w, g);
    const double p = prob * k.p(g);
    if (visit(step + 1, next, p)) enumerate_paths(k, next, p, step + 1, max_steps, visit);
  }
}

std::vector<double> brute_hitting(const TransitionKernel& k, const Generator& target, int m) {
  std::vector<double> c(m + 1, 0.0);
  const ReducedWord goal = ReducedWord::letter(target);
  enumerate_paths(k, ReducedWord::unit(target.i), 1.0, 0, m, [&](int s, const ReducedWord& w, double p) {
    if (w == goal) {
      c[s] += p;
      return false;  // first passage only
    }
    return true;
  });
  return c;
}

std::vector<double> brute_return(const TransitionKernel& k, int window, int m) {
  std::vector<double> c(m + 1, 0.0);
  c[0] = 1.0;
  enumerate_paths(k, ReducedWord::unit(window), 1.0, 0, m, [&](int s, const ReducedWord& w, double p) {
    if (w.is_unit()) c[s] += p;
    return true;
  });
  return c;
}

double brute_g(const TransitionKernel& k, const Metric& metric, int window, double lambda, double z, int m) {
  double g = 1.0;
  enumerate_paths(k, ReducedWord::unit(window), 1.0, 0, m, [&](int s, const ReducedWord& w, double p) {
    g += std::pow(lambda, s) * p * std::pow(z, metric_length(w, metric));
    return true;
  });
  return g;
}

}  // namespace

TEST(HittingSeries, LeadingCoefficients) {
  const TransitionKernel k = asymmetric_kernel();
  for (std::size_t idx = 0; idx < 12; ++idx) {
    const Generator g = generator_at(3, idx);
    const TruncatedSeries s = dp_hitting_series(k, g, 2);
    EXPECT_EQ(s.coeffs[0], 0.0);
    EXPECT_DOUBLE_EQ(s.coeffs[1], k.p(g));
    // two steps: the only route is a same-sign merge through the third window
    const int m = 6 - g.i - g.j;
    EXPECT_NEAR(s.coeffs[2], k.p(g.i, m, g.k) * k.p(m, g.j, g.k), 1e-16);
  }
}

TEST(HittingSeries, ExactAgainstPathEnumeration) {
  for (const TransitionKernel& k : {asymmetric_kernel(), symmetric_kernel(4)}) {
    for (const Generator& g : {Generator{1, 2, 1}, Generator{3, 1, -1}}) {
      const std::vector<double> want = brute_hitting(k, g, 8);
      const TruncatedSeries got = dp_hitting_series(k, g, 8);
      for (int m = 0; m <= 8; ++m) EXPECT_NEAR(got.coeffs[m], want[m], 1e-15) << m;
      EXPECT_EQ(got.dropped_mass(), 0.0);
    }
  }
}

TEST(HittingSeries, ConvergesToTheMinimalRoot) {
  const TransitionKernel k = symmetric_kernel(3);
  const DpOptions opt{1e-8, 0.9};
  const TruncatedSeries s = dp_hitting_series(k, {1, 2, 1}, 60, opt);
  const double partial = s.evaluate(0.9);
  const double bound = std::pow(0.9, 60) / 0.1 + s.dropped_bound(0.9);
  EXPECT_LE(partial, frozen::kSym3R09 + 1e-14);
  EXPECT_LE(frozen::kSym3R09 - partial, bound);
  // at lambda = 0.5 the truncation error is negligible
  const TruncatedSeries h = dp_hitting_series(k, {2, 3, -1}, 50, {1e-16, 0.5});
  EXPECT_NEAR(h.evaluate(0.5), frozen::kSym3R05, 1e-13);
}

TEST(HittingSeries, MassIsSubProbabilityAndBelowROne) {
  const TransitionKernel k = asymmetric_kernel();
  const RVector r1 = solve_r(k, 1.0);
  for (std::size_t idx = 0; idx < 12; ++idx) {
    const TruncatedSeries s = dp_hitting_series(k, generator_at(3, idx), 18);
    double partial = 0.0;
    for (double c : s.coeffs) {
      ASSERT_GE(c, 0.0);
      partial += c;
    }
    EXPECT_LT(partial, 1.0);
    EXPECT_LE(partial, r1.values[idx] + 1e-12);
    EXPECT_DOUBLE_EQ(partial, s.total_mass());
  }
}

TEST(HittingSeries, StateCapAndBadInput) {
  const TransitionKernel k = symmetric_kernel(3);
  EXPECT_THROW(dp_hitting_series(k, {1, 2, 1}, 30, {0.0, 1.0, 100}), StateSpaceExceeded);
  EXPECT_THROW(dp_hitting_series(k, {1, 1, 1}, 5), InvalidInput);
  EXPECT_THROW(dp_hitting_series(k, {1, 2, 1}, 0), InvalidInput);
  EXPECT_THROW(dp_hitting_series(k, {1, 2, 1}, 5, {-1.0, 1.0}), InvalidInput);
  EXPECT_THROW(dp_hitting_series(k, {1, 2, 1}, 5, {0.0, 0.0}), InvalidInput);
}

TEST(ReturnSeries, ExactSmallCoefficients) {
  const TransitionKernel k = asymmetric_kernel();
  const TruncatedSeries s = dp_return_series(k, 2, 8);
  EXPECT_EQ(s.coeffs[0], 1.0);
  EXPECT_EQ(s.coeffs[1], 0.0);
  double c2 = 0.0;
  for (const Generator& g : k.outgoing(2)) c2 += k.p(g) * k.p(g.j, g.i, g.k);
  EXPECT_NEAR(s.coeffs[2], c2, 1e-16);
  const std::vector<double> want = brute_return(k, 2, 8);
  for (int m = 0; m <= 8; ++m) EXPECT_NEAR(s.coeffs[m], want[m], 1e-15) << m;
}

TEST(ReturnSeries, PartialSumsIncreaseAndCoefficientsDecay) {
  const TransitionKernel k = symmetric_kernel(3);
  const TruncatedSeries s = dp_return_series(k, 1, 30, {1e-18, 1.0});
  double partial = 0.0;
  for (double c : s.coeffs) {
    ASSERT_GE(c, 0.0);
    const double next = partial + c;
    ASSERT_GE(next, partial);
    partial = next;
  }
  EXPECT_TRUE(std::isfinite(partial));
  // least-squares slope of log c_m over the upper half is negative
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int m = 15; m <= 30; ++m) {
    if (s.coeffs[m] <= 0.0) continue;
    const double y = std::log(s.coeffs[m]);
    sx += m, sy += y, sxx += double(m) * m, sxy += m * y;
    ++n;
  }
  ASSERT_GE(n, 8);
  EXPECT_LT((n * sxy - sx * sy) / (n * sxx - sx * sx), 0.0);
}

TEST(TruncatedG, TrivialCases) {
  const TransitionKernel k = symmetric_kernel(3);
  const Metric m = Metric::word(3);
  EXPECT_EQ(dp_truncated_G(k, m, 1, 0.5, 0.9, 0).value, 1.0);
  const double lam = 0.6;
  EXPECT_NEAR(dp_truncated_G(k, m, 2, lam, 1.0, 12).value, (1 - std::pow(lam, 13)) / (1 - lam), 1e-14);
  EXPECT_THROW(dp_truncated_G(k, m, 1, 1.0, 0.5, 4), InvalidInput);
  EXPECT_THROW(dp_truncated_G(k, m, 1, 0.5, 0.0, 4), InvalidInput);
  EXPECT_THROW(dp_truncated_G(k, m, 4, 0.5, 0.5, 4), InvalidInput);
}

TEST(TruncatedG, MatchesPathEnumeration) {
  const TransitionKernel k = asymmetric_kernel();
  const Metric m = Metric::fenced(3);
  EXPECT_NEAR(dp_truncated_G(k, m, 3, 0.6, 0.7, 8).value, brute_g(k, m, 3, 0.6, 0.7, 8), 1e-12);
}

TEST(TruncatedG, TailBound) {
  const TransitionKernel k = symmetric_kernel(3);
  const Metric m = Metric::word(3);
  const DpOptions opt{1e-12, 0.5};
  const TruncatedG a = dp_truncated_G(k, m, 1, 0.5, 0.9, 30, opt), b = dp_truncated_G(k, m, 1, 0.5, 0.9, 60, opt);
  EXPECT_GE(b.value, a.value);
  EXPECT_LT(b.value - a.value, 2 * std::pow(0.5, 31) + a.error_bound + b.error_bound);
}

TEST(ClosedForm, SymmetricExamples) {
  const ClosedForm c = closed_form_symmetric(3);
  EXPECT_DOUBLE_EQ(c.gamma_word, 0.25);
  EXPECT_DOUBLE_EQ(c.sigma2_word, 11.0 / 16.0);
  EXPECT_DOUBLE_EQ(c.gamma_fenced, 1.0 / 3.0);
  EXPECT_THROW(closed_form_symmetric(2), InvalidInput);
}

TEST(ClosedForm, QuarterPointIsTheSymmetricKernel) {
  const ClosedForm one = closed_form_one_parameter(0.25), sym = closed_form_symmetric(3);
  EXPECT_NEAR(one.gamma_word, sym.gamma_word, 1e-15);
  EXPECT_NEAR(one.sigma2_word, sym.sigma2_word, 1e-14);
  EXPECT_NEAR(one.gamma_fenced, sym.gamma_fenced, 1e-15);
  EXPECT_NEAR(one.sigma2_fenced, sym.sigma2_fenced, 1e-14);
  EXPECT_NEAR(one.sigma2_fenced, 35.0 / 27.0, 1e-14);
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_NEAR(one.r[t], sym.r[0], 1e-15);
    EXPECT_NEAR(one.r1[t], sym.r1[0], 1e-13);
    EXPECT_NEAR(one.r2[t], sym.r2[0], 1e-12);
  }
  EXPECT_THROW(closed_form_one_parameter(0.5), InvalidInput);
}

TEST(ClosedForm, OneParameterRValuesMatchSolver) {
  for (double q : {0.03, 0.1, 0.2, 0.35, 0.45}) {
    const ClosedForm cf = closed_form_one_parameter(q);
    const TransitionKernel k = one_parameter_kernel(q);
    const RVector r = solve_r(k, 1.0, {1e-15, 2'000'000});
    const RDerivatives d = solve_r_derivatives(k, r);
    // R_1 = R(2,1,.), R_2 = R(1,2,.), R_3 = R(1,3,.)
    const Generator reps[3] = {{2, 1, 1}, {1, 2, 1}, {1, 3, 1}};
    for (std::size_t t = 0; t < 3; ++t) {
      const std::size_t idx = generator_index(3, reps[t]);
      EXPECT_LT(rel_err(r.values[idx], cf.r[t]), 1e-10) << q << " " << t;
      EXPECT_LT(rel_err(d.d1[idx], cf.r1[t]), 1e-9) << q << " " << t;
      EXPECT_LT(rel_err(d.d2[idx], cf.r2[t]), 1e-9) << q << " " << t;
    }
  }
}

TEST(ClosedForm, CaptionMaxima) {
  auto gw = [](double q) { return closed_form_one_parameter(q).gamma_word; };
  auto gf = [](double q) { return closed_form_one_parameter(q).gamma_fenced; };
  auto sw = [](double q) { return closed_form_one_parameter(q).sigma2_word; };
  auto sf = [](double q) { return closed_form_one_parameter(q).sigma2_fenced; };
  const Maximum a = maximize_on(gw, 0.01, 0.49), b = maximize_on(gf, 0.01, 0.49), c = maximize_on(sw, 0.01, 0.49);
  EXPECT_NEAR(a.q, 0.25, 1e-6);
  EXPECT_NEAR(a.value, 0.25, 1e-12);
  EXPECT_NEAR(b.q, (8 - std::sqrt(6.0)) / 29, 1e-6);
  EXPECT_NEAR(b.value, (2.0 / 23) * (2 * std::sqrt(6.0) - 1), 1e-12);
  EXPECT_NEAR(c.q, 0.25, 1e-6);
  EXPECT_NEAR(c.value, 11.0 / 16.0, 1e-12);
  const Maximum d = maximize_on(sf, 1e-6, 0.05);
  EXPECT_NEAR(d.q, 0.00205319, 5e-9);
  EXPECT_NEAR(d.value, 2.01584, 5e-6);
  for (double dq : {-1e-4, 1e-4}) EXPECT_LT(sf(d.q + dq), d.value);
}

TEST(ClosedForm, AsymmetricTableAgainstFrozenOracle) {
  const ClosedForm c = closed_form_asymmetric();
  EXPECT_NEAR(c.gamma_word, frozen::kAsymWord.gamma, 1e-6);
  EXPECT_NEAR(c.sigma2_word, frozen::kAsymWord.sigma2, 1e-6);
  EXPECT_NEAR(c.gamma_fenced, frozen::kAsymFenced.gamma, 1e-6);
  EXPECT_NEAR(c.sigma2_fenced, frozen::kAsymFenced.sigma2, 1e-6);
  EXPECT_EQ(c.r.size(), 12u);
}
