#include <cmath>

#include <gtest/gtest.h>

#include "frozen.hpp"
#include "gwalk/oracle.hpp"
#include "gwalk/solver.hpp"
#include "support.hpp"

using namespace gwalk;
using testkit::rel_err;

namespace {

constexpr SolveOptions kTight{1e-15, 2'000'000};

// Symmetric kernel on n windows: every R solves R = lambda p (1 + (n-2) R + (n-1) R^2)
// with p = 1 / (2 (n-1)); the minimal root of that quadratic.
double symmetric_scalar_root(int n, double lambda) {
  const double p = 1.0 / (2.0 * (n - 1));
  const double a = lambda * p * (n - 1), b = lambda * p * (n - 2) - 1.0, c = lambda * p;
  return (-b - std::sqrt(b * b - 4 * a * c)) / (2 * a);
}

}  // namespace

TEST(SolveR, FrozenSymmetricScalarRoots) {
  const TransitionKernel k = symmetric_kernel(3);
  for (double v : solve_r(k, 0.5, kTight).values) EXPECT_LT(rel_err(v, frozen::kSym3R05), 1e-13);
  for (double v : solve_r(k, 0.9, kTight).values) EXPECT_LT(rel_err(v, frozen::kSym3R09), 1e-13);
}

TEST(SolveR, FrozenAsymmetricValues) {
  const TransitionKernel k = asymmetric_kernel();
  const RVector a = solve_r(k, 0.5, kTight), b = solve_r(k, 0.9, kTight);
  for (std::size_t t = 0; t < 12; ++t) {
    EXPECT_LT(rel_err(a.values[t], frozen::kAsymR05[t]), 1e-12) << t;
    EXPECT_LT(rel_err(b.values[t], frozen::kAsymR09[t]), 1e-12) << t;
  }
  EXPECT_LT(a.residual, 1e-14);
  EXPECT_GT(a.iterations, 0);
}

TEST(SolveR, SymmetricFamilyAtOne) {
  for (int n = 3; n <= 8; ++n) {
    const RVector r = solve_r(symmetric_kernel(n), 1.0, kTight);
    for (double v : r.values) EXPECT_NEAR(v, 1.0 / (n - 1), 1e-10) << n;
    for (double v : solve_r(symmetric_kernel(n), 0.7, kTight).values)
      EXPECT_LT(rel_err(v, symmetric_scalar_root(n, 0.7)), 1e-13);
  }
}

TEST(SolveR, LambdaZeroGivesZero) {
  for (double v : solve_r(asymmetric_kernel(), 0.0).values) EXPECT_EQ(v, 0.0);
}

TEST(SolveR, RejectsBadArguments) {
  EXPECT_THROW(solve_r(asymmetric_kernel(), 1.2), InvalidInput);
  EXPECT_THROW(solve_r(asymmetric_kernel(), -0.1), InvalidInput);
  EXPECT_THROW(solve_r(asymmetric_kernel(), 0.5, {0.0, 10}), InvalidInput);
  EXPECT_THROW(solve_r(asymmetric_kernel(), 1.0, {1e-15, 3}), NumericalFailure);
}

TEST(SolveR, MonotoneIteratesAndTransience) {
  const TransitionKernel k = asymmetric_kernel();
  const FixedPointMap f(k);
  std::vector<double> a(f.dim(), 0.0);
  for (int it = 0; it < 500; ++it) {
    const std::vector<double> next = f.apply(a, 1.0);
    for (std::size_t t = 0; t < a.size(); ++t) ASSERT_GE(next[t], a[t]);
    a = next;
  }
  const RVector r = solve_r(k, 1.0, kTight);
  for (std::size_t t = 0; t < a.size(); ++t) {
    EXPECT_LE(a[t], r.values[t] + 1e-12);
    EXPECT_LT(r.values[t], 1.0);
  }
  // monotone in lambda
  const RVector lo = solve_r(k, 0.6), hi = solve_r(k, 0.8);
  for (std::size_t t = 0; t < a.size(); ++t) EXPECT_LT(lo.values[t], hi.values[t]);
}

TEST(SolveR, PublishedAsymmetricTable) {
  const TransitionKernel k = asymmetric_kernel();
  const RVector r = solve_r(k, 1.0, kTight);
  const RDerivatives d = solve_r_derivatives(k, r);
  for (const auto& row : asymmetric_table().rows) {
    EXPECT_NEAR(r[row.g], row.r, 5e-6);
    EXPECT_NEAR(d.d1[generator_index(3, row.g)], row.d, 5e-5 * std::max(1.0, row.d));
    EXPECT_NEAR(d.d2[generator_index(3, row.g)], row.v, 5e-5 * std::max(1.0, row.v));
  }
}

TEST(MMatrix, SymmetricDiagonalAndRowStructure) {
  for (int n = 3; n <= 6; ++n) {
    const TransitionKernel k = symmetric_kernel(n);
    const Eigen::MatrixXd m = build_m_matrix(k, solve_r(k, 1.0, kTight)).m;
    for (Eigen::Index t = 0; t < m.rows(); ++t) EXPECT_NEAR(m(t, t), 1.0 / (2.0 * (n - 1)), 1e-12) << n;
    EXPECT_GE(m.minCoeff(), 0.0);
  }
}

TEST(MMatrix, JacobianMatchesFiniteDifferences) {
  const TransitionKernel k = asymmetric_kernel();
  const RVector r = solve_r(k, 0.8, kTight);
  const Eigen::MatrixXd m = build_m_matrix(k, r).m;
  const double h = 1e-6;
  for (std::size_t c = 0; c < 12; ++c) {
    std::vector<double> up = r.values, dn = r.values;
    up[c] += h;
    dn[c] -= h;
    const std::vector<double> fu = testkit::first_step_map(k, up, 0.8), fd = testkit::first_step_map(k, dn, 0.8);
    for (std::size_t row = 0; row < 12; ++row)
      EXPECT_NEAR(m(Eigen::Index(row), Eigen::Index(c)), (fu[row] - fd[row]) / (2 * h), 1e-8);
  }
}

TEST(MMatrix, PrimitiveAndPerronRoots) {
  for (const TransitionKernel& k : {symmetric_kernel(3), one_parameter_kernel(0.1), asymmetric_kernel()}) {
    const Eigen::MatrixXd m = build_m_matrix(k, solve_r(k, 1.0, kTight)).m;
    EXPECT_TRUE(pattern_power_all_positive(m, 4));
    const double rho = perron_root(m);
    EXPECT_GT(rho, 0.0);
    EXPECT_LT(rho, 1.0);
    const Eigen::MatrixXd m_one = build_m_matrix_at(k, std::vector<double>(12, 1.0), 1.0).m;
    EXPECT_GT(perron_root(m_one), 1.0);
  }
}

TEST(PerronRoot, KnownMatrices) {
  Eigen::MatrixXd a(2, 2);
  a << 2, 1, 1, 2;
  EXPECT_NEAR(perron_root(a), 3.0, 1e-12);
  EXPECT_EQ(perron_root(Eigen::MatrixXd::Zero(3, 3)), 0.0);
  Eigen::MatrixXd shift(3, 3);
  shift << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  EXPECT_FALSE(pattern_power_all_positive(shift, 9));
}

TEST(Derivatives, MatchCentralDifferencesOnTheAnalyticBranch) {
  for (const TransitionKernel& k : {symmetric_kernel(4), one_parameter_kernel(0.1), asymmetric_kernel()}) {
    const RVector r = solve_r(k, 1.0, kTight);
    const RDerivatives d = solve_r_derivatives(k, r);
    const double h = 5e-4;
    std::vector<std::vector<double>> f;
    for (int o = -2; o <= 2; ++o) f.push_back(o == 0 ? r.values : testkit::r_branch(k, 1 + o * h, r.values));
    for (std::size_t t = 0; t < r.values.size(); ++t) {
      const double d1 = (f[0][t] - 8 * f[1][t] + 8 * f[3][t] - f[4][t]) / (12 * h);
      const double d2 = (-f[0][t] + 16 * f[1][t] - 30 * f[2][t] + 16 * f[3][t] - f[4][t]) / (12 * h * h);
      EXPECT_LT(rel_err(d.d1[t], d1), 1e-7);
      EXPECT_LT(rel_err(d.d2[t], d2), 1e-5);
    }
  }
}

TEST(Derivatives, SymmetricClosedForm) {
  for (int n = 3; n <= 8; ++n) {
    const TransitionKernel k = symmetric_kernel(n);
    const RDerivatives d = solve_r_derivatives(k, solve_r(k, 1.0, kTight));
    const ClosedForm cf = closed_form_symmetric(n);
    for (std::size_t t = 0; t < d.d1.size(); ++t) {
      EXPECT_LT(rel_err(d.d1[t], cf.r1[0]), 1e-9);
      EXPECT_LT(rel_err(d.d2[t], cf.r2[0]), 1e-9);
    }
  }
}

TEST(Derivatives, NeedPositiveLambda) {
  const TransitionKernel k = asymmetric_kernel();
  EXPECT_THROW(solve_r_derivatives(k, solve_r(k, 0.0)), InvalidInput);
}
