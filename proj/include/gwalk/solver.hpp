#pragma once

// First-passage generating functions R(i,j,k)(lambda) = E_{e_i}[lambda^T],
// T the hitting time of the one-letter word A(i,j,k). First-step analysis
// gives, for every letter l = (i,j,k),
//
//   R_l = lambda [ p(i,j,k) + sum_{m != i,j} p(i,m,k) R(m,j,k)
//                           + sum_{m != i}   p(i,m,-k) R(m,i,-k) R(i,j,k) ].
//
// The right-hand side is a quadratic map with non-negative coefficients, so
// iterating it from f(0) increases monotonically to the minimal fixed
// point, which is the probabilistic solution.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gwalk/errors.hpp"
#include "gwalk/groupoid.hpp"
#include "gwalk/kernel.hpp"

namespace gwalk {

struct SolveOptions {
  double tol = 1e-13;
  long max_iter = 1'000'000;
};

/// R values at one lambda, in generator_index order.
struct RVector {
  int n = 0;
  double lambda = 0.0;
  std::vector<double> values;
  double residual = 0.0;
  long iterations = 0;

  double operator[](const Generator& g) const { return values[generator_index(n, g)]; }
  double at(int i, int j, int k) const { return (*this)[Generator{i, j, k}]; }
};

/// dR/dlambda and d2R/dlambda2, same ordering as RVector.
struct RDerivatives {
  int n = 0;
  std::vector<double> d1;
  std::vector<double> d2;

  double first(int i, int j, int k) const { return d1[generator_index(n, {i, j, k})]; }
  double second(int i, int j, int k) const { return d2[generator_index(n, {i, j, k})]; }
};

/// Jacobian of the fixed-point map, lambda * dF/dq at a point q.
struct DerivativeSystem {
  int n = 0;
  Eigen::MatrixXd m;
};

/// The bracketed polynomial F of the fixed-point map f(q, lambda) = lambda F(q).
class FixedPointMap {
 public:
  explicit FixedPointMap(const TransitionKernel& kernel) : kernel_(kernel), n_(kernel.n()) {}

  int n() const noexcept { return n_; }
  std::size_t dim() const noexcept { return generator_count(n_); }

  std::vector<double> apply(const std::vector<double>& q, double lambda) const {
    std::vector<double> out(dim());
    for (std::size_t idx = 0; idx < out.size(); ++idx) out[idx] = lambda * component(q, generator_at(n_, idx));
    return out;
  }

  /// F_l(q) for letter l = (i,j,k).
  double component(const std::vector<double>& q, const Generator& l) const {
    const int i = l.i, j = l.j, k = l.k;
    double same = 0.0;
    double flip = 0.0;
    for (int m = 1; m <= n_; ++m) {
      if (m == i) continue;
      if (m != j) same += kernel_.p(i, m, k) * q[idx(m, j, k)];
      flip += kernel_.p(i, m, -k) * q[idx(m, i, -k)];
    }
    return kernel_.p(i, j, k) + same + flip * q[idx(i, j, k)];
  }

  /// Returns sum_{m != i} p(i,m,-k) q(m,i,-k): the return-then-repeat weight.
  double flip_weight(const std::vector<double>& q, int i, int k) const {
    double s = 0.0;
    for (int m = 1; m <= n_; ++m) {
      if (m != i) s += kernel_.p(i, m, -k) * q[idx(m, i, -k)];
    }
    return s;
  }

  /// dF/dq at q, scaled by lambda.
  Eigen::MatrixXd jacobian(const std::vector<double>& q, double lambda) const {
    const std::size_t d = dim();
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t row = 0; row < d; ++row) {
      const Generator l = generator_at(n_, row);
      const int i = l.i, j = l.j, k = l.k;
      const auto r = static_cast<Eigen::Index>(row);
      for (int m = 1; m <= n_; ++m) {
        if (m == i) continue;
        // same sign, same target: column (m, j, k)
        if (m != j) jac(r, static_cast<Eigen::Index>(idx(m, j, k))) += lambda * kernel_.p(i, m, k);
        // opposite sign returning to i: column (m, i, -k)
        jac(r, static_cast<Eigen::Index>(idx(m, i, -k))) += lambda * kernel_.p(i, m, -k) * q[row];
      }
      jac(r, r) += lambda * flip_weight(q, i, k);
    }
    return jac;
  }

  /// Second directional derivative F''[d, d].
  std::vector<double> second_variation(const std::vector<double>& d) const {
    std::vector<double> out(dim());
    for (std::size_t row = 0; row < out.size(); ++row) {
      const Generator l = generator_at(n_, row);
      out[row] = 2.0 * flip_weight(d, l.i, l.k) * d[row];
    }
    return out;
  }

 private:
  std::size_t idx(int i, int j, int k) const { return generator_index(n_, {i, j, k}); }

  const TransitionKernel& kernel_;
  int n_;
};

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) m = std::max(m, std::abs(a[t] - b[t]));
  return m;
}

/// Fixed-point defect |f(q) - q|_inf.
inline double fixed_point_residual(const TransitionKernel& kernel, const std::vector<double>& q, double lambda) {
  return max_abs_diff(FixedPointMap(kernel).apply(q, lambda), q);
}

/// Minimal fixed point by the monotone iteration a_{n+1} = f(a_n),
/// a_0 = f(0). Stops when the max-norm update drops below tol.
inline RVector solve_r(const TransitionKernel& kernel, double lambda, const SolveOptions& opt = {}) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidInput("lambda must lie in [0, 1]");
  if (!(opt.tol > 0.0)) throw InvalidInput("tolerance must be positive");
  const FixedPointMap f(kernel);
  RVector out;
  out.n = kernel.n();
  out.lambda = lambda;
  std::vector<double> a = f.apply(std::vector<double>(f.dim(), 0.0), lambda);
  double update = 0.0;
  for (long it = 1; it <= opt.max_iter; ++it) {
    std::vector<double> next = f.apply(a, lambda);
    update = max_abs_diff(next, a);
    a = std::move(next);
    if (update < opt.tol) {
      out.values = std::move(a);
      out.iterations = it;
      out.residual = fixed_point_residual(kernel, out.values, lambda);
      return out;
    }
  }
  throw NumericalFailure("R iteration did not converge in " + std::to_string(opt.max_iter) +
                         " iterations (last update " + std::to_string(update) + ")");
}

/// M(lambda): entries lambda p(i,i',k) on the same-target column block,
/// lambda p(i,i',-k) R(i,j,k) on the sign-flip block returning to i, and
/// lambda sum_l p(i,l,-k) R(l,i,-k) on the diagonal.
inline DerivativeSystem build_m_matrix(const TransitionKernel& kernel, const RVector& r) {
  if (r.n != kernel.n() || r.values.size() != generator_count(kernel.n())) {
    throw InvalidInput("R vector does not match the kernel");
  }
  return {kernel.n(), FixedPointMap(kernel).jacobian(r.values, r.lambda)};
}

/// Same matrix evaluated at arbitrary q (used with q = 1 to probe the
/// recurrent hypothesis).
inline DerivativeSystem build_m_matrix_at(const TransitionKernel& kernel, const std::vector<double>& q,
                                          double lambda) {
  return {kernel.n(), FixedPointMap(kernel).jacobian(q, lambda)};
}

namespace detail {

inline std::vector<double> solve_dense(const Eigen::MatrixXd& a, const std::vector<double>& rhs) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) throw NumericalFailure("singular derivative system (rcond " + std::to_string(rcond) + ")");
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  const Eigen::VectorXd x = lu.solve(b);
  return {x.data(), x.data() + x.size()};
}

}  // namespace detail

/// Implicit differentiation of R = lambda F(R):
///   (I - M) d = R / lambda
///   (I - M) v = 2 F'(R) d + lambda F''[d, d]
/// with M = lambda F'(R).
inline RDerivatives solve_r_derivatives(const TransitionKernel& kernel, const RVector& r) {
  if (!(r.lambda > 0.0)) throw InvalidInput("derivatives need lambda > 0");
  const FixedPointMap f(kernel);
  const Eigen::MatrixXd m = f.jacobian(r.values, r.lambda);
  const auto d = static_cast<Eigen::Index>(f.dim());
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(d, d) - m;

  std::vector<double> rhs1(r.values);
  for (double& x : rhs1) x /= r.lambda;
  RDerivatives out;
  out.n = kernel.n();
  out.d1 = detail::solve_dense(a, rhs1);

  const Eigen::VectorXd d1 = Eigen::Map<const Eigen::VectorXd>(out.d1.data(), d);
  const Eigen::VectorXd jd = (m * d1) / r.lambda;
  const std::vector<double> curv = f.second_variation(out.d1);
  std::vector<double> rhs2(f.dim());
  for (std::size_t t = 0; t < rhs2.size(); ++t) {
    rhs2[t] = 2.0 * jd(static_cast<Eigen::Index>(t)) + r.lambda * curv[t];
  }
  out.d2 = detail::solve_dense(a, rhs2);
  return out;
}

/// Perron root of a non-negative matrix by power iteration in the 1-norm.
/// Works for primitive matrices; for period-2 matrices pass the square.
inline double perron_root(const Eigen::MatrixXd& a, double tol = 1e-13, long max_iter = 100000) {
  const Eigen::Index d = a.rows();
  if (d == 0 || a.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  Eigen::VectorXd x = Eigen::VectorXd::Ones(d) / static_cast<double>(d);
  double estimate = 0.0;
  for (long it = 0; it < max_iter; ++it) {
    Eigen::VectorXd y = a * x;
    const double norm = y.sum();
    if (norm == 0.0) return 0.0;
    y /= norm;
    const double diff = (y - x).cwiseAbs().maxCoeff();
    x = std::move(y);
    estimate = norm;
    if (diff < tol) {
      // Collatz-Wielandt bracket at the converged vector
      const Eigen::VectorXd ax = a * x;
      double lo = INFINITY, hi = 0.0;
      for (Eigen::Index t = 0; t < d; ++t) {
        if (x(t) > 0) {
          lo = std::min(lo, ax(t) / x(t));
          hi = std::max(hi, ax(t) / x(t));
        }
      }
      return 0.5 * (lo + hi);
    }
  }
  throw NumericalFailure("power iteration did not converge (estimate " + std::to_string(estimate) + ")");
}

/// Gamma(A): 1 where A is strictly positive, 0 elsewhere.
inline Eigen::MatrixXi positivity_pattern(const Eigen::MatrixXd& a) {
  return (a.array() > 0.0).cast<int>();
}

/// True iff every entry of Gamma(A^power) is 1, computed on the 0/1
/// pattern so rounding cannot hide a structural zero.
inline bool pattern_power_all_positive(const Eigen::MatrixXd& a, int power) {
  const Eigen::MatrixXi g = positivity_pattern(a);
  Eigen::MatrixXi acc = g;
  for (int p = 1; p < power; ++p) acc = ((acc * g).array() > 0).cast<int>();
  return (acc.array() > 0).all();
}

}  // namespace gwalk
