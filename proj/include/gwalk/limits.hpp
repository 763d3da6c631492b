#pragma once

// Drift and variance of |W_n|_metric.
//
// With B(k; lambda, z)_{ij} = z^{|A(i,j,k)|} R(i,j,k)(lambda) (zero diagonal)
// and h(lambda, z) = det[I - B(+1) B(-1)], the constants are
//
//   gamma   = h_z / h_l
//   sigma^2 = (h_zz + h_z - 2 gamma h_lz + gamma^2 (h_ll + h_l)) / h_l
//
// with all partials at (1, 1). The partials come out of one determinant
// evaluation over second-order jets.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gwalk/errors.hpp"
#include "gwalk/groupoid.hpp"
#include "gwalk/jet.hpp"
#include "gwalk/kernel.hpp"
#include "gwalk/solver.hpp"

namespace gwalk {

/// Dense square matrix of jets, 0-based storage.
class JetMatrix {
 public:
  JetMatrix() = default;
  explicit JetMatrix(int n) : n_(n), a_(static_cast<std::size_t>(n * n)) {}

  static JetMatrix identity(int n) {
    JetMatrix m(n);
    for (int t = 0; t < n; ++t) m(t, t) = Jet2(1.0);
    return m;
  }

  int n() const noexcept { return n_; }
  Jet2& operator()(int r, int c) { return a_[static_cast<std::size_t>(r * n_ + c)]; }
  const Jet2& operator()(int r, int c) const { return a_[static_cast<std::size_t>(r * n_ + c)]; }

  /// Constant terms as a real matrix.
  Eigen::MatrixXd values() const {
    Eigen::MatrixXd m(n_, n_);
    for (int r = 0; r < n_; ++r)
      for (int c = 0; c < n_; ++c) m(r, c) = (*this)(r, c).c00;
    return m;
  }

  friend JetMatrix operator*(const JetMatrix& a, const JetMatrix& b) {
    JetMatrix out(a.n_);
    for (int r = 0; r < a.n_; ++r)
      for (int c = 0; c < a.n_; ++c) {
        Jet2 acc;
        for (int t = 0; t < a.n_; ++t) acc += a(r, t) * b(t, c);
        out(r, c) = acc;
      }
    return out;
  }
  friend JetMatrix operator-(const JetMatrix& a, const JetMatrix& b) {
    JetMatrix out(a.n_);
    for (std::size_t t = 0; t < a.a_.size(); ++t) out.a_[t] = a.a_[t] - b.a_[t];
    return out;
  }
  friend JetMatrix operator+(const JetMatrix& a, const JetMatrix& b) {
    JetMatrix out(a.n_);
    for (std::size_t t = 0; t < a.a_.size(); ++t) out.a_[t] = a.a_[t] + b.a_[t];
    return out;
  }

 private:
  int n_ = 0;
  std::vector<Jet2> a_;
};

/// B(sign; lambda, z) as jets about (1, 1). Requires R, R', R'' at lambda = 1.
inline JetMatrix build_b(const TransitionKernel& kernel, const RVector& r, const RDerivatives& d,
                         const Metric& metric, int sign) {
  const int n = kernel.n();
  if (r.lambda != 1.0) throw InvalidInput("B jets are expanded about lambda = 1");
  if (metric.n() != n || r.n != n || d.n != n) throw InvalidInput("kernel, R and metric sizes differ");
  if (sign != 1 && sign != -1) throw InvalidInput("sign must be +1 or -1");
  JetMatrix b(n);
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) {
      if (i == j) continue;
      const Generator g{i, j, sign};
      const std::size_t idx = generator_index(n, g);
      const Jet2 lambda_part{r.values[idx], d.d1[idx], 0.0, 0.5 * d.d2[idx], 0.0, 0.0};
      b(i - 1, j - 1) = Jet2::z_power(metric.weight(g)) * lambda_part;
    }
  }
  return b;
}

namespace detail {

inline constexpr double kPivotFloor = 1e-14;

inline Jet2 cofactor_determinant(const JetMatrix& a, std::vector<int>& rows, std::vector<int>& cols) {
  const std::size_t m = rows.size();
  if (m == 1) return a(rows[0], cols[0]);
  Jet2 det;
  const int r0 = rows.front();
  std::vector<int> sub_rows(rows.begin() + 1, rows.end());
  for (std::size_t c = 0; c < m; ++c) {
    std::vector<int> sub_cols;
    sub_cols.reserve(m - 1);
    for (std::size_t t = 0; t < m; ++t)
      if (t != c) sub_cols.push_back(cols[t]);
    const Jet2 term = a(r0, cols[c]) * cofactor_determinant(a, sub_rows, sub_cols);
    det = (c % 2 == 0) ? det + term : det - term;
  }
  return det;
}

}  // namespace detail

/// Determinant by Laplace expansion along the first row; no divisions.
inline Jet2 jet_determinant_cofactor(const JetMatrix& a) {
  if (a.n() == 0) return Jet2(1.0);
  std::vector<int> idx(static_cast<std::size_t>(a.n()));
  for (int t = 0; t < a.n(); ++t) idx[static_cast<std::size_t>(t)] = t;
  std::vector<int> cols = idx;
  return detail::cofactor_determinant(a, idx, cols);
}

/// Determinant over the jet ring by Gaussian elimination, pivoting on the
/// largest constant term. Only the last pivot may vanish, and it is never
/// divided by. Falls back to cofactor expansion for n <= 6 when an earlier
/// column has no usable pivot.
inline Jet2 jet_determinant(const JetMatrix& original) {
  JetMatrix a = original;
  const int n = a.n();
  Jet2 det(1.0);
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r) {
      if (std::abs(a(r, c).c00) > std::abs(a(piv, c).c00)) piv = r;
    }
    if (c == n - 1) {
      det *= a(c, c);
      break;
    }
    if (std::abs(a(piv, c).c00) < detail::kPivotFloor) {
      if (n <= 6) return jet_determinant_cofactor(original);
      throw NumericalFailure("jet determinant: no usable pivot in column " + std::to_string(c));
    }
    if (piv != c) {
      for (int t = 0; t < n; ++t) std::swap(a(piv, t), a(c, t));
      det = -det;
    }
    const Jet2 inv = reciprocal(a(c, c));
    det *= a(c, c);
    for (int r = c + 1; r < n; ++r) {
      const Jet2 factor = a(r, c) * inv;
      a(r, c) = Jet2();
      for (int t = c + 1; t < n; ++t) a(r, t) -= factor * a(c, t);
    }
  }
  return det;
}

/// h(lambda, z) = det[I - B(+1) B(-1)] as a jet about (1, 1).
inline Jet2 det_h(const JetMatrix& b_plus, const JetMatrix& b_minus) {
  if (b_plus.n() != b_minus.n()) throw InvalidInput("B(+1) and B(-1) differ in size");
  return jet_determinant(JetMatrix::identity(b_plus.n()) - b_plus * b_minus);
}

struct HPartials {
  double h = 0.0;
  double d_lambda = 0.0;
  double d_z = 0.0;
  double d_lambda2 = 0.0;
  double d_lambda_z = 0.0;
  double d_z2 = 0.0;
};

struct LimitConstants {
  double gamma = 0.0;
  double sigma2 = 0.0;
  HPartials partials;
  std::string metric;  // "word", "fenced" or "custom"
  std::vector<std::string> warnings;
};

inline constexpr double kSimpleZeroTolerance = 1e-10;

/// gamma and sigma^2 from the jet of h. Throws NumericalFailure when h_l
/// vanishes or sigma^2 comes out negative.
inline LimitConstants limit_constants(const Jet2& h) {
  LimitConstants out;
  HPartials& p = out.partials;
  p.h = h.value();
  p.d_lambda = h.d_lambda();
  p.d_z = h.d_z();
  p.d_lambda2 = h.d_lambda2();
  p.d_lambda_z = h.d_lambda_z();
  p.d_z2 = h.d_z2();
  if (!(std::abs(p.d_lambda) > 1e-300) || !std::isfinite(p.d_lambda)) {
    throw NumericalFailure("d h / d lambda vanishes at (1,1); upstream R values are inconsistent");
  }
  const double g = p.d_z / p.d_lambda;
  out.gamma = g;
  out.sigma2 = (p.d_z2 + p.d_z - 2.0 * g * p.d_lambda_z + g * g * (p.d_lambda2 + p.d_lambda)) / p.d_lambda;
  if (std::abs(p.h) > kSimpleZeroTolerance) {
    out.warnings.push_back("h(1,1) = " + std::to_string(p.h) + " is not a zero to 1e-10");
  }
  if (out.sigma2 < -1e-12) throw NumericalFailure("negative variance " + std::to_string(out.sigma2));
  if (out.gamma == 0.0 || std::abs(out.sigma2) <= 1e-12) {
    out.warnings.push_back("degenerate metric: gamma = " + std::to_string(out.gamma) +
                           ", sigma2 = " + std::to_string(out.sigma2));
  }
  return out;
}

/// Everything the limit pipeline computes for one kernel and metric.
struct LimitReport {
  RVector r;
  RDerivatives derivatives;
  Jet2 h;
  LimitConstants constants;
};

inline LimitReport compute_limits(const TransitionKernel& kernel, const Metric& metric,
                                  const SolveOptions& opt = {}) {
  LimitReport rep;
  rep.r = solve_r(kernel, 1.0, opt);
  rep.derivatives = solve_r_derivatives(kernel, rep.r);
  rep.h = det_h(build_b(kernel, rep.r, rep.derivatives, metric, 1),
                build_b(kernel, rep.r, rep.derivatives, metric, -1));
  rep.constants = limit_constants(rep.h);
  rep.constants.metric = metric.name();
  return rep;
}

/// Overload for callers that already solved R and its derivatives.
inline LimitReport compute_limits(const TransitionKernel& kernel, const Metric& metric, const RVector& r,
                                  const RDerivatives& d) {
  LimitReport rep{r, d, {}, {}};
  rep.h = det_h(build_b(kernel, r, d, metric, 1), build_b(kernel, r, d, metric, -1));
  rep.constants = limit_constants(rep.h);
  rep.constants.metric = metric.name();
  return rep;
}

/// Characteristic polynomial phi_n(x, z) = det[U_n(z) - x I] of the
/// Kac-Murdock-Szego matrix U_n(z)_{ij} = z^{|i-j|}, by the three-term
/// recurrence phi_n = (1 - x - z^2 (1 + x)) phi_{n-1} - x^2 z^2 phi_{n-2}.
inline double kms_phi(int n, double x, double z) {
  if (n < 0) throw InvalidInput("kms_phi needs n >= 0");
  if (n == 0) return 1.0;
  double prev = 1.0;
  double cur = 1.0 - x;
  const double a = 1.0 - x - z * z * (1.0 + x);
  const double b = x * x * z * z;
  for (int m = 2; m <= n; ++m) {
    const double next = a * cur - b * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// Spectral radius of a non-negative block matrix [[0, B+], [B-, 0]].
/// Its square is block diagonal and aperiodic, so power iteration runs on
/// K^2 and the root is taken at the end.
inline double spectral_radius_bipartite(const Eigen::MatrixXd& k) {
  if (k.rows() == 0 || k.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  const Eigen::MatrixXd k2 = k * k;
  return std::sqrt(perron_root(k2, 1e-15, 1'000'000));
}

/// Constant terms of K(lambda, z) = [[0, B(+1)], [B(-1), 0]].
inline Eigen::MatrixXd k_matrix(const TransitionKernel& kernel, const Metric& metric, const RVector& r, double z) {
  const int n = kernel.n();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      if (i == j) continue;
      const Generator up{i, j, 1}, down{i, j, -1};
      k(i - 1, n + j - 1) = std::pow(z, metric.weight(up)) * r[up];
      k(n + i - 1, j - 1) = std::pow(z, metric.weight(down)) * r[down];
    }
  return k;
}

inline double spectral_radius_k(const TransitionKernel& kernel, const Metric& metric, double lambda, double z,
                                const SolveOptions& opt = {}) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw InvalidInput("lambda must lie in (0, 1]");
  if (!(z > 0.0 && z <= 1.0)) throw InvalidInput("z must lie in (0, 1]");
  return spectral_radius_bipartite(k_matrix(kernel, metric, solve_r(kernel, lambda, opt), z));
}

}  // namespace gwalk
