#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>

#include "gwalk/errors.hpp"

namespace gwalk {

/// Second-order Taylor jet of a function of (lambda, z) about (1, 1):
///
///   f ~ c00 + c10 dl + c01 dz + c20 dl^2 + c11 dl dz + c02 dz^2
///
/// with dl = lambda - 1, dz = z - 1. Products drop terms of total degree
/// above two, which makes the jets a commutative ring.
struct Jet2 {
  double c00 = 0.0;
  double c10 = 0.0;
  double c01 = 0.0;
  double c20 = 0.0;
  double c11 = 0.0;
  double c02 = 0.0;

  constexpr Jet2() = default;
  constexpr Jet2(double v) : c00(v) {}  // NOLINT: implicit constant jets
  constexpr Jet2(double a00, double a10, double a01, double a20, double a11, double a02)
      : c00(a00), c10(a10), c01(a01), c20(a20), c11(a11), c02(a02) {}

  /// The jet of lambda itself.
  static constexpr Jet2 lambda() { return {1.0, 1.0, 0.0, 0.0, 0.0, 0.0}; }
  /// The jet of z itself.
  static constexpr Jet2 z() { return {1.0, 0.0, 1.0, 0.0, 0.0, 0.0}; }

  /// z^w about z = 1 for any real w >= 0.
  static constexpr Jet2 z_power(double w) { return {1.0, 0.0, w, 0.0, 0.0, 0.5 * w * (w - 1.0)}; }

  // partial derivatives at (1, 1)
  constexpr double value() const { return c00; }
  constexpr double d_lambda() const { return c10; }
  constexpr double d_z() const { return c01; }
  constexpr double d_lambda2() const { return 2.0 * c20; }
  constexpr double d_lambda_z() const { return c11; }
  constexpr double d_z2() const { return 2.0 * c02; }

  /// Evaluates the quadratic polynomial at (lambda, z).
  constexpr double eval(double lambda, double z) const {
    const double dl = lambda - 1.0, dz = z - 1.0;
    return c00 + c10 * dl + c01 * dz + c20 * dl * dl + c11 * dl * dz + c02 * dz * dz;
  }

  friend constexpr Jet2 operator+(const Jet2& a, const Jet2& b) {
    return {a.c00 + b.c00, a.c10 + b.c10, a.c01 + b.c01, a.c20 + b.c20, a.c11 + b.c11, a.c02 + b.c02};
  }
  friend constexpr Jet2 operator-(const Jet2& a, const Jet2& b) {
    return {a.c00 - b.c00, a.c10 - b.c10, a.c01 - b.c01, a.c20 - b.c20, a.c11 - b.c11, a.c02 - b.c02};
  }
  friend constexpr Jet2 operator-(const Jet2& a) { return {-a.c00, -a.c10, -a.c01, -a.c20, -a.c11, -a.c02}; }

  friend constexpr Jet2 operator*(const Jet2& a, const Jet2& b) {
    return {a.c00 * b.c00,
            a.c00 * b.c10 + a.c10 * b.c00,
            a.c00 * b.c01 + a.c01 * b.c00,
            a.c00 * b.c20 + a.c10 * b.c10 + a.c20 * b.c00,
            a.c00 * b.c11 + a.c10 * b.c01 + a.c01 * b.c10 + a.c11 * b.c00,
            a.c00 * b.c02 + a.c01 * b.c01 + a.c02 * b.c00};
  }

  /// 1/a = (1/a0) (1 - e + e^2) with e = (a - a0)/a0.
  friend Jet2 reciprocal(const Jet2& a) {
    if (a.c00 == 0.0) throw NumericalFailure("division by a jet with zero constant term");
    const double inv = 1.0 / a.c00;
    const Jet2 e{0.0, a.c10 * inv, a.c01 * inv, a.c20 * inv, a.c11 * inv, a.c02 * inv};
    return (Jet2(1.0) - e + e * e) * Jet2(inv);
  }
  friend Jet2 operator/(const Jet2& a, const Jet2& b) { return a * reciprocal(b); }

  Jet2& operator+=(const Jet2& b) { return *this = *this + b; }
  Jet2& operator-=(const Jet2& b) { return *this = *this - b; }
  Jet2& operator*=(const Jet2& b) { return *this = *this * b; }
  Jet2& operator/=(const Jet2& b) { return *this = *this / b; }

  friend constexpr bool operator==(const Jet2&, const Jet2&) = default;

  friend std::ostream& operator<<(std::ostream& os, const Jet2& a) {
    return os << "[" << a.c00 << ", " << a.c10 << ", " << a.c01 << ", " << a.c20 << ", " << a.c11 << ", "
              << a.c02 << "]";
  }
};

inline double max_abs_coeff_diff(const Jet2& a, const Jet2& b) {
  const Jet2 d = a - b;
  return std::max({std::abs(d.c00), std::abs(d.c10), std::abs(d.c01), std::abs(d.c20), std::abs(d.c11),
                   std::abs(d.c02)});
}

}  // namespace gwalk
