#pragma once

// Helpers shared by the unit and acceptance tests. The finite-difference
// oracle here deliberately avoids the library's solver and jet code.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "gwalk/groupoid.hpp"
#include "gwalk/kernel.hpp"
#include "gwalk/solver.hpp"

namespace gwalk::testkit {

/// Random reduced word obtained by appending `steps` uniformly chosen letters.
inline ReducedWord random_word(std::mt19937_64& rng, int n, int source, int steps) {
  ReducedWord w = ReducedWord::unit(source);
  std::uniform_int_distribution<int> win(1, n - 1), sign(0, 1);
  for (int s = 0; s < steps; ++s) {
    const int at = w.target();
    int j = win(rng);
    if (j >= at) ++j;
    w.append_in_place({at, j, sign(rng) ? 1 : -1});
  }
  return w;
}

/// First-step map written out independently of the library.
inline std::vector<double> first_step_map(const TransitionKernel& kernel, const std::vector<double>& r,
                                          double lambda) {
  const int n = kernel.n();
  auto at = [&](int i, int j, int k) { return r[generator_index(n, {i, j, k})]; };
  std::vector<double> out(r.size());
  for (std::size_t idx = 0; idx < r.size(); ++idx) {
    const Generator g = generator_at(n, idx);
    double s = kernel.p(g);
    for (int m = 1; m <= n; ++m) {
      if (m == g.i) continue;
      if (m != g.j) s += kernel.p(g.i, m, g.k) * at(m, g.j, g.k);
      s += kernel.p(g.i, m, -g.k) * at(m, g.i, -g.k) * at(g.i, g.j, g.k);
    }
    out[idx] = lambda * s;
  }
  return out;
}

/// R(lambda) on the branch through R(1) by plain iteration from R(1); this
/// also works slightly above lambda = 1, where the probabilistic series
/// no longer converges but the analytic continuation is still attracting.
inline std::vector<double> r_branch(const TransitionKernel& kernel, double lambda, const std::vector<double>& r1) {
  std::vector<double> r = r1;
  for (int it = 0; it < 200000; ++it) {
    std::vector<double> next = first_step_map(kernel, r, lambda);
    double diff = 0.0;
    for (std::size_t t = 0; t < r.size(); ++t) diff = std::max(diff, std::abs(next[t] - r[t]));
    r = std::move(next);
    if (diff < 1e-16) break;
  }
  return r;
}

/// h(lambda, z) = det[I - B(+1) B(-1)] by a dense real determinant.
inline double direct_h(const TransitionKernel& kernel, const Metric& metric, const std::vector<double>& r, double z) {
  const int n = kernel.n();
  Eigen::MatrixXd bp = Eigen::MatrixXd::Zero(n, n), bm = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      if (i == j) continue;
      const Generator up{i, j, 1}, down{i, j, -1};
      bp(i - 1, j - 1) = std::pow(z, metric.weight(up)) * r[generator_index(n, up)];
      bm(i - 1, j - 1) = std::pow(z, metric.weight(down)) * r[generator_index(n, down)];
    }
  return (Eigen::MatrixXd::Identity(n, n) - bp * bm).determinant();
}

struct FdPartials {
  double h, d_lambda, d_z, d_lambda2, d_lambda_z, d_z2;
};

/// Fourth-order central differences of direct_h about (1, 1).
inline FdPartials fd_h_partials(const TransitionKernel& kernel, const Metric& metric, double step = 1e-3) {
  const std::vector<double> r1 = solve_r(kernel, 1.0, {1e-15, 1'000'000}).values;
  const int offs[5] = {-2, -1, 0, 1, 2};
  double f[5][5];
  for (int a = 0; a < 5; ++a) {
    const std::vector<double> r = offs[a] == 0 ? r1 : r_branch(kernel, 1.0 + offs[a] * step, r1);
    for (int b = 0; b < 5; ++b) f[a][b] = direct_h(kernel, metric, r, 1.0 + offs[b] * step);
  }
  // weights for d/dx and d2/dx2 on the stencil -2..2
  const double w1[5] = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
  const double w2[5] = {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};
  FdPartials p{f[2][2], 0, 0, 0, 0, 0};
  for (int t = 0; t < 5; ++t) {
    p.d_lambda += w1[t] * f[t][2] / step;
    p.d_z += w1[t] * f[2][t] / step;
    p.d_lambda2 += w2[t] * f[t][2] / (step * step);
    p.d_z2 += w2[t] * f[2][t] / (step * step);
    for (int s = 0; s < 5; ++s) p.d_lambda_z += w1[t] * w1[s] * f[t][s] / (step * step);
  }
  return p;
}

inline double rel_err(double got, double want) {
  return want == 0.0 ? std::abs(got) : std::abs(got - want) / std::abs(want);
}

}  // namespace gwalk::testkit
