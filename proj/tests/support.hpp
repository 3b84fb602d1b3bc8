// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

// Independent oracles shared by the unit tests and the acceptance gate.
// Everything here is deliberately written against the math, not against the
// library: no Cholesky factorizations, no erfc-based tail sums, no reuse of
// the fitting code whose output is being checked.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pstune/progress.hpp"

namespace testsupport {

inline double rel_err(double got, double want) {
  double denom = std::max(std::abs(want), 1e-300);
  return std::abs(got - want) / denom;
}

/* Loss value l solving (h/l) ln(d/l) = y on (0, d); the left side is strictly
 * decreasing in l, so plain bisection converges. Used to synthesize traces
 * that lie exactly on the iterations-vs-loss curve. */
inline double loss_on_curve(double h, double d, double y) {
  if (!(h > 0.0) || !(d > 0.0) || !(y >= 0.0)) throw std::invalid_argument("loss_on_curve");
  if (y == 0.0) return d;
  auto g = [&](double l) { return (h / l) * std::log(d / l) - y; };
  double lo = d * 1e-18;
  double hi = d;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (g(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

/* Points (j0 + 1 .. j0 + a) lying exactly on the curve for (h, d, j0), with a
 * constant per-iteration time. */
inline std::vector<pstune::LossPoint> synth_curve_points(double h, double d, std::int64_t j0,
                                                         int a, double t_per_iter) {
  std::vector<pstune::LossPoint> pts;
  pts.reserve(static_cast<std::size_t>(a));
  for (int k = 1; k <= a; ++k) {
    pstune::LossPoint p;
    p.j = j0 + k;
    p.t = t_per_iter;
    p.l = loss_on_curve(h, d, static_cast<double>(k));
    pts.push_back(p);
  }
  return pts;
}

/* Matern 5/2 covariance, written out directly from the formula. */
inline double matern_oracle(const std::vector<double>& a, const std::vector<double>& b,
                            const std::vector<double>& ls, double sv) {
  double r2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double u = (a[i] - b[i]) / ls[i];
    r2 += u * u;
  }
  double s = std::sqrt(5.0 * r2);
  return sv * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

struct DensePosterior {
  double mean = 0.0;
  double variance = 0.0;
};

/* Zero-mean GP posterior for n <= 3 training points via explicit cofactor
 * inversion of K + noise I. Shares no code with the library's factorization. */
inline DensePosterior dense_posterior(const std::vector<std::vector<double>>& xs,
                                      const std::vector<double>& ys,
                                      const std::vector<double>& ls, double sv, double noise,
                                      const std::vector<double>& q) {
  std::size_t n = xs.size();
  if (n == 0 || n > 3) throw std::invalid_argument("dense_posterior handles 1..3 points");
  double K[3][3] = {};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      K[i][j] = matern_oracle(xs[i], xs[j], ls, sv);
      if (i == j) K[i][j] += noise;
    }
  double inv[3][3] = {};
  if (n == 1) {
    inv[0][0] = 1.0 / K[0][0];
  } else if (n == 2) {
    double det = K[0][0] * K[1][1] - K[0][1] * K[1][0];
    inv[0][0] = K[1][1] / det;
    inv[1][1] = K[0][0] / det;
    inv[0][1] = -K[0][1] / det;
    inv[1][0] = -K[1][0] / det;
  } else {
    double det = K[0][0] * (K[1][1] * K[2][2] - K[1][2] * K[2][1]) -
                 K[0][1] * (K[1][0] * K[2][2] - K[1][2] * K[2][0]) +
                 K[0][2] * (K[1][0] * K[2][1] - K[1][1] * K[2][0]);
    inv[0][0] = (K[1][1] * K[2][2] - K[1][2] * K[2][1]) / det;
    inv[0][1] = (K[0][2] * K[2][1] - K[0][1] * K[2][2]) / det;
    inv[0][2] = (K[0][1] * K[1][2] - K[0][2] * K[1][1]) / det;
    inv[1][0] = (K[1][2] * K[2][0] - K[1][0] * K[2][2]) / det;
    inv[1][1] = (K[0][0] * K[2][2] - K[0][2] * K[2][0]) / det;
    inv[1][2] = (K[0][2] * K[1][0] - K[0][0] * K[1][2]) / det;
    inv[2][0] = (K[1][0] * K[2][1] - K[1][1] * K[2][0]) / det;
    inv[2][1] = (K[0][1] * K[2][0] - K[0][0] * K[2][1]) / det;
    inv[2][2] = (K[0][0] * K[1][1] - K[0][1] * K[1][0]) / det;
  }
  double kq[3];
  for (std::size_t i = 0; i < n; ++i) kq[i] = matern_oracle(xs[i], q, ls, sv);
  DensePosterior out;
  double tmp[3] = {};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) tmp[i] += inv[i][j] * ys[j];
  for (std::size_t i = 0; i < n; ++i) out.mean += kq[i] * tmp[i];
  double quad = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) quad += kq[i] * inv[i][j] * kq[j];
  out.variance = matern_oracle(q, q, ls, sv) - quad;
  return out;
}

/* E[max(best - Y, 0)] for Y ~ N(mean, sd^2) by composite Simpson over
 * [best - 14 sd .. best]; the truncated tail is below 1e-40 of the mass.
 * No erfc anywhere, so this is an independent route to expected improvement. */
inline double ei_numeric(double mean, double sd, double best) {
  if (sd <= 0.0) return mean < best ? best - mean : 0.0;  // point mass
  double lo = std::min(best, mean) - 14.0 * sd;
  double hi = best;
  const int n = 20000;  // even
  double hstep = (hi - lo) / n;
  auto f = [&](double y) {
    double z = (y - mean) / sd;
    return (best - y) * std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * M_PI));
  };
  double acc = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) acc += f(lo + i * hstep) * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * hstep / 3.0;
}

}  // namespace testsupport
