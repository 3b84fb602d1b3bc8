// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#include "pstune/progress.hpp"

#include <algorithm>
#include <cmath>

#include "pstune/errors.hpp"
#include "pstune/metrics.hpp"

namespace pstune {

namespace {

constexpr double kCeilingInflation = 1e-9;

void check_segment_losses(const LossSegment& seg) {
  if (!std::isfinite(seg.switch_loss) || seg.switch_loss <= 0.0)
    throw validation_error("segment switch loss must be finite and positive");
  for (const LossPoint& p : seg.points)
    if (!std::isfinite(p.l) || p.l <= 0.0)
      throw validation_error("segment losses must be finite and positive");
}

double inflate_if_touched(double d, const std::vector<LossPoint>& points) {
  for (const LossPoint& p : points)
    if (p.l == d) return d * (1.0 + kCeilingInflation);
  return d;
}

}  // namespace

DPolicyKind d_policy_from_name(const std::string& name) {
  if (name == "stateless_constant") return DPolicyKind::StatelessConstant;
  if (name == "bounded_supremum") return DPolicyKind::BoundedSupremum;
  if (name == "stateful_first_loss") return DPolicyKind::StatefulFirstLoss;
  throw config_error("unknown loss-ceiling policy: " + name);
}

std::string d_policy_name(DPolicyKind kind) {
  switch (kind) {
    case DPolicyKind::StatelessConstant: return "stateless_constant";
    case DPolicyKind::BoundedSupremum: return "bounded_supremum";
    case DPolicyKind::StatefulFirstLoss: return "stateful_first_loss";
  }
  return "unknown";
}

double select_d(const DPolicy& policy, const LossSegment& segment) {
  check_segment_losses(segment);
  double d = 0.0;
  switch (policy.kind) {
    case DPolicyKind::StatelessConstant:
      if (!std::isfinite(policy.d_value) || policy.d_value <= 0.0)
        throw validation_error("constant ceiling policy needs a positive d value");
      d = policy.d_value;
      break;
    case DPolicyKind::BoundedSupremum: {
      if (segment.points.empty())
        throw insufficient_data_error("ceiling selection needs at least one segment point");
      double sup = 0.0;
      for (const LossPoint& p : segment.points) sup = std::max(sup, p.l);
      d = std::min(2.0 * segment.switch_loss, sup);
      break;
    }
    case DPolicyKind::StatefulFirstLoss:
      d = segment.switch_loss;
      break;
  }
  return inflate_if_touched(d, segment.points);
}

ConvergenceFit fit_h(const std::vector<LossPoint>& points, double d, std::int64_t j0) {
  if (!std::isfinite(d) || d <= 0.0) throw validation_error("loss ceiling must be positive");
  if (points.size() < 2)
    throw insufficient_data_error("curve fit needs at least two points");
  std::int64_t prev_j = j0;
  for (const LossPoint& p : points) {
    if (!std::isfinite(p.l) || p.l <= 0.0)
      throw validation_error("curve fit losses must be finite and positive");
    if (p.l >= d)
      throw fit_error("loss " + std::to_string(p.l) + " at iteration " + std::to_string(p.j) +
                      " is not below the ceiling " + std::to_string(d));
    if (p.j <= prev_j)
      throw validation_error("curve fit iteration indices must be strictly increasing past j0");
    prev_j = p.j;
  }
  bool distinct = false;
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i].l != points[0].l) distinct = true;
  if (!distinct)
    throw insufficient_data_error("curve fit needs at least two distinct losses");

  double sxy = 0.0;
  double sxx = 0.0;
  for (const LossPoint& p : points) {
    double x = std::log(d / p.l) / p.l;
    double y = static_cast<double>(p.j - j0);
    sxy += x * y;
    sxx += x * x;
  }
  ConvergenceFit fit;
  fit.h = sxy / sxx;
  fit.d = d;
  fit.j0 = j0;
  fit.n_points = points.size();
  double ss = 0.0;
  for (const LossPoint& p : points) {
    double x = std::log(d / p.l) / p.l;
    double y = static_cast<double>(p.j - j0);
    double e = y - fit.h * x;
    ss += e * e;
  }
  fit.residual_rms = std::sqrt(ss / static_cast<double>(points.size()));
  return fit;
}

std::int64_t remaining_iterations(const ConvergenceFit& fit, double epsilon, std::int64_t j_now) {
  if (!std::isfinite(epsilon) || epsilon <= 0.0 || epsilon >= fit.d)
    throw validation_error("epsilon must satisfy 0 < epsilon < d");
  double k = std::floor((fit.h / epsilon) * std::log(fit.d / epsilon)) +
             static_cast<double>(fit.j0);
  double r = k - static_cast<double>(j_now);
  r = std::min(r, 9.0e18);  // keep the cast to int64 defined for extreme fits
  return r > 0.0 ? static_cast<std::int64_t>(r) : 0;
}

double mean_iteration_time(const std::vector<double>& times) {
  if (times.empty()) throw insufficient_data_error("mean iteration time needs at least one time");
  for (double t : times)
    if (!std::isfinite(t) || t <= 0.0)
      throw validation_error("iteration times must be finite and positive");
  std::vector<double> kept = remove_outliers(times);
  double s = 0.0;
  for (double t : kept) s += t;
  return s / static_cast<double>(kept.size());
}

RemainingEstimate estimate_remaining_time(const LossSegment& segment, double epsilon,
                                          const DPolicy& policy, double fallback_max_loss) {
  if (!std::isfinite(epsilon) || epsilon <= 0.0)
    throw validation_error("epsilon must be finite and positive");
  if (segment.points.empty())
    throw insufficient_data_error("remaining-time estimate needs segment points");
  check_segment_losses(segment);

  std::vector<double> times;
  times.reserve(segment.points.size());
  for (const LossPoint& p : segment.points) times.push_back(p.t);

  RemainingEstimate est;
  est.t_bar = mean_iteration_time(times);

  auto converged = [&](const std::vector<LossPoint>& pts) {
    return std::all_of(pts.begin(), pts.end(), [&](const LossPoint& p) { return p.l <= epsilon; });
  };
  if (converged(segment.points)) {
    est.r = 0;
    est.y_seconds = 0.0;
    return est;
  }

  std::vector<double> losses;
  losses.reserve(segment.points.size());
  for (const LossPoint& p : segment.points) losses.push_back(p.l);
  std::vector<LossPoint> kept;
  for (std::size_t i : outlier_free_indices(losses)) kept.push_back(segment.points[i]);
  if (converged(kept)) {
    est.r = 0;
    est.y_seconds = 0.0;
    return est;
  }

  LossSegment filtered = segment;
  filtered.points = std::move(kept);
  std::int64_t j_now = segment.points.back().j;

  auto run = [&](const DPolicy& pol) {
    double d = select_d(pol, filtered);
    ConvergenceFit fit = fit_h(filtered.points, d, filtered.j0);
    est.r = remaining_iterations(fit, epsilon, j_now);
    est.y_seconds = est.t_bar * static_cast<double>(est.r);
  };

  try {
    run(policy);
  } catch (const fit_error&) {
    if (policy.kind == DPolicyKind::StatelessConstant) throw;
    double cap = fallback_max_loss;
    if (cap <= 0.0) {
      cap = segment.switch_loss;
      for (const LossPoint& p : segment.points) cap = std::max(cap, p.l);
    }
    run(DPolicy{DPolicyKind::StatelessConstant, 2.0 * cap});
    est.used_fallback = true;
  }
  return est;
}

bool q_lower_bound_ok(double lipschitz, double strong_convexity) {
  if (!std::isfinite(lipschitz) || lipschitz <= 0.0 || !std::isfinite(strong_convexity) ||
      strong_convexity <= 0.0)
    throw validation_error("rate and curvature must be finite and positive");
  return lipschitz / strong_convexity >= 1.0;
}

}  // namespace pstune
