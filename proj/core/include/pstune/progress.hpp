// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pstune {

struct LossPoint {
  std::int64_t j = 0;
  double t = 0.0;  // iteration wall seconds
  double l = 0.0;  // observed loss
};

/* Points observed while one setting was in force. switch_loss is the loss at
 * iteration j0, just before the segment's own points (j0+1, j0+2, ...); for
 * the first segment of a run it is the loss of the initial model and j0 = -1. */
struct LossSegment {
  std::string setting_id;
  std::int64_t j0 = -1;
  double switch_loss = 0.0;
  std::vector<LossPoint> points;
};

/* Policy choosing the loss ceiling d used by the iterations-vs-loss fit. */
enum class DPolicyKind {
  StatelessConstant,  // fixed d supplied by the caller
  BoundedSupremum,    // min(2 * switch_loss, max loss inside the segment)
  StatefulFirstLoss   // d = switch_loss
};

struct DPolicy {
  DPolicyKind kind = DPolicyKind::BoundedSupremum;
  double d_value = 0.0;  // StatelessConstant only
};

DPolicyKind d_policy_from_name(const std::string& name);  // throws config_error
std::string d_policy_name(DPolicyKind kind);

/* Resolved ceiling for one segment. If any segment loss equals the chosen d
 * exactly, d is inflated by one part in 1e9 so every log term stays positive. */
double select_d(const DPolicy& policy, const LossSegment& segment);

struct ConvergenceFit {
  double h = 0.0;      // fitted rate constant of j = j0 + (h/l) ln(d/l)
  double d = 0.0;
  std::int64_t j0 = 0;
  std::size_t n_points = 0;
  double residual_rms = 0.0;  // in iteration units
};

/* Least squares through the origin on the linearized curve: with
 * x = ln(d/l)/l and y = j - j0, fits y = h x. Requires at least two points,
 * at least two distinct losses, and every loss in (0, d). */
ConvergenceFit fit_h(const std::vector<LossPoint>& points, double d, std::int64_t j0);

/* Iterations still needed to drive the loss to epsilon, measured from j_now:
 * max(floor((h/eps) ln(d/eps)) + j0 - j_now, 0). Requires 0 < eps < d. */
std::int64_t remaining_iterations(const ConvergenceFit& fit, double epsilon, std::int64_t j_now);

/* Arithmetic mean of per-iteration seconds after outlier removal. */
double mean_iteration_time(const std::vector<double>& times);

struct RemainingEstimate {
  std::int64_t r = 0;     // remaining iterations
  double t_bar = 0.0;     // mean seconds per iteration
  double y_seconds = 0.0; // t_bar * r
  bool used_fallback = false;
};

/* Full pipeline for one segment: outlier-filter the losses, pick d, fit,
 * extrapolate to epsilon, and price the remainder in seconds. If the chosen
 * policy rejects the segment (a loss at or above d), retries exactly once
 * with a constant ceiling of 2 * fallback_max_loss (defaults to the largest
 * loss seen in the segment). A segment already at or below epsilon yields
 * r = 0 without fitting. */
RemainingEstimate estimate_remaining_time(const LossSegment& segment, double epsilon,
                                          const DPolicy& policy, double fallback_max_loss = 0.0);

/* True when a rate/curvature pair is consistent with the fitted curve shape
 * staying an upper bound on iteration count (ratio at least one). */
bool q_lower_bound_ok(double lipschitz, double strong_convexity);

}  // namespace pstune
