// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "pstune/gp.hpp"
#include "pstune/knobs.hpp"

namespace pstune {

double normal_pdf(double z);
double normal_cdf(double z);

/* Closed-form expected improvement for minimization: with z = (best - mean)/sd,
 * EI = (best - mean) cdf(z) + sd pdf(z); exactly zero when sd = 0. */
double expected_improvement(double mean, double stddev, double best);

/* Stratified (Latin hypercube) sample of the knob space. Range knobs take the
 * midpoints of `count` equal strata in a per-knob random order, so each stratum
 * is hit exactly once; integer knobs round half-to-even afterwards. Ordinal,
 * nominal, and boolean knobs cycle through their levels in a per-knob random
 * order. Duplicate settings created by rounding are dropped, so the result may
 * be shorter than `count`. Deterministic for a fixed seed. */
std::vector<SystemSetting> orthogonal_sample(const KnobSpace& space, std::size_t count,
                                             std::uint64_t seed);

/* Independent uniform sample of the knob space (with duplicates dropped). */
std::vector<SystemSetting> random_sample(const KnobSpace& space, std::size_t count,
                                         std::uint64_t seed);

struct AcquisitionDecision {
  SystemSetting setting;
  double ei = 0.0;
  double predicted_mean = 0.0;
  double predicted_variance = 0.0;
  std::size_t candidate_index = 0;
};

/* Scores every candidate at the current loss and returns the EI maximizer.
 * Ties break toward the lower predicted mean, then the earlier candidate. */
AcquisitionDecision propose_next(const GpModel& model, const KnobSpace& space,
                                 const std::vector<SystemSetting>& candidates,
                                 double current_loss, double loss_scale, double best_remaining);

}  // namespace pstune
