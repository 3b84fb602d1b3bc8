// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "pstune/metrics.hpp"
#include "pstune/progress.hpp"

namespace pstune {

/* One surrogate observation: the setting tried, the loss it started from, and
 * the estimated seconds it still needed to reach the target. */
struct TrainingTriple {
  std::string setting_id;
  double switch_loss = 0.0;
  double y_seconds = 0.0;
};

enum class SwitchLossConvention {
  PrevIteration,   // loss of the iteration just before the segment (default)
  FirstOfSegment   // loss of the segment's own first iteration
};

SwitchLossConvention switch_loss_convention_from_name(const std::string& name);

struct ProgressContext {
  DPolicy policy;
  double epsilon = 0.0;
  double initial_loss = 0.0;  // loss of the initial model, before iteration 0
  SwitchLossConvention convention = SwitchLossConvention::PrevIteration;
};

struct TripleBuildResult {
  std::vector<TrainingTriple> triples;  // one per usable segment, in segment order
  std::vector<std::string> warnings;    // skipped or fallback segments, human readable
};

/* Cuts the repository into per-setting segments and prices each one. Segments
 * that cannot be fitted (constant loss, too few records) are omitted with a
 * warning rather than failing the build. Rebuilding from a reloaded
 * repository reproduces the triples bit for bit. */
TripleBuildResult build_training_triples(const MetricsRepository& repo,
                                         const ProgressContext& ctx);

/* The repository segment as a loss segment under the given convention. */
LossSegment segment_view(const MetricsRepository& repo, std::size_t segment_index,
                         const ProgressContext& ctx);

}  // namespace pstune
