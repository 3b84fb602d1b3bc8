// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#include "pstune/triples.hpp"

#include <algorithm>

#include "pstune/errors.hpp"

namespace pstune {

SwitchLossConvention switch_loss_convention_from_name(const std::string& name) {
  if (name == "prev_iteration") return SwitchLossConvention::PrevIteration;
  if (name == "first_of_segment") return SwitchLossConvention::FirstOfSegment;
  throw config_error("unknown switch loss convention: " + name);
}

LossSegment segment_view(const MetricsRepository& repo, std::size_t segment_index,
                         const ProgressContext& ctx) {
  const SegmentRef& ref = repo.segments().at(segment_index);
  LossSegment seg;
  seg.setting_id = ref.setting_id;
  std::size_t first = ref.first;
  std::size_t count = ref.count;
  if (ctx.convention == SwitchLossConvention::PrevIteration) {
    if (first == 0) {
      seg.j0 = -1;
      seg.switch_loss = ctx.initial_loss;
    } else {
      const MetricRecord& prev = repo.at(first - 1);
      seg.j0 = prev.j;
      seg.switch_loss = prev.l;
    }
  } else {
    const MetricRecord& head = repo.at(first);
    seg.j0 = head.j;
    seg.switch_loss = head.l;
    first += 1;
    count -= 1;
  }
  seg.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const MetricRecord& r = repo.at(first + i);
    seg.points.push_back({r.j, r.t, r.l});
  }
  return seg;
}

TripleBuildResult build_training_triples(const MetricsRepository& repo,
                                         const ProgressContext& ctx) {
  if (!(ctx.initial_loss > 0.0))
    throw validation_error("triple build needs the positive initial loss of the run");
  if (!(ctx.epsilon > 0.0)) throw validation_error("triple build needs a positive epsilon");

  double run_max_loss = ctx.initial_loss;
  for (const MetricRecord& r : repo.records()) run_max_loss = std::max(run_max_loss, r.l);

  TripleBuildResult out;
  for (std::size_t s = 0; s < repo.segments().size(); ++s) {
    LossSegment seg = segment_view(repo, s, ctx);
    if (seg.points.size() < 2) {
      out.warnings.push_back("segment " + std::to_string(s) + " (" + seg.setting_id +
                             "): too few records, skipped");
      continue;
    }
    try {
      RemainingEstimate est =
          estimate_remaining_time(seg, ctx.epsilon, ctx.policy, run_max_loss);
      out.triples.push_back({seg.setting_id, seg.switch_loss, est.y_seconds});
      if (est.used_fallback)
        out.warnings.push_back("segment " + std::to_string(s) + " (" + seg.setting_id +
                               "): ceiling policy rejected the fit, constant fallback used");
    } catch (const insufficient_data_error&) {
      out.warnings.push_back("segment " + std::to_string(s) + " (" + seg.setting_id +
                             "): constant or unusable losses, skipped");
    } catch (const fit_error& e) {
      out.warnings.push_back("segment " + std::to_string(s) + " (" + seg.setting_id +
                             "): fit failed (" + e.what() + "), skipped");
    } catch (const validation_error& e) {
      out.warnings.push_back("segment " + std::to_string(s) + " (" + seg.setting_id +
                             "): invalid for estimation (" + e.what() + "), skipped");
    }
  }
  return out;
}

}  // namespace pstune
