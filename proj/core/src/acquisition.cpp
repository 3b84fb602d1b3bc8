// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#include "pstune/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pstune/errors.hpp"
#include "pstune/rng.hpp"

namespace pstune {

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double expected_improvement(double mean, double stddev, double best) {
  if (!std::isfinite(mean) || !std::isfinite(best))
    throw validation_error("expected improvement needs finite mean and incumbent");
  if (!std::isfinite(stddev) || stddev < 0.0)
    throw validation_error("expected improvement needs a non-negative deviation");
  if (stddev == 0.0) return 0.0;
  double z = (best - mean) / stddev;
  return (best - mean) * normal_cdf(z) + stddev * normal_pdf(z);
}

namespace {

/* Settings assembled column by column: each knob contributes one value per
 * sample row, drawn from its own permuted strata or level cycle. */
std::vector<SystemSetting> assemble_rows(const KnobSpace& space, std::size_t count,
                                         const std::vector<std::vector<KnobValue>>& columns) {
  std::vector<SystemSetting> out;
  std::set<SystemSetting> seen;
  for (std::size_t row = 0; row < count; ++row) {
    SystemSetting s;
    for (std::size_t k = 0; k < space.knobs().size(); ++k)
      s[space.knobs()[k].name] = columns[k][row];
    if (seen.insert(s).second) out.push_back(std::move(s));
  }
  return out;
}

KnobValue value_from_unit(const KnobSpec& k, double u) {
  switch (k.kind) {
    case KnobKind::IntegerRange: {
      double v = std::nearbyint(k.lo + u * (k.hi - k.lo));
      v = std::max(k.lo, std::min(k.hi, v));
      return static_cast<std::int64_t>(v);
    }
    case KnobKind::RealRange:
      return k.lo + u * (k.hi - k.lo);
    default:
      throw validation_error("unit interval value only applies to range knobs");
  }
}

std::size_t level_count(const KnobSpec& k) {
  return k.kind == KnobKind::Boolean ? 2 : k.levels.size();
}

KnobValue level_value(const KnobSpec& k, std::size_t idx) {
  if (k.kind == KnobKind::Boolean) return idx == 1;
  return k.levels[idx];
}

}  // namespace

std::vector<SystemSetting> orthogonal_sample(const KnobSpace& space, std::size_t count,
                                             std::uint64_t seed) {
  if (space.empty()) throw validation_error("cannot sample an empty knob space");
  if (count == 0) return {};
  Rng rng(mix_seed(seed, 0x5a3e11));
  std::vector<std::vector<KnobValue>> columns(space.knobs().size());
  for (std::size_t k = 0; k < space.knobs().size(); ++k) {
    const KnobSpec& spec = space.knobs()[k];
    columns[k].reserve(count);
    if (spec.kind == KnobKind::IntegerRange || spec.kind == KnobKind::RealRange) {
      std::vector<std::size_t> order = rng.permutation(count);
      for (std::size_t row = 0; row < count; ++row) {
        double u = (static_cast<double>(order[row]) + 0.5) / static_cast<double>(count);
        columns[k].push_back(value_from_unit(spec, u));
      }
    } else {
      std::size_t levels = level_count(spec);
      std::vector<std::size_t> order = rng.permutation(levels);
      for (std::size_t row = 0; row < count; ++row)
        columns[k].push_back(level_value(spec, order[row % levels]));
    }
  }
  return assemble_rows(space, count, columns);
}

std::vector<SystemSetting> random_sample(const KnobSpace& space, std::size_t count,
                                         std::uint64_t seed) {
  if (space.empty()) throw validation_error("cannot sample an empty knob space");
  Rng rng(mix_seed(seed, 0x7d1f42));
  std::vector<std::vector<KnobValue>> columns(space.knobs().size());
  for (std::size_t k = 0; k < space.knobs().size(); ++k) {
    const KnobSpec& spec = space.knobs()[k];
    for (std::size_t row = 0; row < count; ++row) {
      if (spec.kind == KnobKind::IntegerRange || spec.kind == KnobKind::RealRange) {
        columns[k].push_back(value_from_unit(spec, rng.uniform01()));
      } else {
        columns[k].push_back(level_value(spec, rng.uniform_index(level_count(spec))));
      }
    }
  }
  return assemble_rows(space, count, columns);
}

AcquisitionDecision propose_next(const GpModel& model, const KnobSpace& space,
                                 const std::vector<SystemSetting>& candidates,
                                 double current_loss, double loss_scale, double best_remaining) {
  if (candidates.empty()) throw validation_error("proposal needs at least one candidate");
  if (!std::isfinite(best_remaining))
    throw validation_error("proposal needs a finite incumbent estimate");
  AcquisitionDecision best;
  bool have = false;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    EncodedPoint p = encode_setting(candidates[i], space, current_loss, loss_scale);
    PosteriorPrediction pred = model.predict(p.coords);
    double sd = std::sqrt(pred.variance);
    double ei = expected_improvement(pred.mean, sd, best_remaining);
    bool better = !have || ei > best.ei ||
                  (ei == best.ei && pred.mean < best.predicted_mean);
    if (better) {
      best = {candidates[i], ei, pred.mean, pred.variance, i};
      have = true;
    }
  }
  return best;
}

}  // namespace pstune
