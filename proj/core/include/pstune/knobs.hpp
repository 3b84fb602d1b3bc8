// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace pstune {

enum class KnobKind { IntegerRange, RealRange, Ordinal, Nominal, Boolean };

struct KnobSpec {
  std::string name;
  KnobKind kind = KnobKind::RealRange;
  double lo = 0.0;  // range kinds only
  double hi = 0.0;
  std::vector<std::string> levels;  // ordinal and nominal kinds only

  std::size_t encoded_width() const;  // coordinates this knob contributes
};

/* Immutable, validated collection of knob specs. Knob order is the coordinate
 * order used by the encoder. */
class KnobSpace {
 public:
  KnobSpace() = default;
  explicit KnobSpace(std::vector<KnobSpec> knobs);

  const std::vector<KnobSpec>& knobs() const { return knobs_; }
  const KnobSpec* find(const std::string& name) const;
  /* Coordinates for the knobs alone, excluding the appended loss coordinate. */
  std::size_t encoded_width() const { return width_; }
  bool empty() const { return knobs_.empty(); }
  /* Product of per-knob domain sizes; infinite (returns 0) if any real knob. */
  std::uint64_t finite_size() const;

 private:
  std::vector<KnobSpec> knobs_;
  std::size_t width_ = 0;
};

using KnobValue = std::variant<bool, std::int64_t, double, std::string>;

/* One concrete choice per knob, keyed by knob name. std::map keeps iteration
 * (and serialization) order deterministic. */
using SystemSetting = std::map<std::string, KnobValue>;

/* Throws validation_error unless every knob is present, typed correctly, and
 * in range; extra keys are rejected. */
void validate_setting(const SystemSetting& setting, const KnobSpace& space);

struct EncodedPoint {
  std::vector<double> coords;  // knob coordinates followed by the loss coordinate
};

/* Maps a setting plus an observed loss into the unit-scaled feature vector:
 * range knobs min-max scaled to [0,1], booleans 0/1, ordinals rank-scaled,
 * nominals one-hot, and the loss appended last divided by loss_scale. */
EncodedPoint encode_setting(const SystemSetting& setting, const KnobSpace& space, double loss,
                            double loss_scale = 1.0);

/* Inverse of encode_setting on the knob coordinates. Accepts vectors with or
 * without the trailing loss coordinate. Integer and ordinal coordinates round
 * half-to-even; one-hot blocks decode by argmax. */
SystemSetting decode_point(const std::vector<double>& coords, const KnobSpace& space);

std::string knob_value_to_string(const KnobValue& v);
std::string setting_to_string(const SystemSetting& s);

/* Assigns stable string ids ("X0", "X1", ...) to distinct settings in first
 * use order, deduplicating by value. */
class SettingsCatalog {
 public:
  std::string id_for(const SystemSetting& setting);
  bool contains(const std::string& id) const;
  const SystemSetting& setting(const std::string& id) const;  // throws validation_error
  const std::vector<std::pair<std::string, SystemSetting>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<std::pair<std::string, SystemSetting>> entries_;
};

}  // namespace pstune
