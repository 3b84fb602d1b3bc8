// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pstune/knobs.hpp"

namespace pstune {

/* Partition of model coordinates [0, dim) across servers. Each server holds an
 * ordered list of half-open ranges. */
class ShardMap {
 public:
  ShardMap() = default;
  ShardMap(std::uint32_t dim, std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> ranges);

  /* Contiguous split: the first dim % n servers hold one extra coordinate. */
  static ShardMap even_split(std::uint32_t dim, int n_servers);

  std::uint32_t dim() const { return dim_; }
  int server_count() const { return static_cast<int>(ranges_.size()); }
  int owner(std::uint32_t param) const { return owner_[param]; }
  const std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>>& ranges() const {
    return ranges_;
  }
  std::uint32_t held_by(int server) const;  // coordinate count
  bool operator==(const ShardMap& other) const {
    return dim_ == other.dim_ && ranges_ == other.ranges_;
  }

 private:
  void build_owner_index();  // validates exact cover, throws validation_error

  std::uint32_t dim_ = 0;
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> ranges_;
  std::vector<int> owner_;
};

/* New map for a changed server count. Surviving servers keep the leading
 * portion of what they already hold (up to their new even target); everything
 * else pools in coordinate order and refills under-target servers in server
 * order. Keeps data movement small and is exactly reversible for a grow
 * followed by the matching shrink. */
ShardMap recompute_shard_map(const ShardMap& current, int new_server_count);

/* Examples moved between workers when the worker count changes. */
struct DataRepartition {
  std::vector<std::pair<std::int64_t, std::int64_t>> new_ranges;  // per worker [lo, hi)
  std::int64_t moved_examples = 0;
};

/* Model coordinates moved between servers. */
struct ModelRelocation {
  struct Move {
    std::uint32_t lo = 0, hi = 0;  // [lo, hi)
    int src = 0, dst = 0;
  };
  std::vector<Move> moves;
  ShardMap new_map;
  std::uint32_t moved_params = 0;
};

/* Knob changes that touch no training state (thread counts, mode, rates). */
struct SettingSwitch {
  std::vector<std::string> changed_knobs;
};

struct ReconfigPlan {
  SystemSetting from;
  SystemSetting to;
  std::optional<DataRepartition> repartition;
  std::optional<ModelRelocation> relocation;
  std::optional<SettingSwitch> knob_switch;

  bool empty() const { return !repartition && !relocation && !knob_switch; }
  std::vector<std::string> action_names() const;
};

/* Action labels used in event logs and cost tables. */
inline constexpr const char* kActionRepartition = "data_repartition";
inline constexpr const char* kActionRelocation = "model_relocation";
inline constexpr const char* kActionSwitch = "setting_switch";

}  // namespace pstune
