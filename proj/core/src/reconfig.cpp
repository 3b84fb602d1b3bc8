// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#include "pstune/reconfig.hpp"

#include <algorithm>
#include <cmath>

#include "pstune/errors.hpp"

namespace pstune {

namespace {

const KnobSpec& split_knob(const PlanContext& ctx) {
  if (ctx.space == nullptr) throw validation_error("plan context needs a knob space");
  const KnobSpec* k = ctx.space->find(ctx.node_split_knob);
  if (k == nullptr) throw config_error("node split knob not in space: " + ctx.node_split_knob);
  if (k->kind != KnobKind::IntegerRange)
    throw config_error("node split knob must be an integer range");
  return *k;
}

}  // namespace

int servers_of(const SystemSetting& s, const PlanContext& ctx) {
  split_knob(ctx);
  auto it = s.find(ctx.node_split_knob);
  if (it == s.end()) throw validation_error("setting is missing the node split knob");
  return static_cast<int>(std::get<std::int64_t>(it->second));
}

int workers_of(const SystemSetting& s, const PlanContext& ctx) {
  int servers = servers_of(s, ctx);
  int workers = ctx.node_budget - servers;
  if (workers < 1)
    throw validation_error("node budget leaves no workers for this server count");
  return workers;
}

ReconfigPlan plan_reconfig(const SystemSetting& from, const SystemSetting& to,
                           const ClusterState& cluster, const PlanContext& ctx) {
  validate_setting(from, *ctx.space);
  validate_setting(to, *ctx.space);
  ReconfigPlan plan;
  plan.from = from;
  plan.to = to;

  std::vector<std::string> stateless;
  bool split_changed = false;
  for (const auto& k : ctx.space->knobs()) {
    if (from.at(k.name) == to.at(k.name)) continue;
    if (k.name == ctx.node_split_knob)
      split_changed = true;
    else
      stateless.push_back(k.name);
  }

  if (split_changed) {
    int new_servers = servers_of(to, ctx);
    int new_workers = workers_of(to, ctx);

    ModelRelocation reloc;
    reloc.new_map = recompute_shard_map(cluster.shard_map(), new_servers);
    const ShardMap& cur = cluster.shard_map();
    std::uint32_t p = 0;
    while (p < cur.dim()) {
      int src = cur.owner(p);
      int dst = reloc.new_map.owner(p);
      std::uint32_t q = p + 1;
      while (q < cur.dim() && cur.owner(q) == src && reloc.new_map.owner(q) == dst) ++q;
      if (src != dst) {
        reloc.moves.push_back({p, q, src, dst});
        reloc.moved_params += q - p;
      }
      p = q;
    }
    if (!reloc.moves.empty()) plan.relocation = std::move(reloc);

    DataRepartition rep;
    rep.new_ranges = ClusterState::even_ranges(ctx.n_examples, new_workers);
    const auto& old_ranges = cluster.worker_ranges();
    std::int64_t stay = 0;
    for (std::size_t w = 0; w < rep.new_ranges.size() && w < old_ranges.size(); ++w) {
      std::int64_t lo = std::max(rep.new_ranges[w].first, old_ranges[w].first);
      std::int64_t hi = std::min(rep.new_ranges[w].second, old_ranges[w].second);
      stay += std::max<std::int64_t>(hi - lo, 0);
    }
    rep.moved_examples = ctx.n_examples - stay;
    plan.repartition = std::move(rep);
  }
  if (!stateless.empty()) plan.knob_switch = SettingSwitch{std::move(stateless)};
  return plan;
}

namespace {

double model_sweep_seconds(const ReconfigCostSpec& c, std::uint32_t dim) {
  return c.unit * static_cast<double>(dim);
}

double live_relocation_seconds(const ReconfigCostSpec& c, std::uint32_t dim,
                               std::uint32_t moved) {
  double f = static_cast<double>(moved) / static_cast<double>(dim);
  return model_sweep_seconds(c, dim) * (c.live_floor + c.live_slope * f);
}

double live_repartition_seconds(const ReconfigCostSpec& c, std::int64_t moved) {
  return c.repartition_unit * static_cast<double>(moved);
}

void install_repartition(ClusterState& cluster, const DataRepartition& rep) {
  std::int64_t total = 0;
  for (const auto& [lo, hi] : rep.new_ranges) total += hi - lo;
  cluster.set_worker_count(static_cast<int>(rep.new_ranges.size()), total);
  cluster.set_worker_ranges(rep.new_ranges);
}

}  // namespace

AppliedReconfig apply_live(ClusterState& cluster, const ReconfigPlan& plan,
                           const ReconfigCostSpec& costs) {
  AppliedReconfig out;
  if (cluster.relocation_active()) cluster.finalize_relocation();
  if (plan.relocation) {
    cluster.begin_relocation(*plan.relocation);
    double s = live_relocation_seconds(costs, cluster.dim(), plan.relocation->moved_params);
    out.per_action[kActionRelocation] = s;
  }
  if (plan.repartition) {
    install_repartition(cluster, *plan.repartition);
    double s = live_repartition_seconds(costs, plan.repartition->moved_examples);
    out.per_action[kActionRepartition] = s;
  }
  if (plan.knob_switch) out.per_action[kActionSwitch] = costs.switch_seconds;
  for (const auto& [name, s] : out.per_action) out.total_seconds += s;
  return out;  // blocked_per_worker stays zero: no worker ever waits
}

AppliedReconfig apply_quiescent(ClusterState& cluster, const ReconfigPlan& plan,
                                const ReconfigCostSpec& costs) {
  AppliedReconfig out;
  if (cluster.relocation_active()) cluster.finalize_relocation();
  std::uint32_t dim = cluster.dim();
  double sweep = model_sweep_seconds(costs, dim);
  /* Full stop regardless of how small the change is: drain, checkpoint the
   * whole model, restart with the new layout, restore, repartition. */
  out.per_action["quiesce"] = costs.quiesce * sweep;
  out.per_action["checkpoint"] = costs.checkpoint * sweep;
  out.per_action["restore"] = costs.restore * sweep;
  if (plan.repartition) {
    /* Restarted workers reload their whole shard of the data. */
    std::int64_t all = 0;
    for (const auto& [lo, hi] : plan.repartition->new_ranges) all += hi - lo;
    out.per_action[kActionRepartition] = live_repartition_seconds(costs, all);
  }
  if (plan.knob_switch) out.per_action[kActionSwitch] = costs.switch_seconds;

  if (plan.relocation) cluster.install_shard_map(plan.relocation->new_map);
  if (plan.repartition) install_repartition(cluster, *plan.repartition);
  for (const auto& [name, s] : out.per_action) out.total_seconds += s;
  out.blocked_per_worker = out.total_seconds;
  cluster.add_blocked_seconds(out.blocked_per_worker);
  return out;
}

void MeasuredReconfigCosts::record(const std::string& action, double seconds) {
  if (!(seconds >= 0.0)) throw validation_error("cost observations must be non-negative");
  auto& [sum, n] = sums_[action];
  sum += seconds;
  n += 1;
}

bool MeasuredReconfigCosts::has(const std::string& action) const {
  return sums_.count(action) > 0;
}

double MeasuredReconfigCosts::mean(const std::string& action) const {
  auto it = sums_.find(action);
  if (it == sums_.end())
    throw insufficient_data_error("no cost observations for action: " + action);
  return it->second.first / static_cast<double>(it->second.second);
}

std::size_t MeasuredReconfigCosts::observations(const std::string& action) const {
  auto it = sums_.find(action);
  return it == sums_.end() ? 0 : it->second.second;
}

ReconfigCostEstimate estimate_reconfig_cost(const MeasuredReconfigCosts& measured,
                                            const ReconfigPlan& plan,
                                            const ReconfigCostSpec& costs, std::uint32_t dim,
                                            std::int64_t n_examples) {
  ReconfigCostEstimate est;
  for (const std::string& action : plan.action_names()) {
    if (measured.has(action)) {
      est.seconds += measured.mean(action);
    } else {
      est.used_formula_fallback = true;
      if (action == kActionRelocation) {
        est.seconds += live_relocation_seconds(costs, dim, plan.relocation->moved_params);
      } else if (action == kActionRepartition) {
        est.seconds += live_repartition_seconds(costs, plan.repartition->moved_examples);
      } else {
        est.seconds += costs.switch_seconds;
      }
    }
  }
  return est;
}

}  // namespace pstune
