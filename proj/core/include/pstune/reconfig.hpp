// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>

#include "pstune/cluster.hpp"
#include "pstune/reconfig_types.hpp"

namespace pstune {

/* What to compare settings against when planning: which knob splits the node
 * budget between servers and workers, and the problem sizes. */
struct PlanContext {
  const KnobSpace* space = nullptr;
  std::string node_split_knob;  // knob holding the server count; workers = budget - servers
  int node_budget = 0;
  std::int64_t n_examples = 0;
};

int servers_of(const SystemSetting& s, const PlanContext& ctx);
int workers_of(const SystemSetting& s, const PlanContext& ctx);

/* Derives the minimal action set for from -> to against the cluster's current
 * shard map and worker ranges: a model relocation and data repartition when
 * the split knob changes, a stateless switch for everything else. */
ReconfigPlan plan_reconfig(const SystemSetting& from, const SystemSetting& to,
                           const ClusterState& cluster, const PlanContext& ctx);

/* Charged (simulated) seconds per action. The quiescent path prices a full
 * stop: drain and pause every worker, checkpoint the whole model, restart
 * with the new layout, restore, and repartition from scratch. The live path
 * prices only the delta: relocation messages for the moved fraction plus a
 * fixed pipeline floor, repartitioned examples, and a constant for stateless
 * switches. */
struct ReconfigCostSpec {
  double unit = 2.5e-3;            // seconds per model coordinate equivalent
  double live_floor = 0.35;        // relocation pipeline floor, fraction of a full model
  double live_slope = 0.30;        // incremental cost per moved fraction
  double repartition_unit = 1e-5;  // seconds per reassigned example (live)
  double switch_seconds = 5e-4;    // stateless switch constant
  double quiesce = 0.50;           // drain cost, fraction of a full model sweep
  double checkpoint = 1.1;         // serialize, fraction of a full model sweep
  double restore = 1.1;            // deserialize + redistribute, fraction
};

struct AppliedReconfig {
  double total_seconds = 0.0;
  std::map<std::string, double> per_action;  // action label -> seconds
  double blocked_per_worker = 0.0;
};

/* Non-quiescent application: starts the relocation (coordinates cross on the
 * next pushes), swaps worker ranges, and never blocks a worker. */
AppliedReconfig apply_live(ClusterState& cluster, const ReconfigPlan& plan,
                           const ReconfigCostSpec& costs);

/* Stop-the-world application: finalizes any in-flight relocation, then swaps
 * the map and ranges under a full pause charged to every worker. */
AppliedReconfig apply_quiescent(ClusterState& cluster, const ReconfigPlan& plan,
                                const ReconfigCostSpec& costs);

/* Running per-action-type means of observed reconfiguration costs. */
class MeasuredReconfigCosts {
 public:
  void record(const std::string& action, double seconds);
  bool has(const std::string& action) const;
  double mean(const std::string& action) const;  // throws insufficient_data_error
  std::size_t observations(const std::string& action) const;

 private:
  std::map<std::string, std::pair<double, std::size_t>> sums_;
};

struct ReconfigCostEstimate {
  double seconds = 0.0;
  bool used_formula_fallback = false;  // some action type had no measurement yet
};

/* Prices a plan by summing the measured means of its action types; action
 * types never observed fall back to the charged-cost formula (and flag it). */
ReconfigCostEstimate estimate_reconfig_cost(const MeasuredReconfigCosts& measured,
                                            const ReconfigPlan& plan,
                                            const ReconfigCostSpec& costs, std::uint32_t dim,
                                            std::int64_t n_examples);

}  // namespace pstune
