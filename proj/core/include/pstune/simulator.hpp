// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <deque>
#include <string>

#include "pstune/cluster.hpp"
#include "pstune/cost_model.hpp"
#include "pstune/metrics.hpp"
#include "pstune/reconfig.hpp"
#include "pstune/workload.hpp"

namespace pstune {

SyncMode sync_mode_from_name(const std::string& name);  // throws config_error
std::string sync_mode_name(SyncMode m);

struct SimulatorConfig {
  int node_budget = 36;
  std::string node_split_knob = "servers";
  std::string threads_knob = "threads";
  std::string mode_knob;  // empty: default_mode applies to every setting
  SyncMode default_mode = SyncMode::Asp;
  int batch_size = 8;
  double learning_rate = 0.05;
  double lr_decay = 0.0;  // inverse-time schedule: alpha_j = learning_rate / (1 + lr_decay * j)
  double divergence_factor = 1e12;  // loss above factor * initial loss counts as divergence
  std::uint64_t seed = 0;
  CostCoefficients cost;
  std::uint64_t cost_seed = 0;
  ReconfigCostSpec reconfig_costs;
};

enum class RunStatus { Running, Converged, Diverged };

/* Event-driven trainer. Each iteration: the active worker set pulls, computes
 * minibatch gradients (asynchronous mode against a model snapshot whose age
 * is drawn up to the staleness bound tau = worker count), pushes scaled
 * updates through the server protocol, and the observed minibatch loss plus
 * the modeled wall seconds are appended to the repository. Reconfigurations
 * run between iterations through the live or quiescent path and are charged
 * to the same simulated clock. */
class Simulation {
 public:
  Simulation(const Workload& workload, const KnobSpace& space, const SimulatorConfig& cfg,
             const SystemSetting& initial, SettingsCatalog& catalog, MetricsRepository& repo);

  RunStatus run_iterations(std::int64_t count, double epsilon);

  ReconfigPlan plan_for(const SystemSetting& to) const;
  AppliedReconfig reconfigure(const SystemSetting& to, bool live);

  double clock_seconds() const { return clock_; }
  std::int64_t next_iteration() const { return next_j_; }
  double initial_loss() const { return initial_loss_; }
  double last_loss() const { return last_loss_; }
  double current_risk() const { return workload_->empirical_risk(cluster_.snapshot()); }
  const SystemSetting& current_setting() const { return setting_; }
  const std::string& current_setting_id() const { return setting_id_; }
  const ClusterState& cluster() const { return cluster_; }
  ClusterState& cluster_mutable() { return cluster_; }
  const MeasuredReconfigCosts& measured_costs() const { return measured_; }
  MeasuredReconfigCosts& measured_costs_mutable() { return measured_; }
  ClusterShape shape() const { return shape_for(setting_); }
  ClusterShape shape_for(const SystemSetting& s) const;
  PlanContext plan_context() const;
  int max_staleness_seen() const { return max_staleness_seen_; }

 private:
  void step(double epsilon);
  SyncMode mode_of(const SystemSetting& s) const;
  std::vector<std::size_t> draw_batch(std::int64_t j, int worker,
                                      const std::pair<std::int64_t, std::int64_t>& range,
                                      int batch) const;

  const Workload* workload_;
  const KnobSpace* space_;
  SimulatorConfig cfg_;
  SettingsCatalog* catalog_;
  MetricsRepository* repo_;
  ClusterState cluster_;
  IterationCostModel cost_model_;
  MeasuredReconfigCosts measured_;
  SystemSetting setting_;
  std::string setting_id_;
  std::deque<Eigen::VectorXd> history_;  // [0] = current model
  double clock_ = 0.0;
  std::int64_t next_j_ = 0;
  double initial_loss_ = 0.0;
  double last_loss_ = 0.0;
  RunStatus status_ = RunStatus::Running;
  int max_staleness_seen_ = 0;
};

}  // namespace pstune
