// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#include "pstune/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "pstune/errors.hpp"
#include "pstune/rng.hpp"

namespace pstune {

SyncMode sync_mode_from_name(const std::string& name) {
  if (name == "serial") return SyncMode::Serial;
  if (name == "bsp") return SyncMode::Bsp;
  if (name == "asp") return SyncMode::Asp;
  throw config_error("unknown synchronization mode: " + name);
}

std::string sync_mode_name(SyncMode m) {
  switch (m) {
    case SyncMode::Serial: return "serial";
    case SyncMode::Bsp: return "bsp";
    case SyncMode::Asp: return "asp";
  }
  return "unknown";
}

Simulation::Simulation(const Workload& workload, const KnobSpace& space,
                       const SimulatorConfig& cfg, const SystemSetting& initial,
                       SettingsCatalog& catalog, MetricsRepository& repo)
    : workload_(&workload),
      space_(&space),
      cfg_(cfg),
      catalog_(&catalog),
      repo_(&repo),
      cluster_(servers_of(initial, PlanContext{&space, cfg.node_split_knob, cfg.node_budget,
                                               workload.size()}),
               workers_of(initial, PlanContext{&space, cfg.node_split_knob, cfg.node_budget,
                                               workload.size()}),
               workload.initial_model()),
      cost_model_(cfg.cost, cfg.cost_seed),
      setting_(initial) {
  validate_setting(initial, space);
  setting_id_ = catalog_->id_for(setting_);
  cluster_.set_worker_count(cluster_.worker_count(), workload_->size());
  initial_loss_ = workload_->empirical_risk(workload_->initial_model());
  last_loss_ = initial_loss_;
  history_.push_front(workload_->initial_model());
}

PlanContext Simulation::plan_context() const {
  return PlanContext{space_, cfg_.node_split_knob, cfg_.node_budget, workload_->size()};
}

SyncMode Simulation::mode_of(const SystemSetting& s) const {
  if (cfg_.mode_knob.empty()) return cfg_.default_mode;
  auto it = s.find(cfg_.mode_knob);
  if (it == s.end()) return cfg_.default_mode;
  return sync_mode_from_name(std::get<std::string>(it->second));
}

ClusterShape Simulation::shape_for(const SystemSetting& s) const {
  PlanContext ctx = plan_context();
  ClusterShape shape;
  shape.servers = servers_of(s, ctx);
  shape.workers = workers_of(s, ctx);
  shape.threads = 1;
  if (!cfg_.threads_knob.empty()) {
    auto it = s.find(cfg_.threads_knob);
    if (it != s.end()) shape.threads = static_cast<int>(std::get<std::int64_t>(it->second));
  }
  shape.mode = mode_of(s);
  shape.batch = cfg_.batch_size;
  shape.model_dim = workload_->dimension();
  return shape;
}

std::vector<std::size_t> Simulation::draw_batch(std::int64_t j, int worker,
                                                const std::pair<std::int64_t, std::int64_t>& range,
                                                int batch) const {
  std::int64_t n = range.second - range.first;
  if (n <= 0) throw validation_error("worker has an empty example range");
  Rng rng(mix_seed(cfg_.seed, 0xBA7C, static_cast<std::uint64_t>(j),
                   static_cast<std::uint64_t>(worker)));
  std::size_t m = static_cast<std::size_t>(std::min<std::int64_t>(batch, n));
  std::vector<std::size_t> out(m);
  for (std::size_t i = 0; i < m; ++i)
    out[i] = static_cast<std::size_t>(range.first +
                                      static_cast<std::int64_t>(rng.uniform_index(
                                          static_cast<std::size_t>(n))));
  return out;
}

void Simulation::step(double epsilon) {
  std::int64_t j = next_j_;
  ClusterShape shape = shape_for(setting_);
  double alpha = cfg_.learning_rate / (1.0 + cfg_.lr_decay * static_cast<double>(j));
  int dim = workload_->dimension();

  std::vector<std::size_t> union_batch;
  if (shape.mode == SyncMode::Serial) {
    Eigen::VectorXd w(dim);
    cluster_.pull_model(0, w);
    std::vector<std::size_t> batch = draw_batch(j, 0, {0, workload_->size()}, shape.batch);
    Eigen::VectorXd g = workload_->minibatch_gradient(w, batch);
    cluster_.push_update(0, -alpha * g);
    union_batch = std::move(batch);
  } else if (shape.mode == SyncMode::Bsp) {
    int workers = cluster_.worker_count();
    std::vector<Eigen::VectorXd> grads(static_cast<std::size_t>(workers));
    Eigen::VectorXd w(dim);
    for (int k = 0; k < workers; ++k) {
      cluster_.pull_model(k, w);
      std::vector<std::size_t> batch =
          draw_batch(j, k, cluster_.worker_ranges()[static_cast<std::size_t>(k)], shape.batch);
      grads[static_cast<std::size_t>(k)] = workload_->minibatch_gradient(w, batch);
      union_batch.insert(union_batch.end(), batch.begin(), batch.end());
    }
    double share = alpha / static_cast<double>(workers);
    for (int k = 0; k < workers; ++k)
      cluster_.push_update(k, -share * grads[static_cast<std::size_t>(k)]);
  } else {  // asynchronous
    int workers = cluster_.worker_count();
    int k = static_cast<int>(j % workers);
    Eigen::VectorXd pulled(dim);
    cluster_.pull_model(k, pulled);  // records the originals for this worker's pushes

    int tau = workers;  // staleness bound
    int avail = static_cast<int>(history_.size()) - 1;
    int bound = std::min(tau, avail);
    int age = 0;
    if (workers > 1 && bound > 0) {
      Rng rng(mix_seed(cfg_.seed, 0x57A1E, static_cast<std::uint64_t>(j),
                       static_cast<std::uint64_t>(k)));
      age = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(bound + 1)));
    }
    if (age > tau) throw protocol_error("snapshot age exceeded the staleness bound");
    max_staleness_seen_ = std::max(max_staleness_seen_, age);
    const Eigen::VectorXd& snapshot =
        age == 0 ? pulled : history_[static_cast<std::size_t>(age)];

    std::vector<std::size_t> batch =
        draw_batch(j, k, cluster_.worker_ranges()[static_cast<std::size_t>(k)], shape.batch);
    Eigen::VectorXd g = workload_->minibatch_gradient(snapshot, batch);
    cluster_.push_update(k, -alpha * g);
    union_batch = std::move(batch);
  }

  Eigen::VectorXd updated = cluster_.snapshot();
  double loss = workload_->minibatch_loss(updated, union_batch);
  double t = cost_model_.iteration_seconds(shape, j);

  history_.push_front(updated);
  std::size_t keep = static_cast<std::size_t>(cfg_.node_budget) + 1;
  while (history_.size() > keep) history_.pop_back();

  if (!std::isfinite(loss) || loss > cfg_.divergence_factor * initial_loss_) {
    status_ = RunStatus::Diverged;
    last_loss_ = loss;
    next_j_ += 1;
    return;  // the diverged sample is not appended; the run stops here
  }

  repo_->append({j, setting_id_, t, loss});
  clock_ += t;
  last_loss_ = loss;
  next_j_ += 1;
  if (loss <= epsilon) status_ = RunStatus::Converged;
}

RunStatus Simulation::run_iterations(std::int64_t count, double epsilon) {
  if (count < 0) throw validation_error("iteration count must be non-negative");
  if (status_ != RunStatus::Running) return status_;
  for (std::int64_t i = 0; i < count; ++i) {
    step(epsilon);
    if (status_ != RunStatus::Running) break;
  }
  return status_;
}

ReconfigPlan Simulation::plan_for(const SystemSetting& to) const {
  return plan_reconfig(setting_, to, cluster_, plan_context());
}

AppliedReconfig Simulation::reconfigure(const SystemSetting& to, bool live) {
  ReconfigPlan plan = plan_for(to);
  AppliedReconfig applied = live ? apply_live(cluster_, plan, cfg_.reconfig_costs)
                                 : apply_quiescent(cluster_, plan, cfg_.reconfig_costs);
  clock_ += applied.total_seconds;
  for (const auto& [action, seconds] : applied.per_action) measured_.record(action, seconds);

  std::string from_id = setting_id_;
  setting_ = to;
  setting_id_ = catalog_->id_for(setting_);
  ReconfigEvent ev;
  ev.j = next_j_;
  ev.technique = live ? "live" : "quiescent";
  ev.actions = plan.action_names();
  ev.cost = applied.total_seconds;
  ev.from_id = from_id;
  ev.to_id = setting_id_;
  repo_->append_event(ev);
  return applied;
}

}  // namespace pstune
