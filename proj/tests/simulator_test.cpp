// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#include "pstune/simulator.hpp"

#include <doctest.h>

#include <cmath>

#include "pstune/errors.hpp"

using namespace pstune;

namespace {

Workload bench_workload(std::uint64_t seed = 2) {
  WorkloadSpec spec;
  spec.kind = WorkloadKind::Quadratic;
  spec.dimension = 4;
  spec.n_examples = 16;
  spec.eigen_min = 1.0;
  spec.eigen_max = 4.0;
  spec.seed = seed;
  return Workload::generate(spec);
}

KnobSpace sim_space() {
  return KnobSpace({
      {"servers", KnobKind::IntegerRange, 1, 4, {}},
      {"mode", KnobKind::Nominal, 0, 0, {"serial", "bsp", "asp"}},
  });
}

SystemSetting sim_setting(std::int64_t servers, const std::string& mode) {
  return {{"servers", servers}, {"mode", std::string(mode)}};
}

SimulatorConfig sim_config() {
  SimulatorConfig cfg;
  cfg.node_budget = 5;  // workers = 5 - servers
  cfg.node_split_knob = "servers";
  cfg.threads_knob = "";
  cfg.mode_knob = "mode";
  cfg.batch_size = 6;
  cfg.learning_rate = 0.05;
  cfg.seed = 11;
  return cfg;
}

constexpr double kNoEps = 1e-300;  // threshold no finite positive loss reaches

}  // namespace

TEST_CASE("synchronization mode names round-trip") {
  for (auto m : {SyncMode::Serial, SyncMode::Bsp, SyncMode::Asp})
    CHECK(sync_mode_from_name(sync_mode_name(m)) == m);
  CHECK_THROWS_AS(sync_mode_from_name("telepathy"), config_error);
}

TEST_CASE("serial training descends and logs one dense record per iteration") {
  Workload w = bench_workload();
  KnobSpace space = sim_space();
  SettingsCatalog catalog;
  MetricsRepository repo;
  Simulation sim(w, space, sim_config(), sim_setting(4, "serial"), catalog, repo);

  CHECK(sim.initial_loss() == w.empirical_risk(w.initial_model()));
  RunStatus st = sim.run_iterations(300, kNoEps);
  CHECK(st == RunStatus::Running);
  REQUIRE(repo.size() == 300);

  double clock = 0.0;
  for (std::size_t i = 0; i < repo.size(); ++i) {
    const MetricRecord& rec = repo.at(i);
    CHECK(rec.j == static_cast<std::int64_t>(i));
    CHECK(rec.t > 0.0);
    CHECK(std::isfinite(rec.l));
    CHECK(rec.setting_id == sim.current_setting_id());
    clock += rec.t;
  }
  CHECK(sim.clock_seconds() == doctest::Approx(clock).epsilon(1e-12));
  CHECK(sim.next_iteration() == 300);
  CHECK(sim.last_loss() == repo.at(repo.size() - 1).l);
  CHECK(sim.current_risk() < sim.initial_loss());
  CHECK(sim.max_staleness_seen() == 0);
}

TEST_CASE("the run converges exactly when a logged loss crosses the threshold") {
  Workload w = bench_workload();
  KnobSpace space = sim_space();
  SettingsCatalog catalog;
  MetricsRepository repo;
  Simulation sim(w, space, sim_config(), sim_setting(4, "serial"), catalog, repo);

  double eps = 0.5 * sim.initial_loss();
  RunStatus st = sim.run_iterations(500, eps);
  REQUIRE(st == RunStatus::Converged);
  REQUIRE(!repo.empty());
  std::size_t n = repo.size();
  CHECK(repo.at(n - 1).l <= eps);
  for (std::size_t i = 0; i + 1 < n; ++i) CHECK(repo.at(i).l > eps);
  CHECK(sim.next_iteration() == static_cast<std::int64_t>(n));

  // Further requests are no-ops once the run has finished.
  CHECK(sim.run_iterations(10, eps) == RunStatus::Converged);
  CHECK(repo.size() == n);
}

TEST_CASE("asynchronous mode with one worker replays the serial update sequence") {
  Workload w = bench_workload();
  KnobSpace space = sim_space();
  SettingsCatalog cat_a, cat_b;
  MetricsRepository repo_a, repo_b;
  Simulation serial(w, space, sim_config(), sim_setting(4, "serial"), cat_a, repo_a);
  Simulation async(w, space, sim_config(), sim_setting(4, "asp"), cat_b, repo_b);
  CHECK(async.cluster().worker_count() == 1);

  serial.run_iterations(80, kNoEps);
  async.run_iterations(80, kNoEps);
  REQUIRE(repo_a.size() == 80);
  REQUIRE(repo_b.size() == 80);
  for (std::size_t i = 0; i < 80; ++i) CHECK(repo_a.at(i).l == repo_b.at(i).l);
  // The trajectories agree but the charged seconds do not: only the
  // distributed path pays aggregation and network time.
  CHECK(repo_a.at(0).t < repo_b.at(0).t);
  CHECK(serial.max_staleness_seen() == 0);
  CHECK(async.max_staleness_seen() == 0);
}

TEST_CASE("asynchronous snapshot age stays within the worker-count bound") {
  Workload w = bench_workload();
  KnobSpace space = sim_space();
  SettingsCatalog catalog;
  MetricsRepository repo;
  Simulation sim(w, space, sim_config(), sim_setting(1, "asp"), catalog, repo);
  REQUIRE(sim.cluster().worker_count() == 4);

  sim.run_iterations(200, kNoEps);
  CHECK(sim.max_staleness_seen() >= 1);  // stale reads actually happen
  CHECK(sim.max_staleness_seen() <= 4);

  SettingsCatalog catalog2;
  MetricsRepository repo2;
  Simulation bsp(w, space, sim_config(), sim_setting(1, "bsp"), catalog2, repo2);
  bsp.run_iterations(50, kNoEps);
  CHECK(bsp.max_staleness_seen() == 0);
}

TEST_CASE("oversized steps diverge, stop the run, and drop the exploding sample") {
  Workload w = bench_workload();
  KnobSpace space = sim_space();
  SettingsCatalog catalog;
  MetricsRepository repo;
  SimulatorConfig cfg = sim_config();
  cfg.learning_rate = 10.0;  // far beyond 2 / smoothness
  Simulation sim(w, space, cfg, sim_setting(4, "serial"), catalog, repo);

  RunStatus st = sim.run_iterations(100, kNoEps);
  REQUIRE(st == RunStatus::Diverged);
  CHECK(repo.size() < 100);
  double clock = 0.0;
  for (std::size_t i = 0; i < repo.size(); ++i) {
    CHECK(std::isfinite(repo.at(i).l));
    clock += repo.at(i).t;
  }
  // The diverged iteration consumed an index but logged nothing and cost nothing.
  CHECK(sim.next_iteration() == static_cast<std::int64_t>(repo.size()) + 1);
  CHECK(sim.clock_seconds() == doctest::Approx(clock).epsilon(1e-12));
  bool blown = !std::isfinite(sim.last_loss()) ||
               sim.last_loss() > cfg.divergence_factor * sim.initial_loss();
  CHECK(blown);
  CHECK(sim.run_iterations(5, kNoEps) == RunStatus::Diverged);
  CHECK(sim.next_iteration() == static_cast<std::int64_t>(repo.size()) + 1);
}

TEST_CASE("identical configurations replay identical trajectories") {
  Workload w = bench_workload();
  KnobSpace space = sim_space();
  SettingsCatalog cat_a, cat_b;
  MetricsRepository repo_a, repo_b;
  Simulation a(w, space, sim_config(), sim_setting(1, "asp"), cat_a, repo_a);
  Simulation b(w, space, sim_config(), sim_setting(1, "asp"), cat_b, repo_b);

  a.run_iterations(120, kNoEps);
  b.run_iterations(120, kNoEps);
  REQUIRE(repo_a.size() == repo_b.size());
  for (std::size_t i = 0; i < repo_a.size(); ++i) {
    CHECK(repo_a.at(i).j == repo_b.at(i).j);
    CHECK(repo_a.at(i).setting_id == repo_b.at(i).setting_id);
    CHECK(repo_a.at(i).t == repo_b.at(i).t);
    CHECK(repo_a.at(i).l == repo_b.at(i).l);
  }
  CHECK(a.max_staleness_seen() == b.max_staleness_seen());
  CHECK(a.clock_seconds() == b.clock_seconds());
}

TEST_CASE("inverse-time step decay slows early descent") {
  Workload w = bench_workload();
  KnobSpace space = sim_space();
  SettingsCatalog cat_a, cat_b;
  MetricsRepository repo_a, repo_b;
  SimulatorConfig flat = sim_config();
  SimulatorConfig decayed = sim_config();
  decayed.lr_decay = 0.5;
  Simulation a(w, space, flat, sim_setting(4, "serial"), cat_a, repo_a);
  Simulation b(w, space, decayed, sim_setting(4, "serial"), cat_b, repo_b);

  a.run_iterations(100, kNoEps);
  b.run_iterations(100, kNoEps);
  CHECK(a.current_risk() < b.current_risk());
  CHECK(b.current_risk() < b.initial_loss());
}

TEST_CASE("a live reconfiguration charges the clock, reshapes the cluster, and logs an event") {
  Workload w = bench_workload();
  KnobSpace space = sim_space();
  SettingsCatalog catalog;
  MetricsRepository repo;
  Simulation sim(w, space, sim_config(), sim_setting(1, "asp"), catalog, repo);

  sim.run_iterations(10, kNoEps);
  std::string from_id = sim.current_setting_id();
  double clock_before = sim.clock_seconds();

  CHECK(sim.plan_for(sim.current_setting()).empty());
  SystemSetting target = sim_setting(2, "asp");
  AppliedReconfig applied = sim.reconfigure(target, /*live=*/true);

  CHECK(applied.total_seconds > 0.0);
  CHECK(sim.clock_seconds() ==
        doctest::Approx(clock_before + applied.total_seconds).epsilon(1e-12));
  CHECK(sim.cluster().worker_count() == 3);   // data ranges swap immediately
  CHECK(sim.cluster().relocation_active());   // model coordinates still crossing
  CHECK(sim.cluster().server_count() == 1);   // map swaps once the last push lands
  CHECK(sim.cluster().total_blocked_seconds() == 0.0);  // nobody waits on the live path
  CHECK(sim.current_setting_id() != from_id);

  REQUIRE(repo.events().size() == 1);
  const ReconfigEvent& ev = repo.events()[0];
  CHECK(ev.j == 10);
  CHECK(ev.technique == "live");
  CHECK(ev.cost == applied.total_seconds);
  CHECK(ev.from_id == from_id);
  CHECK(ev.to_id == sim.current_setting_id());
  CHECK(!ev.actions.empty());
  for (const auto& [action, seconds] : applied.per_action)
    CHECK(sim.measured_costs().observations(action) == 1);

  sim.run_iterations(10, kNoEps);
  CHECK(!sim.cluster().relocation_active());  // the first full push round completed it
  CHECK(sim.cluster().server_count() == 2);
  REQUIRE(repo.size() == 20);
  CHECK(repo.at(9).setting_id == from_id);
  CHECK(repo.at(10).setting_id == sim.current_setting_id());
  CHECK(repo.segments().size() == 2);
}

TEST_CASE("a quiescent reconfiguration blocks every worker for the full pause") {
  Workload w = bench_workload();
  KnobSpace space = sim_space();
  SettingsCatalog catalog;
  MetricsRepository repo;
  Simulation sim(w, space, sim_config(), sim_setting(1, "asp"), catalog, repo);

  sim.run_iterations(5, kNoEps);
  Eigen::VectorXd before = sim.cluster().snapshot();
  AppliedReconfig applied = sim.reconfigure(sim_setting(2, "asp"), /*live=*/false);

  CHECK(applied.total_seconds > 0.0);
  CHECK(applied.blocked_per_worker == applied.total_seconds);
  CHECK(sim.cluster().total_blocked_seconds() > 0.0);
  CHECK(repo.events().size() == 1);
  CHECK(repo.events()[0].technique == "quiescent");
  // The pause moves layout, not values.
  Eigen::VectorXd after = sim.cluster().snapshot();
  REQUIRE(after.size() == before.size());
  for (Eigen::Index i = 0; i < after.size(); ++i) CHECK(after[i] == before[i]);
}
