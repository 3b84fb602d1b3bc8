// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#include "pstune/experiment.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "pstune/errors.hpp"

using namespace pstune;
namespace fs = std::filesystem;

namespace {

nlohmann::json base_config() {
  return nlohmann::json{
      {"version", 1},
      {"workload",
       {{"kind", "quadratic"},
        {"dimension", 4},
        {"n_examples", 16},
        {"eigen_min", 1.0},
        {"eigen_max", 4.0},
        {"seed", 2}}},
      {"space",
       {{"knobs",
         {{{"name", "servers"}, {"kind", "int"}, {"lo", 1}, {"hi", 4}},
          {{"name", "threads"}, {"kind", "int"}, {"lo", 1}, {"hi", 2}}}}}},
      {"simulator",
       {{"node_budget", 5}, {"batch_size", 6}, {"learning_rate", 0.05}, {"seed", 11}}},
      {"tuner",
       {{"a", 5},
        {"b", 4},
        {"epsilon", 0.05},
        {"epsilon_relative", true},
        {"candidate_pool", 24},
        {"seed", 5},
        {"max_iterations", 4000}}},
      {"default_setting", {{"servers", 2}, {"threads", 1}}},
      {"sweep_seed", 7},
  };
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("pstune_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("a full configuration parses into every component") {
  ExperimentConfig cfg = parse_experiment_config(base_config());
  CHECK(cfg.workload.kind == WorkloadKind::Quadratic);
  CHECK(cfg.workload.dimension == 4);
  CHECK(cfg.workload.n_examples == 16);
  CHECK(cfg.space.encoded_width() == 2);
  CHECK(cfg.simulator.node_budget == 5);
  CHECK(cfg.simulator.batch_size == 6);
  CHECK(cfg.tuner.a_override == 5);
  CHECK(cfg.tuner.b == 4);
  CHECK(cfg.tuner.epsilon == 0.05);
  CHECK(cfg.epsilon_relative);
  CHECK(cfg.tuner.d_policy.kind == DPolicyKind::BoundedSupremum);
  CHECK(std::get<std::int64_t>(cfg.default_setting.at("servers")) == 2);
  CHECK(cfg.output_dir == fs::path("out"));
  CHECK(cfg.sweep_seed == 7);

  Workload w = Workload::generate(cfg.workload);
  double initial = w.empirical_risk(w.initial_model());
  CHECK(resolve_epsilon(cfg, w) == doctest::Approx(0.05 * initial));
  nlohmann::json absolute = base_config();
  absolute["tuner"]["epsilon_relative"] = false;
  CHECK(resolve_epsilon(parse_experiment_config(absolute), w) == 0.05);
}

TEST_CASE("configuration validation rejects each malformed input") {
  auto broken = [](auto mutate) {
    nlohmann::json j = base_config();
    mutate(j);
    return j;
  };
  CHECK_THROWS_AS(parse_experiment_config(broken([](auto& j) { j["version"] = 2; })),
                  config_error);
  CHECK_THROWS_AS(parse_experiment_config(broken([](auto& j) { j.erase("version"); })),
                  config_error);
  CHECK_THROWS_AS(parse_experiment_config(broken([](auto& j) { j.erase("workload"); })),
                  config_error);
  CHECK_THROWS_AS(parse_experiment_config(broken([](auto& j) { j.erase("space"); })),
                  config_error);
  CHECK_THROWS_AS(parse_experiment_config(broken([](auto& j) { j.erase("tuner"); })),
                  config_error);
  CHECK_THROWS_AS(
      parse_experiment_config(broken([](auto& j) { j.erase("default_setting"); })),
      config_error);
  CHECK_THROWS_AS(
      parse_experiment_config(broken([](auto& j) { j["workload"]["kind"] = "mystery"; })),
      config_error);
  CHECK_THROWS_AS(
      parse_experiment_config(broken([](auto& j) { j["tuner"].erase("epsilon"); })),
      config_error);
  CHECK_THROWS_AS(
      parse_experiment_config(broken([](auto& j) { j["tuner"]["epsilon"] = 0.0; })),
      config_error);
  CHECK_THROWS_AS(parse_experiment_config(broken([](auto& j) {
                    j["simulator"]["node_split_knob"] = "absent";
                  })),
                  config_error);
  CHECK_THROWS_AS(parse_experiment_config(broken([](auto& j) {
                    j["space"]["knobs"][0]["kind"] = "real";  // split knob must be integer
                  })),
                  config_error);
  // A node budget of 4 leaves zero workers at the top server count.
  CHECK_THROWS_AS(
      parse_experiment_config(broken([](auto& j) { j["simulator"]["node_budget"] = 4; })),
      config_error);
  CHECK_THROWS_AS(parse_experiment_config(broken([](auto& j) {
                    j["space"]["knobs"][0]["kind"] = "hexagonal";
                  })),
                  config_error);
  CHECK_THROWS_AS(
      parse_experiment_config(broken([](auto& j) { j["space"]["knobs"] = nlohmann::json::array(); })),
      config_error);
  CHECK_THROWS_AS(
      parse_experiment_config(broken([](auto& j) { j["default_setting"]["rocket"] = 3; })),
      config_error);
  CHECK_THROWS_AS(
      parse_experiment_config(broken([](auto& j) { j["default_setting"]["servers"] = "two"; })),
      config_error);

  CHECK_THROWS_AS(load_experiment_config("/nonexistent/st.json"), config_error);
  fs::path bad = fresh_dir("badcfg") / "cfg.json";
  std::ofstream(bad) << "{not json";
  CHECK_THROWS_AS(load_experiment_config(bad), config_error);
}

TEST_CASE("settings serialize to JSON and back") {
  ExperimentConfig cfg = parse_experiment_config(base_config());
  SystemSetting s{{"servers", std::int64_t{3}}, {"threads", std::int64_t{2}}};
  nlohmann::ordered_json sj = setting_to_json(s);
  CHECK(setting_from_json(sj, cfg.space) == s);
  CHECK_THROWS_AS(setting_from_json(nlohmann::json{{"rocket", 1}}, cfg.space), config_error);
  CHECK_THROWS_AS(setting_from_json(nlohmann::json{{"servers", "three"}}, cfg.space),
                  config_error);
  CHECK_THROWS_AS(
      setting_from_json(nlohmann::json{{"servers", 9}, {"threads", 1}}, cfg.space),
      config_error);
  CHECK_THROWS_AS(setting_from_json(nlohmann::json::array(), cfg.space), config_error);
}

TEST_CASE("the settings catalog round-trips in mint order only") {
  ExperimentConfig cfg = parse_experiment_config(base_config());
  SettingsCatalog catalog;
  SystemSetting s0{{"servers", std::int64_t{1}}, {"threads", std::int64_t{1}}};
  SystemSetting s1{{"servers", std::int64_t{4}}, {"threads", std::int64_t{2}}};
  CHECK(catalog.id_for(s0) == "X0");
  CHECK(catalog.id_for(s1) == "X1");

  nlohmann::ordered_json cj = catalog_to_json(catalog);
  SettingsCatalog back = catalog_from_json(cj, cfg.space);
  REQUIRE(back.size() == 2);
  CHECK(back.setting("X0") == s0);
  CHECK(back.setting("X1") == s1);

  nlohmann::ordered_json shuffled = nlohmann::ordered_json::object();
  shuffled["X1"] = setting_to_json(s0);
  shuffled["X0"] = setting_to_json(s1);
  CHECK_THROWS_AS(catalog_from_json(shuffled, cfg.space), config_error);
}

TEST_CASE("job reports round-trip through JSON") {
  JobReport r;
  r.mode = "tuned";
  r.status = "converged";
  r.completion_seconds = 12.5;
  r.iterations = 420;
  r.initial_loss = 3.0;
  r.final_loss = 0.01;
  r.epsilon = 0.05;
  r.reconfig_count = 2;
  r.reconfig_seconds = 0.75;
  r.blocked_seconds = 0.0;
  r.initial_setting_id = "X0";
  r.final_setting_id = "X3";
  r.timeline.push_back({12, "X0", "X1", "init", 0.0, 0.0});
  r.timeline.push_back({40, "X1", "X1", "keep", 0.25, 0.1});
  r.warnings.push_back("decision 3: unmeasured action type priced by formula");

  JobReport back = report_from_json(report_to_json(r));
  CHECK(back.mode == r.mode);
  CHECK(back.status == r.status);
  CHECK(back.completion_seconds == r.completion_seconds);
  CHECK(back.iterations == r.iterations);
  CHECK(back.initial_loss == r.initial_loss);
  CHECK(back.final_loss == r.final_loss);
  CHECK(back.epsilon == r.epsilon);
  CHECK(back.reconfig_count == r.reconfig_count);
  CHECK(back.reconfig_seconds == r.reconfig_seconds);
  CHECK(back.initial_setting_id == r.initial_setting_id);
  CHECK(back.final_setting_id == r.final_setting_id);
  REQUIRE(back.timeline.size() == 2);
  CHECK(back.timeline[1].reason == "keep");
  CHECK(back.timeline[1].ei == 0.25);
  CHECK(back.warnings == r.warnings);
  CHECK_THROWS_AS(report_from_json(nlohmann::json{{"mode", "tuned"}}), config_error);
}

TEST_CASE("a tuned job writes a complete, re-runnable artifact directory") {
  ExperimentConfig cfg = parse_experiment_config(base_config());
  fs::path dir_a = fresh_dir("job_a");
  fs::path dir_b = fresh_dir("job_b");
  RunArtifacts a = run_job_to_dir(cfg, std::nullopt, dir_a);
  RunArtifacts b = run_job_to_dir(cfg, std::nullopt, dir_b);

  CHECK(a.report.mode == "tuned");
  CHECK(a.report.status == "converged");
  for (const char* name : {"repo.jsonl", "settings.json", "report.json"}) {
    CHECK(fs::exists(dir_a / name));
    CHECK(slurp(dir_a / name) == slurp(dir_b / name));
  }
  CHECK(fs::exists(dir_a / "surrogate.json") == fs::exists(dir_b / "surrogate.json"));
  if (fs::exists(dir_a / "surrogate.json"))
    CHECK(slurp(dir_a / "surrogate.json") == slurp(dir_b / "surrogate.json"));

  // The artifacts reload through the same public readers.
  std::ifstream repo_in(dir_a / "repo.jsonl");
  MetricsRepository repo = MetricsRepository::load(repo_in);
  CHECK(static_cast<std::int64_t>(repo.size()) == a.report.iterations);
  nlohmann::ordered_json settings =
      nlohmann::ordered_json::parse(slurp(dir_a / "settings.json"));
  SettingsCatalog catalog = catalog_from_json(settings, cfg.space);
  CHECK(catalog.contains(a.report.final_setting_id));
  JobReport reread = report_from_json(nlohmann::json::parse(slurp(dir_a / "report.json")));
  CHECK(reread.completion_seconds == a.report.completion_seconds);
}

TEST_CASE("a fixed job writes no surrogate and reports its pinned setting") {
  ExperimentConfig cfg = parse_experiment_config(base_config());
  fs::path dir = fresh_dir("job_fixed");
  SystemSetting pinned{{"servers", std::int64_t{2}}, {"threads", std::int64_t{2}}};
  RunArtifacts a = run_job_to_dir(cfg, pinned, dir);
  CHECK(a.report.mode == "fixed");
  CHECK(a.report.reconfig_count == 0);
  CHECK(!fs::exists(dir / "surrogate.json"));
  CHECK(a.report.initial_setting_id == a.report.final_setting_id);
}

TEST_CASE("sweeps sample distinct settings and sort by completion time") {
  ExperimentConfig cfg = parse_experiment_config(base_config());
  SettingsCatalog catalog;
  std::vector<FixedTrace> traces;
  std::vector<SweepRow> rows = run_sweep(cfg, 6, catalog, &traces);
  REQUIRE(rows.size() == 6);
  REQUIRE(traces.size() == 6);

  std::set<std::string> ids;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ids.insert(rows[i].setting_id);
    if (i > 0) {
      bool ordered = rows[i - 1].completion_seconds < rows[i].completion_seconds ||
                     (rows[i - 1].completion_seconds == rows[i].completion_seconds &&
                      rows[i - 1].setting_id <= rows[i].setting_id);
      CHECK(ordered);
    }
    if (rows[i].status == "converged") {
      CHECK(std::isfinite(rows[i].completion_seconds));
      CHECK(rows[i].mean_iteration_seconds ==
            doctest::Approx(rows[i].completion_seconds /
                            static_cast<double>(rows[i].iterations)));
    } else {
      CHECK(std::isinf(rows[i].completion_seconds));
    }
  }
  CHECK(ids.size() == 6);  // no setting sampled twice
  for (const FixedTrace& tr : traces) {
    CHECK(!tr.points.empty());
    CHECK(ids.count(tr.setting_id) == 1);
  }

  SettingsCatalog catalog2;
  std::vector<SweepRow> again = run_sweep(cfg, 6, catalog2, nullptr);
  REQUIRE(again.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(again[i].setting_id == rows[i].setting_id);
    CHECK(again[i].completion_seconds == rows[i].completion_seconds);
  }

  CHECK_THROWS_AS(run_sweep(cfg, 0, catalog), config_error);
  CHECK_THROWS_AS(run_sweep(cfg, 9, catalog), config_error);  // only 4*2 settings exist
}

TEST_CASE("sweep tables survive a CSV round trip byte for byte") {
  std::vector<SweepRow> rows;
  rows.push_back({"X0", "converged", 12.25, 300, 12.25 / 300.0});
  rows.push_back({"X1", "iteration_limit", std::numeric_limits<double>::infinity(), 400, 0.1});
  rows.push_back({"X2", "converged", 1.0 / 3.0, 7, 1.0 / 21.0});

  fs::path dir = fresh_dir("sweepcsv");
  write_sweep_csv(rows, dir / "sweep.csv");
  std::vector<SweepRow> back = read_sweep_csv(dir / "sweep.csv");
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].setting_id == rows[i].setting_id);
    CHECK(back[i].status == rows[i].status);
    bool same_completion = back[i].completion_seconds == rows[i].completion_seconds ||
                           (std::isinf(back[i].completion_seconds) &&
                            std::isinf(rows[i].completion_seconds));
    CHECK(same_completion);
    CHECK(back[i].iterations == rows[i].iterations);
    CHECK(back[i].mean_iteration_seconds == rows[i].mean_iteration_seconds);
  }
  write_sweep_csv(back, dir / "sweep2.csv");
  CHECK(slurp(dir / "sweep.csv") == slurp(dir / "sweep2.csv"));
  CHECK_THROWS_AS(read_sweep_csv(dir / "missing.csv"), validation_error);
}

TEST_CASE("report files derive curves, markers, and a sweep-aware summary") {
  ExperimentConfig cfg = parse_experiment_config(base_config());
  fs::path dir = fresh_dir("reportfiles");
  RunArtifacts run = run_job_to_dir(cfg, std::nullopt, dir);

  SettingsCatalog catalog;
  std::vector<SweepRow> rows = run_sweep(cfg, 6, catalog, nullptr);
  write_sweep_csv(rows, dir / "sweep.csv");
  write_report_files(dir, dir / "sweep.csv");

  // Loss curves: one line per record, clock strictly increasing up to the
  // report's completion time.
  std::ifstream curves(dir / "loss_curves.csv");
  std::string line;
  REQUIRE(std::getline(curves, line));
  CHECK(line == "j,clock_seconds,loss,setting_id");
  double prev_clock = 0.0, clock = 0.0;
  std::size_t data_lines = 0;
  while (std::getline(curves, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string jf, cf;
    std::getline(ls, jf, ',');
    std::getline(ls, cf, ',');
    clock = std::stod(cf);
    CHECK(clock > prev_clock);
    prev_clock = clock;
    ++data_lines;
  }
  CHECK(data_lines == static_cast<std::size_t>(run.report.iterations));
  CHECK(clock == doctest::Approx(run.report.completion_seconds).epsilon(1e-9));

  std::ifstream marks(dir / "reconfigs.csv");
  REQUIRE(std::getline(marks, line));
  CHECK(line == "j,technique,cost,actions,from,to");
  std::size_t mark_lines = 0;
  while (std::getline(marks, line))
    if (!line.empty()) ++mark_lines;
  CHECK(mark_lines == static_cast<std::size_t>(run.report.reconfig_count));

  nlohmann::json summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(summary.at("mode") == "tuned");
  CHECK(summary.at("status") == run.report.status);
  CHECK(summary.at("completion_seconds").get<double>() == run.report.completion_seconds);
  REQUIRE(summary.contains("sweep"));
  CHECK(summary.at("sweep").at("settings").get<std::size_t>() == rows.size());
  double best = summary.at("sweep").at("best_seconds").get<double>();
  double worst = summary.at("sweep").at("worst_seconds").get<double>();
  CHECK(best <= worst);
  if (run.report.status == "converged") {
    CHECK(summary.at("speedup_vs_best").get<double>() ==
          doctest::Approx(best / run.report.completion_seconds));
    CHECK(summary.at("speedup_vs_worst").get<double>() ==
          doctest::Approx(worst / run.report.completion_seconds));
  }

  // Without a sweep table the summary simply omits the comparison block.
  fs::path dir2 = fresh_dir("reportfiles2");
  run_job_to_dir(cfg, SystemSetting{{"servers", std::int64_t{2}}, {"threads", std::int64_t{1}}},
                 dir2);
  write_report_files(dir2, std::nullopt);
  nlohmann::json plain = nlohmann::json::parse(slurp(dir2 / "summary.json"));
  CHECK(!plain.contains("sweep"));
  std::ifstream marks2(dir2 / "reconfigs.csv");
  REQUIRE(std::getline(marks2, line));
  CHECK(!std::getline(marks2, line));  // header only: a fixed run never reconfigures

  CHECK_THROWS_AS(write_report_files(fresh_dir("empty_run"), std::nullopt), validation_error);
}
