// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: run one tuned or fixed training job, sweep many
// fixed settings for completion-time statistics, estimate remaining work from
// a bare loss trace, or derive report files from a finished run directory.
//
// Exit codes: 0 converged, 1 configuration or input error, 2 diverged or
// stopped at the iteration limit, 3 trace unfittable.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pstune/errors.hpp"
#include "pstune/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kNotConverged = 2;
constexpr int kUnfittable = 3;

int run_command(const std::string& config_path, const std::string& fixed_path) {
  pstune::ExperimentConfig cfg = pstune::load_experiment_config(config_path);
  std::optional<pstune::SystemSetting> fixed;
  if (!fixed_path.empty()) {
    std::ifstream in(fixed_path);
    if (!in) throw pstune::config_error("cannot open setting file: " + fixed_path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded())
      throw pstune::config_error("setting file is not valid JSON: " + fixed_path);
    fixed = pstune::setting_from_json(j, cfg.space);
  }
  pstune::RunArtifacts out = pstune::run_job_to_dir(cfg, fixed, cfg.output_dir);
  std::cout << pstune::report_to_json(out.report).dump(2) << "\n";
  if (out.report.status == "converged") return kOk;
  std::cerr << "job ended with status '" << out.report.status << "'\n";
  return kNotConverged;
}

int sweep_command(const std::string& config_path, int n_settings) {
  pstune::ExperimentConfig cfg = pstune::load_experiment_config(config_path);
  pstune::SettingsCatalog catalog;
  std::vector<pstune::SweepRow> rows = pstune::run_sweep(cfg, n_settings, catalog);
  std::filesystem::create_directories(cfg.output_dir);
  std::filesystem::path csv = cfg.output_dir / "sweep.csv";
  pstune::write_sweep_csv(rows, csv);
  std::ofstream settings(cfg.output_dir / "sweep_settings.json", std::ios::binary);
  settings << pstune::catalog_to_json(catalog).dump(2) << "\n";
  std::cout << csv.string() << "\n";
  return kOk;
}

int estimate_command(const std::string& trace_path, double epsilon, const std::string& policy_name,
                     double d_value) {
  std::ifstream in(trace_path);
  if (!in) throw pstune::config_error("cannot open trace file: " + trace_path);

  pstune::LossSegment segment;
  segment.setting_id = "trace";
  std::string line;
  bool have_switch = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line.find_first_not_of("0123456789+-. \t,eE") != std::string::npos)
      continue;  // header row
    std::istringstream ls(line);
    std::string cell;
    pstune::LossPoint p;
    try {
      if (!std::getline(ls, cell, ',')) throw std::invalid_argument("missing j");
      p.j = std::stoll(cell);
      if (!std::getline(ls, cell, ',')) throw std::invalid_argument("missing t");
      p.t = std::stod(cell);
      if (!std::getline(ls, cell, ',')) throw std::invalid_argument("missing l");
      p.l = std::stod(cell);
    } catch (const std::exception&) {
      throw pstune::config_error("trace line " + std::to_string(line_no) +
                                 " is not a j,t,l row: " + line);
    }
    if (!have_switch) {
      /* The first row is the hand-off point the segment starts from. */
      segment.j0 = p.j;
      segment.switch_loss = p.l;
      have_switch = true;
    } else {
      segment.points.push_back(p);
    }
  }
  if (!have_switch) throw pstune::config_error("trace file has no data rows");

  pstune::DPolicy policy;
  policy.kind = pstune::d_policy_from_name(policy_name);
  policy.d_value = d_value;

  pstune::RemainingEstimate est;
  pstune::ConvergenceFit fit;
  try {
    double d = pstune::select_d(policy, segment);
    fit = pstune::fit_h(segment.points, d, segment.j0);
    est = pstune::estimate_remaining_time(segment, epsilon, policy);
  } catch (const pstune::error& e) {
    std::cerr << "trace is unfittable: " << e.what() << "\n";
    return kUnfittable;
  }

  nlohmann::ordered_json out;
  out["fit"] = {{"h", fit.h},
                {"d", fit.d},
                {"j0", fit.j0},
                {"n_points", fit.n_points},
                {"residual_rms", fit.residual_rms}};
  out["estimate"] = {{"epsilon", epsilon},
                     {"remaining_iterations", est.r},
                     {"mean_iteration_seconds", est.t_bar},
                     {"remaining_seconds", est.y_seconds},
                     {"used_fallback", est.used_fallback}};
  std::cout << out.dump(2) << "\n";
  return kOk;
}

int report_command(const std::string& dir, const std::string& sweep_csv) {
  std::optional<std::filesystem::path> sweep;
  if (!sweep_csv.empty()) sweep = sweep_csv;
  pstune::write_report_files(dir, sweep);
  std::cout << (std::filesystem::path(dir) / "summary.json").string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"self-tuning parameter-server trainer"};
  app.require_subcommand(1);

  std::string config_path;
  std::string fixed_path;
  CLI::App* run = app.add_subcommand("run", "run one tuned or fixed job");
  run->add_option("--config", config_path, "experiment configuration JSON")->required();
  run->add_option("--fixed", fixed_path, "pin the job to the setting in this JSON file");

  std::string sweep_config;
  int n_settings = 0;
  CLI::App* sweep = app.add_subcommand("sweep", "run many fixed-setting jobs");
  sweep->add_option("--config", sweep_config, "experiment configuration JSON")->required();
  sweep->add_option("-n", n_settings, "number of distinct settings")->required();

  std::string trace_path;
  std::string policy_name = "bounded_supremum";
  double epsilon = 0.0;
  double d_value = 0.0;
  CLI::App* estimate = app.add_subcommand("estimate", "fit a loss trace and project time-to-target");
  estimate->add_option("--trace", trace_path, "CSV of j,t,l rows; the first row is the hand-off point")
      ->required();
  estimate->add_option("--epsilon", epsilon, "target loss")->required();
  estimate->add_option("--policy", policy_name, "loss-ceiling policy name");
  estimate->add_option("--d", d_value, "ceiling for the stateless_constant policy");

  std::string report_dir;
  std::string report_sweep;
  CLI::App* report = app.add_subcommand("report", "derive curves and a summary from a run directory");
  report->add_option("--dir", report_dir, "run directory written by `run`")->required();
  report->add_option("--sweep", report_sweep, "sweep CSV for tuned-versus-fixed comparisons");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return run_command(config_path, fixed_path);
    if (*sweep) return sweep_command(sweep_config, n_settings);
    if (*estimate) return estimate_command(trace_path, epsilon, policy_name, d_value);
    if (*report) return report_command(report_dir, report_sweep);
  } catch (const pstune::divergence_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNotConverged;
  } catch (const pstune::fit_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUnfittable;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kConfigError;
}
