// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pstune/tuner.hpp"

namespace pstune {

/* Everything one experiment needs, parsed from a single versioned JSON file. */
struct ExperimentConfig {
  WorkloadSpec workload;
  KnobSpace space;
  SimulatorConfig simulator;
  TunerConfig tuner;
  bool epsilon_relative = false;  // epsilon given as a fraction of the initial loss
  SystemSetting default_setting;
  std::filesystem::path output_dir = "out";
  std::uint64_t sweep_seed = 0;
};

ExperimentConfig parse_experiment_config(const nlohmann::json& j);       // throws config_error
ExperimentConfig load_experiment_config(const std::filesystem::path& p); // throws config_error

KnobSpace knob_space_from_json(const nlohmann::json& j);
SystemSetting setting_from_json(const nlohmann::json& j, const KnobSpace& space);
nlohmann::ordered_json setting_to_json(const SystemSetting& s);

nlohmann::ordered_json report_to_json(const JobReport& r);
JobReport report_from_json(const nlohmann::json& j);

nlohmann::ordered_json catalog_to_json(const SettingsCatalog& catalog);
SettingsCatalog catalog_from_json(const nlohmann::ordered_json& j, const KnobSpace& space);

/* Absolute loss target for this config and workload. */
double resolve_epsilon(const ExperimentConfig& cfg, const Workload& workload);

struct RunArtifacts {
  JobReport report;
  std::filesystem::path dir;
};

/* Runs one job (tuned unless `fixed` is given) and writes repo.jsonl,
 * settings.json, report.json and, for tuned runs, surrogate.json into dir.
 * Existing files are overwritten; reruns of the same config produce
 * byte-identical artifacts. */
RunArtifacts run_job_to_dir(const ExperimentConfig& cfg,
                            const std::optional<SystemSetting>& fixed,
                            const std::filesystem::path& dir);

struct SweepRow {
  std::string setting_id;
  std::string status;
  double completion_seconds = 0.0;
  std::int64_t iterations = 0;
  double mean_iteration_seconds = 0.0;
};

/* n_settings independent fixed-setting runs over a seeded sample of the
 * space, sorted by completion time (unfinished runs last). Also usable as a
 * completion-time oracle for rank evaluation. */
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, int n_settings,
                                SettingsCatalog& catalog,
                                std::vector<FixedTrace>* traces = nullptr);

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& file);
std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& file);

/* Derives loss-versus-iteration and loss-versus-clock curves plus a summary
 * from a run directory; when a sweep table is given the summary adds
 * tuned-versus-fixed comparisons. */
void write_report_files(const std::filesystem::path& run_dir,
                        const std::optional<std::filesystem::path>& sweep_csv);

}  // namespace pstune
