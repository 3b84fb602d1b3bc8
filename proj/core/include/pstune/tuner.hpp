// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pstune/acquisition.hpp"
#include "pstune/simulator.hpp"
#include "pstune/triples.hpp"

namespace pstune {

struct TunerConfig {
  int a_override = 0;  // 0: three iterations per worker, clamped to [3, 50]
  int b = 10;          // initialization settings tried beyond the starting one
  double epsilon = 0.0;
  int candidate_pool = 200;
  DPolicy d_policy;
  SwitchLossConvention convention = SwitchLossConvention::PrevIteration;
  std::uint64_t seed = 0;
  bool orthogonal_init = true;  // stratified initialization sample (independent otherwise)
  std::int64_t max_iterations = 100000;
};

struct TimelineEntry {
  std::int64_t j = 0;  // iteration the decision preceded
  std::string from_id;
  std::string to_id;      // equals from_id for keep decisions
  std::string reason;     // "init", "probe", "keep", "reconfigure"
  double ei = 0.0;
  double cost_estimate = 0.0;
};

struct JobReport {
  std::string mode;    // "tuned" or "fixed"
  std::string status;  // "converged", "diverged", "iteration_limit"
  double completion_seconds = 0.0;
  std::int64_t iterations = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double epsilon = 0.0;
  int reconfig_count = 0;
  double reconfig_seconds = 0.0;
  double blocked_seconds = 0.0;
  std::string initial_setting_id;
  std::string final_setting_id;
  std::vector<TimelineEntry> timeline;
  std::vector<std::string> warnings;
};

/* Runs whole training jobs against the simulator, either pinned to one
 * setting or self-tuning: an initialization pass over b sampled settings
 * (a iterations each), then a surrogate-guided loop that every a iterations
 * either keeps the current setting or pays for a live reconfiguration when
 * the expected improvement clears the estimated switching cost. */
class TuningManager {
 public:
  TuningManager(const Workload& workload, const KnobSpace& space, const SimulatorConfig& sim_cfg,
                const TunerConfig& tuner_cfg);

  JobReport run_fixed(const SystemSetting& setting, MetricsRepository& repo,
                      SettingsCatalog& catalog);
  JobReport run_tuned(const SystemSetting& start, MetricsRepository& repo,
                      SettingsCatalog& catalog);

  /* Surrogate state after the last run_tuned decision, for artifact dumps. */
  const std::optional<GpModel>& last_model() const { return last_model_; }
  const std::vector<TrainingTriple>& last_triples() const { return last_triples_; }

 private:
  int iterations_per_segment(const SystemSetting& s) const;
  void run_probes(Simulation& sim, JobReport& report);

  const Workload* workload_;
  const KnobSpace* space_;
  SimulatorConfig sim_cfg_;
  TunerConfig cfg_;
  std::optional<GpModel> last_model_;
  std::vector<TrainingTriple> last_triples_;
};

/* Fixed-setting run captured for offline evaluation. */
struct FixedTrace {
  std::string setting_id;
  double initial_loss = 0.0;
  double completion_seconds = 0.0;  // until the loss target (or the run's end)
  std::vector<LossPoint> points;
};

struct RankEvalOptions {
  int a = 5;  // moment length in iterations
  double epsilon = 0.0;
  DPolicy policy;
};

/* Estimated remaining seconds for one segment of one trace; replaceable so
 * the harness itself can be validated against perfect and inverted oracles. */
using RemainingEstimator =
    std::function<double(const LossSegment& segment, const FixedTrace& trace, double epsilon)>;

struct RankEvalResult {
  double mean_rank = 0.0;   // 1-based oracle rank of the estimator's choice
  std::size_t moments = 0;  // decision moments evaluated
  std::size_t skipped = 0;  // moments with no usable estimate
};

/* Replays the traces side by side: at each moment (every a iterations) the
 * estimator picks the trace with the least estimated remaining time, and the
 * pick is scored by its rank under the true remaining times. */
RankEvalResult rank_evaluation(const std::vector<FixedTrace>& traces, const RankEvalOptions& opt,
                               RemainingEstimator estimator = {});

}  // namespace pstune
