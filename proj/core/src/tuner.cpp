// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#include "pstune/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "pstune/errors.hpp"
#include "pstune/rng.hpp"

namespace pstune {

namespace {

std::string status_name(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "converged";
    case RunStatus::Diverged: return "diverged";
    case RunStatus::Running: return "iteration_limit";
  }
  return "unknown";
}

void fill_report_tail(JobReport& report, const Simulation& sim, const MetricsRepository& repo,
                      RunStatus status) {
  report.status = status_name(status);
  report.completion_seconds = sim.clock_seconds();
  report.iterations = sim.next_iteration();
  report.final_loss = sim.last_loss();
  report.final_setting_id = sim.current_setting_id();
  report.reconfig_count = static_cast<int>(repo.events().size());
  report.reconfig_seconds = 0.0;
  for (const ReconfigEvent& ev : repo.events()) report.reconfig_seconds += ev.cost;
  report.blocked_seconds = sim.cluster().total_blocked_seconds();
}

/* A setting that differs from `from` only in one non-split knob, for probing
 * the stateless-switch cost. */
std::optional<SystemSetting> switch_probe_target(const SystemSetting& from, const KnobSpace& space,
                                                 const std::string& split_knob) {
  for (const KnobSpec& k : space.knobs()) {
    if (k.name == split_knob) continue;
    SystemSetting to = from;
    const KnobValue& cur = from.at(k.name);
    switch (k.kind) {
      case KnobKind::IntegerRange: {
        std::int64_t v = std::get<std::int64_t>(cur);
        to[k.name] = v < static_cast<std::int64_t>(k.hi) ? v + 1 : v - 1;
        break;
      }
      case KnobKind::RealRange: {
        double v = std::get<double>(cur);
        double mid = 0.5 * (k.lo + k.hi);
        to[k.name] = v == mid ? k.lo : mid;
        break;
      }
      case KnobKind::Ordinal:
      case KnobKind::Nominal: {
        const std::string& v = std::get<std::string>(cur);
        to[k.name] = k.levels[v == k.levels[0] ? 1 : 0];
        break;
      }
      case KnobKind::Boolean:
        to[k.name] = !std::get<bool>(cur);
        break;
    }
    if (to != from) return to;
  }
  return std::nullopt;
}

std::optional<SystemSetting> split_probe_target(const SystemSetting& from, const KnobSpace& space,
                                                const std::string& split_knob) {
  const KnobSpec* k = space.find(split_knob);
  if (k == nullptr) return std::nullopt;
  std::int64_t v = std::get<std::int64_t>(from.at(split_knob));
  SystemSetting to = from;
  to[split_knob] = v < static_cast<std::int64_t>(k->hi) ? v + 1 : v - 1;
  if (to == from) return std::nullopt;
  return to;
}

}  // namespace

TuningManager::TuningManager(const Workload& workload, const KnobSpace& space,
                             const SimulatorConfig& sim_cfg, const TunerConfig& tuner_cfg)
    : workload_(&workload), space_(&space), sim_cfg_(sim_cfg), cfg_(tuner_cfg) {
  if (!(cfg_.epsilon > 0.0)) throw config_error("tuner needs a positive loss target epsilon");
  if (cfg_.b < 1) throw config_error("tuner needs at least one initialization setting");
  if (cfg_.candidate_pool < 1) throw config_error("tuner needs a positive candidate pool");
  if (cfg_.max_iterations < 1) throw config_error("tuner needs a positive iteration budget");
}

int TuningManager::iterations_per_segment(const SystemSetting& s) const {
  if (cfg_.a_override > 0) return cfg_.a_override;
  PlanContext ctx{space_, sim_cfg_.node_split_knob, sim_cfg_.node_budget, workload_->size()};
  int a = 3 * workers_of(s, ctx);
  return std::clamp(a, 3, 50);
}

JobReport TuningManager::run_fixed(const SystemSetting& setting, MetricsRepository& repo,
                                   SettingsCatalog& catalog) {
  Simulation sim(*workload_, *space_, sim_cfg_, setting, catalog, repo);
  JobReport report;
  report.mode = "fixed";
  report.epsilon = cfg_.epsilon;
  report.initial_loss = sim.initial_loss();
  report.initial_setting_id = sim.current_setting_id();
  RunStatus status = sim.run_iterations(cfg_.max_iterations, cfg_.epsilon);
  fill_report_tail(report, sim, repo, status);
  return report;
}

void TuningManager::run_probes(Simulation& sim, JobReport& report) {
  const std::string split = sim_cfg_.node_split_knob;
  bool need_structural = !sim.measured_costs().has(kActionRelocation) ||
                         !sim.measured_costs().has(kActionRepartition);
  bool need_switch = !sim.measured_costs().has(kActionSwitch);

  auto probe_pair = [&](const SystemSetting& to) {
    SystemSetting back = sim.current_setting();
    std::string from_id = sim.current_setting_id();
    sim.reconfigure(to, true);
    report.timeline.push_back(
        {sim.next_iteration(), from_id, sim.current_setting_id(), "probe", 0.0, 0.0});
    sim.reconfigure(back, true);
  };

  if (need_structural) {
    if (auto to = split_probe_target(sim.current_setting(), *space_, split)) probe_pair(*to);
  }
  if (need_switch) {
    if (auto to = switch_probe_target(sim.current_setting(), *space_, split)) probe_pair(*to);
  }
}

JobReport TuningManager::run_tuned(const SystemSetting& start, MetricsRepository& repo,
                                   SettingsCatalog& catalog) {
  Simulation sim(*workload_, *space_, sim_cfg_, start, catalog, repo);
  JobReport report;
  report.mode = "tuned";
  report.epsilon = cfg_.epsilon;
  report.initial_loss = sim.initial_loss();
  report.initial_setting_id = sim.current_setting_id();
  last_model_.reset();
  last_triples_.clear();

  double l_init = sim.initial_loss();
  RunStatus status = RunStatus::Running;

  auto budget_left = [&]() { return cfg_.max_iterations - sim.next_iteration(); };
  auto run_block = [&](int a) {
    std::int64_t n = std::min<std::int64_t>(a, budget_left());
    return sim.run_iterations(n, cfg_.epsilon);
  };

  /* Initialization: the starting setting plus b sampled ones, a iterations
   * each, every switch through the live path so its cost gets measured. */
  status = run_block(iterations_per_segment(start));
  std::vector<SystemSetting> inits =
      cfg_.orthogonal_init
          ? orthogonal_sample(*space_, static_cast<std::size_t>(cfg_.b), cfg_.seed)
          : random_sample(*space_, static_cast<std::size_t>(cfg_.b), cfg_.seed);
  for (const SystemSetting& s : inits) {
    if (status != RunStatus::Running || budget_left() <= 0) break;
    if (s == sim.current_setting()) continue;
    std::string from_id = sim.current_setting_id();
    sim.reconfigure(s, true);
    report.timeline.push_back(
        {sim.next_iteration(), from_id, sim.current_setting_id(), "init", 0.0, 0.0});
    status = run_block(iterations_per_segment(s));
  }
  if (status == RunStatus::Running) run_probes(sim, report);

  /* Online loop: run a block under the current setting, then keep or move. */
  double best_remaining = std::numeric_limits<double>::infinity();
  std::uint64_t decision = 0;
  while (status == RunStatus::Running && budget_left() > 0) {
    status = run_block(iterations_per_segment(sim.current_setting()));
    if (status != RunStatus::Running || budget_left() <= 0) break;
    ++decision;

    ProgressContext pctx{cfg_.d_policy, cfg_.epsilon, l_init, cfg_.convention};
    TripleBuildResult built;
    try {
      built = build_training_triples(repo, pctx);
    } catch (const error& e) {
      report.warnings.push_back("triple build failed, keeping setting: " + std::string(e.what()));
      continue;
    }
    for (const std::string& w : built.warnings)
      if (std::find(report.warnings.begin(), report.warnings.end(), w) == report.warnings.end())
        report.warnings.push_back(w);
    if (built.triples.size() < 2) {
      report.warnings.push_back("decision " + std::to_string(decision) +
                                ": not enough usable segments, keeping setting");
      continue;
    }

    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    xs.reserve(built.triples.size());
    for (const TrainingTriple& t : built.triples) {
      xs.push_back(encode_setting(catalog.setting(t.setting_id), *space_, t.switch_loss, l_init)
                       .coords);
      ys.push_back(t.y_seconds);
    }
    std::optional<GpModel> model;
    try {
      model = GpModel::fit(xs, ys);
    } catch (const error& e) {
      report.warnings.push_back("surrogate fit failed, keeping setting: " +
                                std::string(e.what()));
      continue;
    }
    last_model_ = *model;
    last_triples_ = built.triples;

    double current_loss = sim.last_loss();
    std::vector<SystemSetting> executed;
    {
      std::set<std::string> seen;
      for (const TrainingTriple& t : built.triples)
        if (seen.insert(t.setting_id).second) executed.push_back(catalog.setting(t.setting_id));
    }
    double incumbent = std::numeric_limits<double>::infinity();
    for (const SystemSetting& s : executed) {
      EncodedPoint p = encode_setting(s, *space_, current_loss, l_init);
      incumbent = std::min(incumbent, model->predict(p.coords).mean);
    }
    /* Remaining time cannot be negative, and the incumbent estimate never
     * worsens across decisions so keep/move comparisons stay stable. */
    incumbent = std::max(incumbent, 0.0);
    best_remaining = std::min(best_remaining, incumbent);

    std::vector<SystemSetting> candidates = orthogonal_sample(
        *space_, static_cast<std::size_t>(cfg_.candidate_pool), mix_seed(cfg_.seed, decision));
    for (const SystemSetting& s : executed)
      if (std::find(candidates.begin(), candidates.end(), s) == candidates.end())
        candidates.push_back(s);

    AcquisitionDecision proposal =
        propose_next(*model, *space_, candidates, current_loss, l_init, best_remaining);

    TimelineEntry entry;
    entry.j = sim.next_iteration();
    entry.from_id = sim.current_setting_id();
    entry.ei = proposal.ei;
    if (proposal.setting == sim.current_setting()) {
      entry.to_id = entry.from_id;
      entry.reason = "keep";
      report.timeline.push_back(entry);
      continue;
    }
    ReconfigPlan plan = sim.plan_for(proposal.setting);
    ReconfigCostEstimate cost =
        estimate_reconfig_cost(sim.measured_costs(), plan, sim_cfg_.reconfig_costs,
                               static_cast<std::uint32_t>(workload_->dimension()),
                               workload_->size());
    entry.cost_estimate = cost.seconds;
    if (cost.used_formula_fallback)
      report.warnings.push_back("decision " + std::to_string(decision) +
                                ": unmeasured action type priced by formula");
    if (proposal.ei - cost.seconds > 0.0) {
      sim.reconfigure(proposal.setting, true);
      entry.to_id = sim.current_setting_id();
      entry.reason = "reconfigure";
    } else {
      entry.to_id = entry.from_id;
      entry.reason = "keep";
    }
    report.timeline.push_back(entry);
  }

  sim.cluster_mutable().finalize_relocation();  // nothing may stay in flight at job end
  fill_report_tail(report, sim, repo, status);
  return report;
}

RankEvalResult rank_evaluation(const std::vector<FixedTrace>& traces, const RankEvalOptions& opt,
                               RemainingEstimator estimator) {
  if (traces.size() < 2) throw validation_error("rank evaluation needs at least two traces");
  if (opt.a < 2) throw validation_error("rank evaluation needs at least two iterations per moment");
  for (const FixedTrace& t : traces)
    if (t.points.empty()) throw validation_error("rank evaluation traces must be non-empty");

  if (!estimator) {
    DPolicy policy = opt.policy;
    estimator = [policy](const LossSegment& seg, const FixedTrace& trace, double eps) {
      double cap = trace.initial_loss;
      for (const LossPoint& p : trace.points) cap = std::max(cap, p.l);
      return estimate_remaining_time(seg, eps, policy, cap).y_seconds;
    };
  }

  std::size_t a = static_cast<std::size_t>(opt.a);
  std::size_t common = std::numeric_limits<std::size_t>::max();
  for (const FixedTrace& t : traces) common = std::min(common, t.points.size() / a);
  if (common == 0)
    throw insufficient_data_error("every trace needs at least one full moment of iterations");

  RankEvalResult res;
  double rank_sum = 0.0;
  for (std::size_t s = 0; s < common; ++s) {
    std::vector<double> estimate(traces.size(), std::numeric_limits<double>::infinity());
    std::vector<double> oracle(traces.size(), 0.0);
    for (std::size_t i = 0; i < traces.size(); ++i) {
      const FixedTrace& tr = traces[i];
      LossSegment seg;
      seg.setting_id = tr.setting_id;
      if (s == 0) {
        seg.j0 = tr.points.front().j - 1;
        seg.switch_loss = tr.initial_loss;
      } else {
        const LossPoint& prev = tr.points[s * a - 1];
        seg.j0 = prev.j;
        seg.switch_loss = prev.l;
      }
      seg.points.assign(tr.points.begin() + static_cast<std::ptrdiff_t>(s * a),
                        tr.points.begin() + static_cast<std::ptrdiff_t>((s + 1) * a));
      try {
        estimate[i] = estimator(seg, tr, opt.epsilon);
      } catch (const error&) {
        /* unusable segment: never the chosen trace at this moment */
      }
      double elapsed = 0.0;
      for (std::size_t p = 0; p < (s + 1) * a; ++p) elapsed += tr.points[p].t;
      oracle[i] = tr.completion_seconds - elapsed;
    }
    std::size_t choice = 0;
    bool usable = false;
    for (std::size_t i = 0; i < traces.size(); ++i)
      if (std::isfinite(estimate[i]) && (!usable || estimate[i] < estimate[choice])) {
        choice = i;
        usable = true;
      }
    if (!usable) {
      res.skipped += 1;
      continue;
    }
    std::size_t rank = 1;
    for (std::size_t i = 0; i < traces.size(); ++i)
      if (oracle[i] < oracle[choice]) rank += 1;
    rank_sum += static_cast<double>(rank);
    res.moments += 1;
  }
  if (res.moments == 0) throw insufficient_data_error("no usable decision moments");
  res.mean_rank = rank_sum / static_cast<double>(res.moments);
  return res;
}

}  // namespace pstune
