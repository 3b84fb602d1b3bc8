// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#include "pstune/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "pstune/errors.hpp"
#include "pstune/rng.hpp"

namespace pstune {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const nlohmann::json& need(const nlohmann::json& j, const char* key, const char* where) {
  if (!j.is_object() || !j.contains(key))
    throw config_error(std::string(where) + " is missing required field '" + key + "'");
  return j.at(key);
}

template <typename T>
T field_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("field '") + key + "' has the wrong type: " + e.what());
  }
}

template <typename T>
T field(const nlohmann::json& j, const char* key, const char* where) {
  need(j, key, where);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("field '") + key + "' has the wrong type: " + e.what());
  }
}

}  // namespace

KnobSpace knob_space_from_json(const nlohmann::json& j) {
  const nlohmann::json& knobs = need(j, "knobs", "space");
  if (!knobs.is_array() || knobs.empty())
    throw config_error("space.knobs must be a non-empty array");
  std::vector<KnobSpec> specs;
  for (const nlohmann::json& kj : knobs) {
    KnobSpec k;
    k.name = field<std::string>(kj, "name", "knob");
    std::string kind = field<std::string>(kj, "kind", "knob");
    if (kind == "int") {
      k.kind = KnobKind::IntegerRange;
    } else if (kind == "real") {
      k.kind = KnobKind::RealRange;
    } else if (kind == "ordinal") {
      k.kind = KnobKind::Ordinal;
    } else if (kind == "nominal") {
      k.kind = KnobKind::Nominal;
    } else if (kind == "bool") {
      k.kind = KnobKind::Boolean;
    } else {
      throw config_error("knob '" + k.name + "' has unknown kind '" + kind + "'");
    }
    if (k.kind == KnobKind::IntegerRange || k.kind == KnobKind::RealRange) {
      k.lo = field<double>(kj, "lo", "knob");
      k.hi = field<double>(kj, "hi", "knob");
    }
    if (k.kind == KnobKind::Ordinal || k.kind == KnobKind::Nominal)
      k.levels = field<std::vector<std::string>>(kj, "levels", "knob");
    specs.push_back(std::move(k));
  }
  try {
    return KnobSpace(std::move(specs));
  } catch (const validation_error& e) {
    throw config_error(std::string("invalid knob space: ") + e.what());
  }
}

SystemSetting setting_from_json(const nlohmann::json& j, const KnobSpace& space) {
  if (!j.is_object()) throw config_error("a setting must be a JSON object");
  SystemSetting s;
  for (const auto& [name, value] : j.items()) {
    const KnobSpec* k = space.find(name);
    if (k == nullptr) throw config_error("setting has unknown knob '" + name + "'");
    try {
      switch (k->kind) {
        case KnobKind::IntegerRange:
          s[name] = value.get<std::int64_t>();
          break;
        case KnobKind::RealRange:
          s[name] = value.get<double>();
          break;
        case KnobKind::Ordinal:
        case KnobKind::Nominal:
          s[name] = value.get<std::string>();
          break;
        case KnobKind::Boolean:
          s[name] = value.get<bool>();
          break;
      }
    } catch (const nlohmann::json::exception&) {
      throw config_error("knob '" + name + "' has a value of the wrong type");
    }
  }
  try {
    validate_setting(s, space);
  } catch (const validation_error& e) {
    throw config_error(std::string("invalid setting: ") + e.what());
  }
  return s;
}

nlohmann::ordered_json setting_to_json(const SystemSetting& s) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [name, value] : s) {
    if (const auto* b = std::get_if<bool>(&value)) {
      j[name] = *b;
    } else if (const auto* i = std::get_if<std::int64_t>(&value)) {
      j[name] = *i;
    } else if (const auto* d = std::get_if<double>(&value)) {
      j[name] = *d;
    } else {
      j[name] = std::get<std::string>(value);
    }
  }
  return j;
}

ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  if (!j.is_object()) throw config_error("configuration must be a JSON object");
  int version = field<int>(j, "version", "configuration");
  if (version != 1) throw config_error("unsupported configuration version");

  ExperimentConfig cfg;
  const nlohmann::json& wj = need(j, "workload", "configuration");
  cfg.workload.kind = workload_kind_from_name(field<std::string>(wj, "kind", "workload"));
  cfg.workload.dimension = field_or<int>(wj, "dimension", cfg.workload.dimension);
  cfg.workload.n_examples = field_or<int>(wj, "n_examples", cfg.workload.n_examples);
  cfg.workload.l2_strength = field_or<double>(wj, "l2_strength", cfg.workload.l2_strength);
  cfg.workload.label_noise = field_or<double>(wj, "label_noise", cfg.workload.label_noise);
  cfg.workload.eigen_min = field_or<double>(wj, "eigen_min", cfg.workload.eigen_min);
  cfg.workload.eigen_max = field_or<double>(wj, "eigen_max", cfg.workload.eigen_max);
  cfg.workload.seed = field_or<std::uint64_t>(wj, "seed", cfg.workload.seed);

  cfg.space = knob_space_from_json(need(j, "space", "configuration"));

  const nlohmann::json sj = j.value("simulator", nlohmann::json::object());
  cfg.simulator.node_budget = field_or<int>(sj, "node_budget", cfg.simulator.node_budget);
  cfg.simulator.node_split_knob =
      field_or<std::string>(sj, "node_split_knob", cfg.simulator.node_split_knob);
  cfg.simulator.threads_knob = field_or<std::string>(sj, "threads_knob", cfg.simulator.threads_knob);
  cfg.simulator.mode_knob = field_or<std::string>(sj, "mode_knob", cfg.simulator.mode_knob);
  cfg.simulator.default_mode =
      sync_mode_from_name(field_or<std::string>(sj, "default_mode", "asp"));
  cfg.simulator.batch_size = field_or<int>(sj, "batch_size", cfg.simulator.batch_size);
  cfg.simulator.learning_rate = field_or<double>(sj, "learning_rate", cfg.simulator.learning_rate);
  cfg.simulator.lr_decay = field_or<double>(sj, "lr_decay", cfg.simulator.lr_decay);
  cfg.simulator.divergence_factor =
      field_or<double>(sj, "divergence_factor", cfg.simulator.divergence_factor);
  cfg.simulator.seed = field_or<std::uint64_t>(sj, "seed", cfg.simulator.seed);
  if (sj.contains("cost")) {
    const nlohmann::json& cj = sj.at("cost");
    CostCoefficients& c = cfg.simulator.cost;
    c.compute = field_or<double>(cj, "compute", c.compute);
    c.thread_friction = field_or<double>(cj, "thread_friction", c.thread_friction);
    c.aggregation = field_or<double>(cj, "aggregation", c.aggregation);
    c.network = field_or<double>(cj, "network", c.network);
    c.per_message = field_or<double>(cj, "per_message", c.per_message);
    c.barrier = field_or<double>(cj, "barrier", c.barrier);
    c.noise = field_or<double>(cj, "noise", c.noise);
    cfg.simulator.cost_seed = field_or<std::uint64_t>(cj, "seed", cfg.simulator.cost_seed);
  }
  if (sj.contains("reconfig_cost")) {
    const nlohmann::json& rj = sj.at("reconfig_cost");
    ReconfigCostSpec& r = cfg.simulator.reconfig_costs;
    r.unit = field_or<double>(rj, "unit", r.unit);
    r.live_floor = field_or<double>(rj, "live_floor", r.live_floor);
    r.live_slope = field_or<double>(rj, "live_slope", r.live_slope);
    r.repartition_unit = field_or<double>(rj, "repartition_unit", r.repartition_unit);
    r.switch_seconds = field_or<double>(rj, "switch_seconds", r.switch_seconds);
    r.quiesce = field_or<double>(rj, "quiesce", r.quiesce);
    r.checkpoint = field_or<double>(rj, "checkpoint", r.checkpoint);
    r.restore = field_or<double>(rj, "restore", r.restore);
  }

  const nlohmann::json& tj = need(j, "tuner", "configuration");
  cfg.tuner.a_override = field_or<int>(tj, "a", 0);
  cfg.tuner.b = field_or<int>(tj, "b", cfg.tuner.b);
  cfg.tuner.epsilon = field<double>(tj, "epsilon", "tuner");
  cfg.epsilon_relative = field_or<bool>(tj, "epsilon_relative", false);
  cfg.tuner.candidate_pool = field_or<int>(tj, "candidate_pool", cfg.tuner.candidate_pool);
  cfg.tuner.d_policy.kind =
      d_policy_from_name(field_or<std::string>(tj, "d_policy", "bounded_supremum"));
  cfg.tuner.d_policy.d_value = field_or<double>(tj, "d_value", 0.0);
  cfg.tuner.convention = switch_loss_convention_from_name(
      field_or<std::string>(tj, "switch_loss_convention", "prev_iteration"));
  cfg.tuner.seed = field_or<std::uint64_t>(tj, "seed", cfg.tuner.seed);
  cfg.tuner.orthogonal_init = field_or<bool>(tj, "orthogonal_init", true);
  cfg.tuner.max_iterations =
      field_or<std::int64_t>(tj, "max_iterations", cfg.tuner.max_iterations);

  cfg.default_setting = setting_from_json(need(j, "default_setting", "configuration"), cfg.space);
  cfg.output_dir = field_or<std::string>(j, "output_dir", "out");
  cfg.sweep_seed = field_or<std::uint64_t>(j, "sweep_seed", 0);

  if (!(cfg.tuner.epsilon > 0.0)) throw config_error("tuner.epsilon must be positive");
  if (cfg.space.find(cfg.simulator.node_split_knob) == nullptr)
    throw config_error("simulator.node_split_knob must name a knob in the space");
  PlanContext ctx{&cfg.space, cfg.simulator.node_split_knob, cfg.simulator.node_budget,
                  cfg.workload.n_examples};
  const KnobSpec* split = cfg.space.find(cfg.simulator.node_split_knob);
  if (split->kind != KnobKind::IntegerRange)
    throw config_error("the node split knob must be an integer range");
  if (cfg.simulator.node_budget - static_cast<int>(split->hi) < 1)
    throw config_error("node budget leaves no workers at the largest server count");
  (void)ctx;
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw config_error("cannot open configuration file: " + p.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw config_error("configuration file is not valid JSON: " + p.string());
  return parse_experiment_config(j);
}

double resolve_epsilon(const ExperimentConfig& cfg, const Workload& workload) {
  if (!cfg.epsilon_relative) return cfg.tuner.epsilon;
  return cfg.tuner.epsilon * workload.empirical_risk(workload.initial_model());
}

nlohmann::ordered_json report_to_json(const JobReport& r) {
  nlohmann::ordered_json j;
  j["mode"] = r.mode;
  j["status"] = r.status;
  j["completion_seconds"] = r.completion_seconds;
  j["iterations"] = r.iterations;
  j["initial_loss"] = r.initial_loss;
  j["final_loss"] = r.final_loss;
  j["epsilon"] = r.epsilon;
  j["reconfig_count"] = r.reconfig_count;
  j["reconfig_seconds"] = r.reconfig_seconds;
  j["blocked_seconds"] = r.blocked_seconds;
  j["initial_setting_id"] = r.initial_setting_id;
  j["final_setting_id"] = r.final_setting_id;
  j["timeline"] = nlohmann::ordered_json::array();
  for (const TimelineEntry& e : r.timeline) {
    nlohmann::ordered_json ej;
    ej["j"] = e.j;
    ej["from"] = e.from_id;
    ej["to"] = e.to_id;
    ej["reason"] = e.reason;
    ej["ei"] = e.ei;
    ej["cost_estimate"] = e.cost_estimate;
    j["timeline"].push_back(std::move(ej));
  }
  j["warnings"] = r.warnings;
  return j;
}

JobReport report_from_json(const nlohmann::json& j) {
  JobReport r;
  r.mode = field<std::string>(j, "mode", "report");
  r.status = field<std::string>(j, "status", "report");
  r.completion_seconds = field<double>(j, "completion_seconds", "report");
  r.iterations = field<std::int64_t>(j, "iterations", "report");
  r.initial_loss = field<double>(j, "initial_loss", "report");
  r.final_loss = field<double>(j, "final_loss", "report");
  r.epsilon = field<double>(j, "epsilon", "report");
  r.reconfig_count = field<int>(j, "reconfig_count", "report");
  r.reconfig_seconds = field<double>(j, "reconfig_seconds", "report");
  r.blocked_seconds = field_or<double>(j, "blocked_seconds", 0.0);
  r.initial_setting_id = field_or<std::string>(j, "initial_setting_id", "");
  r.final_setting_id = field_or<std::string>(j, "final_setting_id", "");
  if (j.contains("timeline")) {
    for (const nlohmann::json& ej : j.at("timeline")) {
      TimelineEntry e;
      e.j = field<std::int64_t>(ej, "j", "timeline entry");
      e.from_id = field_or<std::string>(ej, "from", "");
      e.to_id = field_or<std::string>(ej, "to", "");
      e.reason = field_or<std::string>(ej, "reason", "");
      e.ei = field_or<double>(ej, "ei", 0.0);
      e.cost_estimate = field_or<double>(ej, "cost_estimate", 0.0);
      r.timeline.push_back(std::move(e));
    }
  }
  r.warnings = field_or<std::vector<std::string>>(j, "warnings", {});
  return r;
}

nlohmann::ordered_json catalog_to_json(const SettingsCatalog& catalog) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [id, setting] : catalog.entries()) j[id] = setting_to_json(setting);
  return j;
}

SettingsCatalog catalog_from_json(const nlohmann::ordered_json& j, const KnobSpace& space) {
  SettingsCatalog catalog;
  if (!j.is_object()) throw config_error("settings catalog must be a JSON object");
  for (const auto& [id, sj] : j.items()) {
    SystemSetting s = setting_from_json(sj, space);
    std::string minted = catalog.id_for(s);
    if (minted != id)
      throw config_error("settings catalog ids are not in mint order (saw '" + id + "')");
  }
  return catalog;
}

namespace {

void write_text_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw validation_error("cannot write file: " + p.string());
  out << text;
}

}  // namespace

RunArtifacts run_job_to_dir(const ExperimentConfig& cfg,
                            const std::optional<SystemSetting>& fixed,
                            const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Workload workload = Workload::generate(cfg.workload);
  TunerConfig tuner_cfg = cfg.tuner;
  tuner_cfg.epsilon = resolve_epsilon(cfg, workload);

  MetricsRepository repo;
  SettingsCatalog catalog;
  TuningManager manager(workload, cfg.space, cfg.simulator, tuner_cfg);
  JobReport report = fixed ? manager.run_fixed(*fixed, repo, catalog)
                           : manager.run_tuned(cfg.default_setting, repo, catalog);

  std::ostringstream repo_text;
  repo.save(repo_text);
  write_text_file(dir / "repo.jsonl", repo_text.str());
  write_text_file(dir / "settings.json", catalog_to_json(catalog).dump(2) + "\n");
  write_text_file(dir / "report.json", report_to_json(report).dump(2) + "\n");
  if (!fixed && manager.last_model()) {
    nlohmann::ordered_json gp = manager.last_model()->to_json();
    gp["triples"] = nlohmann::ordered_json::array();
    for (const TrainingTriple& t : manager.last_triples()) {
      nlohmann::ordered_json tj;
      tj["setting_id"] = t.setting_id;
      tj["switch_loss"] = t.switch_loss;
      tj["y_seconds"] = t.y_seconds;
      gp["triples"].push_back(std::move(tj));
    }
    write_text_file(dir / "surrogate.json", gp.dump(2) + "\n");
  }
  return {std::move(report), dir};
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, int n_settings,
                                SettingsCatalog& catalog, std::vector<FixedTrace>* traces) {
  if (n_settings < 1) throw config_error("sweep needs a positive setting count");
  std::uint64_t finite = cfg.space.finite_size();
  if (finite != 0 && finite < static_cast<std::uint64_t>(n_settings))
    throw config_error("the knob space has fewer distinct settings than requested");

  std::vector<SystemSetting> picks;
  std::set<SystemSetting> seen;
  for (std::uint64_t round = 0; round < 64 && picks.size() < static_cast<std::size_t>(n_settings);
       ++round) {
    for (SystemSetting& s :
         random_sample(cfg.space, static_cast<std::size_t>(n_settings), mix_seed(cfg.sweep_seed, round))) {
      if (picks.size() >= static_cast<std::size_t>(n_settings)) break;
      if (seen.insert(s).second) picks.push_back(std::move(s));
    }
  }
  if (picks.size() < static_cast<std::size_t>(n_settings))
    throw config_error("could not sample enough distinct settings for the sweep");

  Workload workload = Workload::generate(cfg.workload);
  TunerConfig tuner_cfg = cfg.tuner;
  tuner_cfg.epsilon = resolve_epsilon(cfg, workload);

  std::vector<SweepRow> rows;
  for (const SystemSetting& s : picks) {
    MetricsRepository repo;
    TuningManager manager(workload, cfg.space, cfg.simulator, tuner_cfg);
    JobReport rep = manager.run_fixed(s, repo, catalog);
    bool finished = rep.status == "converged";
    SweepRow row;
    row.setting_id = rep.initial_setting_id;
    row.status = rep.status;
    /* Unfinished runs rank as infinitely slow rather than aborting the sweep. */
    row.completion_seconds =
        finished ? rep.completion_seconds : std::numeric_limits<double>::infinity();
    row.iterations = rep.iterations;
    row.mean_iteration_seconds =
        rep.iterations > 0 ? rep.completion_seconds / static_cast<double>(rep.iterations) : 0.0;
    rows.push_back(row);
    if (traces != nullptr) {
      FixedTrace tr;
      tr.setting_id = row.setting_id;
      tr.initial_loss = rep.initial_loss;
      tr.completion_seconds = row.completion_seconds;
      for (const MetricRecord& r : repo.records()) tr.points.push_back({r.j, r.t, r.l});
      traces->push_back(std::move(tr));
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.completion_seconds != b.completion_seconds)
      return a.completion_seconds < b.completion_seconds;
    return a.setting_id < b.setting_id;
  });
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& file) {
  std::ostringstream os;
  os << "setting_id,status,completion_seconds,iterations,mean_iteration_seconds\n";
  for (const SweepRow& r : rows)
    os << r.setting_id << "," << r.status << "," << fmt(r.completion_seconds) << ","
       << r.iterations << "," << fmt(r.mean_iteration_seconds) << "\n";
  write_text_file(file, os.str());
}

std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw validation_error("cannot open sweep table: " + file.string());
  std::vector<SweepRow> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      continue;  // header
    }
    std::istringstream ls(line);
    SweepRow r;
    std::string field_text;
    std::getline(ls, r.setting_id, ',');
    std::getline(ls, r.status, ',');
    std::getline(ls, field_text, ',');
    r.completion_seconds = std::stod(field_text);
    std::getline(ls, field_text, ',');
    r.iterations = std::stoll(field_text);
    std::getline(ls, field_text, ',');
    r.mean_iteration_seconds = std::stod(field_text);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_report_files(const std::filesystem::path& run_dir,
                        const std::optional<std::filesystem::path>& sweep_csv) {
  std::ifstream repo_in(run_dir / "repo.jsonl");
  if (!repo_in) throw validation_error("run directory has no repo.jsonl");
  MetricsRepository repo = MetricsRepository::load(repo_in);

  std::ifstream report_in(run_dir / "report.json");
  if (!report_in) throw validation_error("run directory has no report.json");
  nlohmann::json rj = nlohmann::json::parse(report_in, nullptr, false);
  if (rj.is_discarded()) throw validation_error("report.json is not valid JSON");
  JobReport report = report_from_json(rj);

  /* Loss curves; the clock includes reconfiguration charges at their spot. */
  std::ostringstream curves;
  curves << "j,clock_seconds,loss,setting_id\n";
  double clock = 0.0;
  std::size_t ei = 0;
  const auto& events = repo.events();
  for (const MetricRecord& r : repo.records()) {
    while (ei < events.size() && events[ei].j <= r.j) clock += events[ei++].cost;
    clock += r.t;
    curves << r.j << "," << fmt(clock) << "," << fmt(r.l) << "," << r.setting_id << "\n";
  }
  write_text_file(run_dir / "loss_curves.csv", curves.str());

  std::ostringstream marks;
  marks << "j,technique,cost,actions,from,to\n";
  for (const ReconfigEvent& ev : events) {
    std::string actions;
    for (const std::string& a : ev.actions) {
      if (!actions.empty()) actions += "|";
      actions += a;
    }
    marks << ev.j << "," << ev.technique << "," << fmt(ev.cost) << "," << actions << ","
          << ev.from_id << "," << ev.to_id << "\n";
  }
  write_text_file(run_dir / "reconfigs.csv", marks.str());

  nlohmann::ordered_json summary;
  summary["mode"] = report.mode;
  summary["status"] = report.status;
  summary["completion_seconds"] = report.completion_seconds;
  summary["iterations"] = report.iterations;
  summary["reconfig_count"] = report.reconfig_count;
  summary["reconfig_seconds"] = report.reconfig_seconds;
  summary["blocked_seconds"] = report.blocked_seconds;
  summary["final_setting_id"] = report.final_setting_id;
  if (sweep_csv) {
    std::vector<SweepRow> rows = read_sweep_csv(*sweep_csv);
    std::vector<double> done;
    for (const SweepRow& r : rows)
      if (r.status == "converged") done.push_back(r.completion_seconds);
    if (!done.empty()) {
      double best = done.front();
      double worst = done.front();
      double sum = 0.0;
      for (double v : done) {
        best = std::min(best, v);
        worst = std::max(worst, v);
        sum += v;
      }
      double average = sum / static_cast<double>(done.size());
      summary["sweep"] = {{"settings", rows.size()},
                          {"converged", done.size()},
                          {"best_seconds", best},
                          {"average_seconds", average},
                          {"worst_seconds", worst}};
      if (report.completion_seconds > 0.0 && report.status == "converged") {
        summary["speedup_vs_worst"] = worst / report.completion_seconds;
        summary["speedup_vs_average"] = average / report.completion_seconds;
        summary["speedup_vs_best"] = best / report.completion_seconds;
      }
    }
  }
  write_text_file(run_dir / "summary.json", summary.dump(2) + "\n");
}

}  // namespace pstune
