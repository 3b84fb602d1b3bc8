// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#include "pstune/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "pstune/errors.hpp"

namespace pstune {

namespace {

double median_of_sorted(const std::vector<double>& s) {
  std::size_t n = s.size();
  return n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return median_of_sorted(v);
}

}  // namespace

std::vector<std::size_t> outlier_free_indices(const std::vector<double>& xs) {
  std::size_t n = xs.size();
  std::vector<std::size_t> keep;
  keep.reserve(n);
  if (n == 0) return keep;
  for (double x : xs)
    if (!std::isfinite(x)) throw validation_error("outlier filter requires finite values");

  double med = median(xs);
  std::vector<double> dev(n);
  for (std::size_t i = 0; i < n; ++i) dev[i] = std::abs(xs[i] - med);
  double mad = median(dev);
  double threshold = 3.0 * mad;

  std::vector<std::size_t> flagged;
  for (std::size_t i = 0; i < n; ++i)
    if (dev[i] > threshold) flagged.push_back(i);

  std::size_t cap = n / 5;  // at most 20% of the points may be dropped
  if (flagged.size() > cap) {
    /* Keep the flagged points closest to the median; drop the farthest. */
    std::stable_sort(flagged.begin(), flagged.end(),
                     [&](std::size_t a, std::size_t b) { return dev[a] > dev[b]; });
    flagged.resize(cap);
  }
  std::vector<bool> drop(n, false);
  for (std::size_t i : flagged) drop[i] = true;
  for (std::size_t i = 0; i < n; ++i)
    if (!drop[i]) keep.push_back(i);
  return keep;
}

std::vector<double> remove_outliers(const std::vector<double>& xs) {
  std::vector<double> out;
  for (std::size_t i : outlier_free_indices(xs)) out.push_back(xs[i]);
  return out;
}

void MetricsRepository::append(const MetricRecord& rec) {
  std::int64_t expected = static_cast<std::int64_t>(records_.size());
  if (rec.j != expected)
    throw sequencing_error("metric iteration " + std::to_string(rec.j) + " arrived, expected " +
                           std::to_string(expected));
  if (rec.setting_id.empty()) throw validation_error("metric record needs a setting id");
  if (!std::isfinite(rec.t) || rec.t <= 0.0)
    throw validation_error("iteration time must be finite and positive");
  if (!std::isfinite(rec.l) || rec.l < 0.0)
    throw validation_error("loss must be finite and non-negative");

  if (segments_.empty() || segments_.back().setting_id != rec.setting_id)
    segments_.push_back({rec.setting_id, records_.size(), 1});
  else
    segments_.back().count += 1;
  records_.push_back(rec);
}

void MetricsRepository::append_event(const ReconfigEvent& ev) {
  if (!events_.empty() && ev.j < events_.back().j)
    throw sequencing_error("reconfiguration events must be ordered by iteration");
  if (!std::isfinite(ev.cost) || ev.cost < 0.0)
    throw validation_error("reconfiguration cost must be finite and non-negative");
  events_.push_back(ev);
}

void MetricsRepository::save(std::ostream& os) const {
  std::size_t ei = 0;
  auto flush_events_before = [&](std::int64_t j) {
    while (ei < events_.size() && events_[ei].j <= j) {
      const ReconfigEvent& ev = events_[ei++];
      nlohmann::ordered_json line;
      line["type"] = "reconfig";
      line["j"] = ev.j;
      line["technique"] = ev.technique;
      line["actions"] = ev.actions;
      line["cost"] = ev.cost;
      line["from"] = ev.from_id;
      line["to"] = ev.to_id;
      os << line.dump() << "\n";
    }
  };
  for (const MetricRecord& r : records_) {
    flush_events_before(r.j);
    nlohmann::ordered_json line;
    line["j"] = r.j;
    line["setting_id"] = r.setting_id;
    line["t"] = r.t;
    line["l"] = r.l;
    os << line.dump() << "\n";
  }
  flush_events_before(std::numeric_limits<std::int64_t>::max());
}

MetricsRepository MetricsRepository::load(std::istream& is) {
  MetricsRepository repo;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw validation_error("repository line " + std::to_string(lineno) + " is not valid JSON");
    try {
      if (j.contains("type") && j.at("type") == "reconfig") {
        ReconfigEvent ev;
        ev.j = j.at("j").get<std::int64_t>();
        ev.technique = j.at("technique").get<std::string>();
        ev.actions = j.at("actions").get<std::vector<std::string>>();
        ev.cost = j.at("cost").get<double>();
        ev.from_id = j.value("from", "");
        ev.to_id = j.value("to", "");
        repo.append_event(ev);
      } else {
        MetricRecord r;
        r.j = j.at("j").get<std::int64_t>();
        r.setting_id = j.at("setting_id").get<std::string>();
        r.t = j.at("t").get<double>();
        r.l = j.at("l").get<double>();
        repo.append(r);
      }
    } catch (const nlohmann::json::exception& e) {
      throw validation_error("repository line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return repo;
}

}  // namespace pstune
