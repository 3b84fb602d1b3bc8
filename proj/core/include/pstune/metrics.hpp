// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace pstune {

/* One training iteration: index, setting in force, wall seconds, observed loss. */
struct MetricRecord {
  std::int64_t j = 0;
  std::string setting_id;
  double t = 0.0;
  double l = 0.0;
};

/* One applied reconfiguration, logged between iterations j-1 and j. */
struct ReconfigEvent {
  std::int64_t j = 0;            // next iteration index at the time of the event
  std::string technique;         // "live" or "quiescent"
  std::vector<std::string> actions;
  double cost = 0.0;             // charged seconds
  std::string from_id;
  std::string to_id;
};

/* Contiguous run of records sharing one setting_id. */
struct SegmentRef {
  std::string setting_id;
  std::size_t first = 0;  // record index
  std::size_t count = 0;
};

/* Median absolute deviation filter: drops points farther than 3 MAD from the
 * median, never more than 20% of the input (farthest first when capped).
 * Order of survivors is preserved. */
std::vector<double> remove_outliers(const std::vector<double>& xs);

/* Same filter, returning the indices of the survivors in ascending order. */
std::vector<std::size_t> outlier_free_indices(const std::vector<double>& xs);

/* Append-only iteration log plus reconfiguration events. Records must arrive
 * densely ordered (j = 0, 1, 2, ...); segments are derived from setting_id
 * changes between consecutive records. */
class MetricsRepository {
 public:
  void append(const MetricRecord& rec);        // throws sequencing_error / validation_error
  void append_event(const ReconfigEvent& ev);  // events must be ordered by j as well

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const MetricRecord& at(std::size_t i) const { return records_.at(i); }
  const std::vector<MetricRecord>& records() const { return records_; }
  const std::vector<SegmentRef>& segments() const { return segments_; }
  const std::vector<ReconfigEvent>& events() const { return events_; }

  /* JSON Lines; metric records and typed reconfiguration events interleaved
   * in iteration order. Loading then saving reproduces the bytes. */
  void save(std::ostream& os) const;
  static MetricsRepository load(std::istream& is);

 private:
  std::vector<MetricRecord> records_;
  std::vector<SegmentRef> segments_;
  std::vector<ReconfigEvent> events_;
};

}  // namespace pstune
