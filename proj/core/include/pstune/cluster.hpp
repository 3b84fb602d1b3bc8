// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "pstune/reconfig_types.hpp"

namespace pstune {

/* Server-side state of the simulated parameter server, including the live
 * relocation machinery.
 *
 * Every coordinate has exactly one authoritative server at all times. While a
 * relocation for a coordinate is pending, the source stays authoritative with
 * its value frozen; the first worker push after the plan travels as a
 * carry-forward message holding the worker's last-pulled original value o and
 * its update u, and the destination materializes the coordinate as o + u.
 * Any later push applies its update normally at the destination. No worker
 * ever waits: pulls are served by whichever server is authoritative. */
class ClusterState {
 public:
  ClusterState(int servers, int workers, const Eigen::VectorXd& initial_model);

  int server_count() const { return shard_map_.server_count(); }
  int worker_count() const { return workers_; }
  std::uint32_t dim() const { return shard_map_.dim(); }
  const ShardMap& shard_map() const { return shard_map_; }

  /* Worker-facing protocol. */
  double pull(int worker, std::uint32_t p);
  void pull_model(int worker, Eigen::VectorXd& out);
  void push(int worker, std::uint32_t p, double u);
  void push_update(int worker, const Eigen::VectorXd& u);  // one push per coordinate

  /* Relocation lifecycle. */
  void begin_relocation(const ModelRelocation& move);  // throws sequencing_error if one is active
  void finalize_relocation();                          // forces pending coordinates across
  bool relocation_active() const { return pending_count_ > 0; }
  std::uint32_t pending_count() const { return pending_count_; }

  /* Raw message entry point (used by tests to drive explicit interleavings).
   * Throws protocol_error when no relocation is pending for p. */
  void deliver_carry_forward(std::uint32_t p, double original, double update);

  /* Quiescent path: replace the map wholesale, values unchanged. */
  void install_shard_map(const ShardMap& map);

  int authority_of(std::uint32_t p) const;
  Eigen::VectorXd snapshot() const { return values_; }  // authoritative values
  double value(std::uint32_t p) const { return values_[p]; }

  /* Data-side partition of example indices across workers. */
  const std::vector<std::pair<std::int64_t, std::int64_t>>& worker_ranges() const {
    return worker_ranges_;
  }
  void set_worker_ranges(std::vector<std::pair<std::int64_t, std::int64_t>> ranges);
  static std::vector<std::pair<std::int64_t, std::int64_t>> even_ranges(std::int64_t n_examples,
                                                                        int workers);
  void set_worker_count(int workers, std::int64_t n_examples);

  /* Accounting for reconfiguration overhead. */
  void add_blocked_seconds(double per_worker);
  double blocked_seconds(int worker) const { return blocked_.at(static_cast<std::size_t>(worker)); }
  double total_blocked_seconds() const;

  /* Exactly-once audit: materializations per coordinate of the current (or
   * last) relocation. */
  const std::map<std::uint32_t, int>& materialization_counts() const { return materialized_; }

 private:
  void materialize(std::uint32_t p, double value);

  ShardMap shard_map_;
  std::vector<int> authority_;  // per-coordinate authoritative server
  Eigen::VectorXd values_;
  int workers_ = 0;
  std::vector<std::pair<std::int64_t, std::int64_t>> worker_ranges_;
  std::vector<double> blocked_;

  /* Relocation state: destination per pending coordinate (authority stays with
   * the source until materialization). */
  std::vector<int> pending_dst_;       // -1 when not pending
  std::uint32_t pending_count_ = 0;
  ShardMap target_map_;                // map once the active relocation completes
  std::map<std::uint32_t, int> materialized_;

  /* Last value each worker pulled per coordinate; the o of its next push. */
  std::vector<Eigen::VectorXd> last_pull_;
  std::vector<std::vector<bool>> has_pulled_;
};

}  // namespace pstune
