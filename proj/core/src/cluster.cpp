// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#include "pstune/cluster.hpp"

#include "pstune/errors.hpp"

namespace pstune {

ClusterState::ClusterState(int servers, int workers, const Eigen::VectorXd& initial_model)
    : shard_map_(ShardMap::even_split(static_cast<std::uint32_t>(initial_model.size()), servers)),
      values_(initial_model),
      workers_(workers) {
  if (workers < 1) throw validation_error("cluster needs at least one worker");
  blocked_.assign(static_cast<std::size_t>(workers), 0.0);
  authority_.resize(dim());
  for (std::uint32_t p = 0; p < dim(); ++p) authority_[p] = shard_map_.owner(p);
  pending_dst_.assign(dim(), -1);
  last_pull_.assign(static_cast<std::size_t>(workers), Eigen::VectorXd::Zero(values_.size()));
  has_pulled_.assign(static_cast<std::size_t>(workers),
                     std::vector<bool>(static_cast<std::size_t>(values_.size()), false));
  worker_ranges_.assign(static_cast<std::size_t>(workers), {0, 0});
}

int ClusterState::authority_of(std::uint32_t p) const {
  if (p >= dim()) throw validation_error("coordinate index out of range");
  /* Pending coordinates are still answered by their source server; a
   * materialized coordinate answers from its destination immediately. */
  return authority_[p];
}

double ClusterState::pull(int worker, std::uint32_t p) {
  if (worker < 0 || worker >= workers_) throw validation_error("worker index out of range");
  if (p >= dim()) throw validation_error("coordinate index out of range");
  double v = values_[p];
  last_pull_[static_cast<std::size_t>(worker)][p] = v;
  has_pulled_[static_cast<std::size_t>(worker)][p] = true;
  return v;
}

void ClusterState::pull_model(int worker, Eigen::VectorXd& out) {
  out.resize(values_.size());
  for (std::uint32_t p = 0; p < dim(); ++p) out[p] = pull(worker, p);
}

void ClusterState::materialize(std::uint32_t p, double value) {
  values_[p] = value;
  authority_[p] = pending_dst_[p];
  pending_dst_[p] = -1;
  pending_count_ -= 1;
  materialized_[p] += 1;
  if (pending_count_ == 0) shard_map_ = target_map_;
}

void ClusterState::deliver_carry_forward(std::uint32_t p, double original, double update) {
  if (p >= dim()) throw validation_error("coordinate index out of range");
  if (pending_dst_[p] < 0)
    throw protocol_error("carry-forward message for a coordinate with no pending relocation");
  materialize(p, original + update);
}

void ClusterState::push(int worker, std::uint32_t p, double u) {
  if (worker < 0 || worker >= workers_) throw validation_error("worker index out of range");
  if (p >= dim()) throw validation_error("coordinate index out of range");
  if (pending_dst_[p] >= 0) {
    if (!has_pulled_[static_cast<std::size_t>(worker)][p])
      throw protocol_error("push before any pull for a relocating coordinate");
    deliver_carry_forward(p, last_pull_[static_cast<std::size_t>(worker)][p], u);
  } else {
    values_[p] += u;
  }
}

void ClusterState::push_update(int worker, const Eigen::VectorXd& u) {
  if (u.size() != values_.size()) throw validation_error("update has wrong dimension");
  for (std::uint32_t p = 0; p < dim(); ++p) push(worker, p, u[p]);
}

void ClusterState::begin_relocation(const ModelRelocation& move) {
  if (relocation_active())
    throw sequencing_error("a relocation is already in flight; finalize it first");
  if (move.new_map.dim() != dim()) throw validation_error("relocation map has wrong dimension");
  /* Validate the whole plan before touching any state, so a rejected plan
   * leaves the cluster exactly as it was. */
  std::vector<bool> claimed(dim(), false);
  for (const auto& mv : move.moves) {
    if (mv.hi > dim() || mv.lo >= mv.hi) throw validation_error("relocation move out of range");
    for (std::uint32_t p = mv.lo; p < mv.hi; ++p) {
      if (authority_[p] != mv.src)
        throw validation_error("relocation source does not own the coordinate");
      if (claimed[p]) throw validation_error("coordinate relocated twice in one plan");
      claimed[p] = true;
    }
  }
  materialized_.clear();
  for (const auto& mv : move.moves) {
    if (mv.src == mv.dst) continue;
    for (std::uint32_t p = mv.lo; p < mv.hi; ++p) {
      pending_dst_[p] = mv.dst;
      pending_count_ += 1;
    }
  }
  target_map_ = move.new_map;
  if (pending_count_ == 0) {
    shard_map_ = target_map_;
    for (std::uint32_t p = 0; p < dim(); ++p) authority_[p] = shard_map_.owner(p);
  }
}

void ClusterState::finalize_relocation() {
  for (std::uint32_t p = 0; p < dim() && pending_count_ > 0; ++p)
    if (pending_dst_[p] >= 0) materialize(p, values_[p]);
}

void ClusterState::install_shard_map(const ShardMap& map) {
  if (map.dim() != dim()) throw validation_error("shard map has wrong dimension");
  if (relocation_active())
    throw sequencing_error("cannot install a map while a relocation is in flight");
  shard_map_ = map;
  for (std::uint32_t p = 0; p < dim(); ++p) authority_[p] = shard_map_.owner(p);
}

std::vector<std::pair<std::int64_t, std::int64_t>> ClusterState::even_ranges(
    std::int64_t n_examples, int workers) {
  if (workers < 1) throw validation_error("need at least one worker");
  std::vector<std::pair<std::int64_t, std::int64_t>> out(static_cast<std::size_t>(workers));
  std::int64_t base = n_examples / workers;
  std::int64_t extra = n_examples % workers;
  std::int64_t at = 0;
  for (int w = 0; w < workers; ++w) {
    std::int64_t len = base + (w < extra ? 1 : 0);
    out[static_cast<std::size_t>(w)] = {at, at + len};
    at += len;
  }
  return out;
}

void ClusterState::set_worker_ranges(std::vector<std::pair<std::int64_t, std::int64_t>> ranges) {
  if (ranges.size() != static_cast<std::size_t>(workers_))
    throw validation_error("need one example range per worker");
  worker_ranges_ = std::move(ranges);
}

void ClusterState::set_worker_count(int workers, std::int64_t n_examples) {
  if (workers < 1) throw validation_error("cluster needs at least one worker");
  workers_ = workers;
  blocked_.resize(static_cast<std::size_t>(workers), 0.0);
  last_pull_.resize(static_cast<std::size_t>(workers), Eigen::VectorXd::Zero(values_.size()));
  has_pulled_.resize(static_cast<std::size_t>(workers),
                     std::vector<bool>(static_cast<std::size_t>(values_.size()), false));
  set_worker_ranges(even_ranges(n_examples, workers));
}

void ClusterState::add_blocked_seconds(double per_worker) {
  for (double& b : blocked_) b += per_worker;
}

double ClusterState::total_blocked_seconds() const {
  double s = 0.0;
  for (double b : blocked_) s += b;
  return s;
}

}  // namespace pstune
