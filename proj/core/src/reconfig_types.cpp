// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#include "pstune/reconfig_types.hpp"

#include <algorithm>

#include "pstune/errors.hpp"

namespace pstune {

ShardMap::ShardMap(std::uint32_t dim,
                   std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> ranges)
    : dim_(dim), ranges_(std::move(ranges)) {
  build_owner_index();
}

void ShardMap::build_owner_index() {
  if (dim_ == 0) throw validation_error("shard map needs a positive dimension");
  if (ranges_.empty()) throw validation_error("shard map needs at least one server");
  owner_.assign(dim_, -1);
  for (std::size_t s = 0; s < ranges_.size(); ++s) {
    for (const auto& [lo, hi] : ranges_[s]) {
      if (lo >= hi || hi > dim_) throw validation_error("shard range out of bounds");
      for (std::uint32_t p = lo; p < hi; ++p) {
        if (owner_[p] != -1) throw validation_error("shard ranges overlap");
        owner_[p] = static_cast<int>(s);
      }
    }
  }
  for (std::uint32_t p = 0; p < dim_; ++p)
    if (owner_[p] == -1) throw validation_error("shard map does not cover every coordinate");
}

ShardMap ShardMap::even_split(std::uint32_t dim, int n_servers) {
  if (n_servers < 1) throw validation_error("shard map needs at least one server");
  if (dim < static_cast<std::uint32_t>(n_servers))
    throw validation_error("cannot spread fewer coordinates than servers");
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> ranges(n_servers);
  std::uint32_t base = dim / static_cast<std::uint32_t>(n_servers);
  std::uint32_t extra = dim % static_cast<std::uint32_t>(n_servers);
  std::uint32_t at = 0;
  for (int s = 0; s < n_servers; ++s) {
    std::uint32_t len = base + (static_cast<std::uint32_t>(s) < extra ? 1 : 0);
    ranges[static_cast<std::size_t>(s)].emplace_back(at, at + len);
    at += len;
  }
  return ShardMap(dim, std::move(ranges));
}

std::uint32_t ShardMap::held_by(int server) const {
  std::uint32_t n = 0;
  for (const auto& [lo, hi] : ranges_.at(static_cast<std::size_t>(server))) n += hi - lo;
  return n;
}

namespace {

/* Append param p to the holding list, merging into the last range if adjacent. */
void push_param(std::vector<std::pair<std::uint32_t, std::uint32_t>>& out, std::uint32_t p) {
  if (!out.empty() && out.back().second == p)
    out.back().second = p + 1;
  else
    out.emplace_back(p, p + 1);
}

}  // namespace

ShardMap recompute_shard_map(const ShardMap& current, int new_server_count) {
  if (new_server_count < 1) throw validation_error("shard map needs at least one server");
  std::uint32_t dim = current.dim();
  if (dim < static_cast<std::uint32_t>(new_server_count))
    throw validation_error("cannot spread fewer coordinates than servers");

  std::uint32_t n = static_cast<std::uint32_t>(new_server_count);
  std::vector<std::uint32_t> target(n, dim / n);
  for (std::uint32_t s = 0; s < dim % n; ++s) target[s] += 1;

  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> kept(n);
  std::vector<bool> pooled(dim, true);
  int survivors = std::min(new_server_count, current.server_count());
  for (int s = 0; s < survivors; ++s) {
    std::uint32_t quota = target[static_cast<std::uint32_t>(s)];
    for (const auto& [lo, hi] : current.ranges()[static_cast<std::size_t>(s)]) {
      for (std::uint32_t p = lo; p < hi && quota > 0; ++p, --quota) {
        push_param(kept[static_cast<std::size_t>(s)], p);
        pooled[p] = false;
      }
      if (quota == 0) break;
    }
  }
  std::uint32_t fill_server = 0;
  auto held = [&](std::uint32_t s) {
    std::uint32_t c = 0;
    for (const auto& [lo, hi] : kept[s]) c += hi - lo;
    return c;
  };
  for (std::uint32_t p = 0; p < dim; ++p) {
    if (!pooled[p]) continue;
    while (held(fill_server) >= target[fill_server]) ++fill_server;
    push_param(kept[fill_server], p);
  }
  return ShardMap(dim, std::move(kept));
}

std::vector<std::string> ReconfigPlan::action_names() const {
  std::vector<std::string> out;
  if (repartition) out.push_back(kActionRepartition);
  if (relocation) out.push_back(kActionRelocation);
  if (knob_switch) out.push_back(kActionSwitch);
  return out;
}

}  // namespace pstune
