// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#include "pstune/cost_model.hpp"

#include <cmath>

#include "pstune/errors.hpp"
#include "pstune/rng.hpp"

namespace pstune {

CostBreakdown IterationCostModel::breakdown(const ClusterShape& s) const {
  if (s.servers < 1 || s.workers < 1 || s.threads < 1 || s.batch < 1 || s.model_dim < 1)
    throw validation_error("cluster shape entries must be positive");
  CostBreakdown b;
  int workers = s.mode == SyncMode::Serial ? 1 : s.workers;
  double thread_speedup =
      static_cast<double>(s.threads) / (1.0 + c_.thread_friction * (s.threads - 1));
  double work = static_cast<double>(s.batch) * static_cast<double>(s.model_dim);
  b.compute = c_.compute * work / (static_cast<double>(workers) * thread_speedup);
  if (s.mode != SyncMode::Serial) {
    b.aggregation = c_.aggregation * static_cast<double>(workers) / static_cast<double>(s.servers);
    b.network = c_.network * static_cast<double>(s.model_dim) / static_cast<double>(s.servers) +
                c_.per_message * static_cast<double>(workers);
  }
  if (s.mode == SyncMode::Bsp)
    b.interaction = c_.barrier * std::log1p(static_cast<double>(workers));
  b.total = b.compute + b.aggregation + b.network + b.interaction;
  return b;
}

double IterationCostModel::iteration_seconds(const ClusterShape& s, std::int64_t j) const {
  double base = breakdown(s).total;
  if (c_.noise == 0.0) return base;
  Rng rng(mix_seed(seed_, 0xC057, static_cast<std::uint64_t>(j)));
  double u = rng.uniform(-1.0, 1.0);
  return base * (1.0 + c_.noise * u);
}

}  // namespace pstune
