// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace pstune {

enum class SyncMode { Serial, Bsp, Asp };

struct ClusterShape {
  int servers = 1;
  int workers = 1;
  int threads = 1;
  SyncMode mode = SyncMode::Serial;
  int batch = 1;       // examples per gradient
  int model_dim = 1;
};

struct CostCoefficients {
  double compute = 4e-4;        // seconds per example-coordinate of gradient work
  double thread_friction = 0.25;  // diminishing returns on extra threads
  double aggregation = 3.5e-3;  // per worker-to-server fan-in unit
  double network = 1.2e-3;      // per model coordinate per server
  double per_message = 1.0e-3;  // per worker round trip
  double barrier = 6e-3;        // synchronous-mode straggler growth
  double noise = 0.03;          // multiplicative half-width per iteration
};

struct CostBreakdown {
  double compute = 0.0;
  double aggregation = 0.0;
  double network = 0.0;
  double interaction = 0.0;
  double total = 0.0;  // before noise
};

/* Seconds one training iteration takes for a given cluster shape. Gradient
 * work splits across workers and threads (threads with diminishing returns);
 * aggregation fans worker pushes into servers; network moves the model out of
 * the servers; synchronous modes pay a straggler barrier that grows with the
 * worker count. */
class IterationCostModel {
 public:
  IterationCostModel(const CostCoefficients& c, std::uint64_t seed) : c_(c), seed_(seed) {}

  CostBreakdown breakdown(const ClusterShape& s) const;
  /* breakdown().total times the iteration's noise factor in
   * [1 - noise, 1 + noise], drawn deterministically from (seed, j). */
  double iteration_seconds(const ClusterShape& s, std::int64_t j) const;

  const CostCoefficients& coefficients() const { return c_; }

 private:
  CostCoefficients c_;
  std::uint64_t seed_ = 0;
};

}  // namespace pstune
