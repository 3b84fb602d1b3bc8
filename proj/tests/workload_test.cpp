// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#include "pstune/workload.hpp"

#include <doctest.h>

#include <bit>
#include <cmath>

#include "pstune/errors.hpp"
#include "pstune/progress.hpp"
#include "pstune/rng.hpp"

using namespace pstune;

namespace {

WorkloadSpec small_spec(WorkloadKind kind, std::uint64_t seed = 5) {
  WorkloadSpec spec;
  spec.kind = kind;
  spec.dimension = 6;
  spec.n_examples = 8;
  spec.seed = seed;
  return spec;
}

Eigen::VectorXd random_model(const Workload& w, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd v(w.dimension());
  for (int i = 0; i < w.dimension(); ++i) v[i] = rng.uniform(-1.0, 1.0);
  return v;
}

}  // namespace

TEST_CASE("workload kind names round-trip") {
  for (auto kind : {WorkloadKind::Quadratic, WorkloadKind::LogisticRegressionL2,
                    WorkloadKind::LinearSvmL2})
    CHECK(workload_kind_from_name(workload_kind_name(kind)) == kind);
  CHECK_THROWS_AS(workload_kind_from_name("mystery"), config_error);
}

TEST_CASE("the quadratic risk vanishes exactly at its optimum") {
  Workload w = Workload::generate(small_spec(WorkloadKind::Quadratic));
  CHECK(w.empirical_risk(w.optimum()) == 0.0);
  for (std::size_t i = 0; i < static_cast<std::size_t>(w.size()); ++i)
    CHECK(w.example_loss(w.optimum(), i) == 0.0);
  CHECK(w.empirical_risk(w.initial_model()) > 0.0);
}

TEST_CASE("every uniform minibatch average reproduces the full risk") {
  for (auto kind : {WorkloadKind::Quadratic, WorkloadKind::LogisticRegressionL2,
                    WorkloadKind::LinearSvmL2}) {
    Workload w = Workload::generate(small_spec(kind));
    Eigen::VectorXd model = random_model(w, 17);
    double risk = w.empirical_risk(model);
    int n = w.size();
    for (int m = 1; m <= 4; ++m) {
      double sum = 0.0;
      int count = 0;
      for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (std::popcount(mask) != m) continue;
        std::vector<std::size_t> batch;
        for (int i = 0; i < n; ++i)
          if (mask & (1u << i)) batch.push_back(static_cast<std::size_t>(i));
        sum += w.minibatch_loss(model, batch);
        count += 1;
      }
      double mean = sum / count;
      CHECK(std::abs(mean - risk) <= 1e-12 * std::max(1.0, std::abs(risk)));
    }
  }
}

TEST_CASE("logistic loss at the origin is ln 2 for every example") {
  Workload w = Workload::generate(small_spec(WorkloadKind::LogisticRegressionL2));
  Eigen::VectorXd zero = w.initial_model();
  for (std::size_t i = 0; i < static_cast<std::size_t>(w.size()); ++i)
    CHECK(w.example_loss(zero, i) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(w.empirical_risk(zero) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("hinge loss at the origin is one for every example") {
  Workload w = Workload::generate(small_spec(WorkloadKind::LinearSvmL2));
  Eigen::VectorXd zero = w.initial_model();
  CHECK(w.empirical_risk(zero) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("minibatch gradients match finite differences") {
  for (auto kind : {WorkloadKind::Quadratic, WorkloadKind::LogisticRegressionL2,
                    WorkloadKind::LinearSvmL2}) {
    Workload w = Workload::generate(small_spec(kind));
    Eigen::VectorXd model = random_model(w, 23);
    std::vector<std::size_t> batch = {0, 2, 5};
    Eigen::VectorXd g = w.minibatch_gradient(model, batch);
    const double h = 1e-6;
    for (int k = 0; k < w.dimension(); ++k) {
      Eigen::VectorXd up = model, dn = model;
      up[k] += h;
      dn[k] -= h;
      double fd = (w.minibatch_loss(up, batch) - w.minibatch_loss(dn, batch)) / (2.0 * h);
      CHECK(g[k] == doctest::Approx(fd).epsilon(1e-4));
    }
  }
}

TEST_CASE("generation is deterministic in the seed") {
  Workload a = Workload::generate(small_spec(WorkloadKind::LogisticRegressionL2, 7));
  Workload b = Workload::generate(small_spec(WorkloadKind::LogisticRegressionL2, 7));
  Workload c = Workload::generate(small_spec(WorkloadKind::LogisticRegressionL2, 8));
  Eigen::VectorXd model = random_model(a, 31);
  CHECK(a.empirical_risk(model) == b.empirical_risk(model));
  CHECK(a.empirical_risk(model) != c.empirical_risk(model));
}

TEST_CASE("curvature bounds bracket the quadratic spectrum") {
  WorkloadSpec spec = small_spec(WorkloadKind::Quadratic);
  spec.eigen_min = 1.0;
  spec.eigen_max = 8.0;
  Workload w = Workload::generate(spec);
  CHECK(w.curvature_bound() > 0.0);
  CHECK(w.smoothness_bound() >= w.curvature_bound());
  CHECK(q_lower_bound_ok(w.smoothness_bound(), w.curvature_bound()));

  // Descent at 1/L must make progress from any starting point.
  Eigen::VectorXd model = random_model(w, 41);
  double before = w.empirical_risk(model);
  std::vector<std::size_t> all;
  for (int i = 0; i < w.size(); ++i) all.push_back(static_cast<std::size_t>(i));
  Eigen::VectorXd g = w.minibatch_gradient(model, all);
  Eigen::VectorXd stepped = model - (1.0 / w.smoothness_bound()) * g;
  CHECK(w.empirical_risk(stepped) < before);
}

TEST_CASE("classification losses are non-negative everywhere") {
  for (auto kind : {WorkloadKind::LogisticRegressionL2, WorkloadKind::LinearSvmL2}) {
    Workload w = Workload::generate(small_spec(kind));
    for (std::uint64_t s = 0; s < 10; ++s) {
      Eigen::VectorXd model = random_model(w, 100 + s);
      for (std::size_t i = 0; i < static_cast<std::size_t>(w.size()); ++i)
        CHECK(w.example_loss(model, i) >= 0.0);
    }
  }
}
