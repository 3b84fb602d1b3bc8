// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pstune {

enum class WorkloadKind { Quadratic, LogisticRegressionL2, LinearSvmL2 };

WorkloadKind workload_kind_from_name(const std::string& name);  // throws config_error
std::string workload_kind_name(WorkloadKind k);

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::Quadratic;
  int dimension = 16;
  int n_examples = 64;
  double l2_strength = 1e-2;   // classification kinds
  double label_noise = 0.05;   // classification kinds
  double eigen_min = 1.0;      // quadratic curvature range
  double eigen_max = 8.0;
  std::uint64_t seed = 1;
};

/* Deterministic synthetic training problem. The empirical risk is the mean of
 * the per-example losses, so a uniformly drawn minibatch mean is an unbiased
 * risk estimate by construction.
 *
 * Quadratic: per-example losses (1/2)(w - w*)' A_i (w - w*) with symmetric
 * PSD A_i averaging exactly to A, so the shared minimizer is w* and the
 * minimum risk is exactly zero. Classification kinds draw Gaussian inputs
 * with noisy linear labels; every example carries the full L2 term so batch
 * means keep the regularizer intact. */
class Workload {
 public:
  static Workload generate(const WorkloadSpec& spec);

  int dimension() const { return dim_; }
  int size() const { return n_; }
  WorkloadKind kind() const { return spec_.kind; }
  const WorkloadSpec& spec() const { return spec_; }

  double example_loss(const Eigen::VectorXd& w, std::size_t i) const;
  void accumulate_example_gradient(const Eigen::VectorXd& w, std::size_t i,
                                   Eigen::VectorXd& acc) const;

  double minibatch_loss(const Eigen::VectorXd& w, const std::vector<std::size_t>& batch) const;
  Eigen::VectorXd minibatch_gradient(const Eigen::VectorXd& w,
                                     const std::vector<std::size_t>& batch) const;
  double empirical_risk(const Eigen::VectorXd& w) const;

  Eigen::VectorXd initial_model() const { return Eigen::VectorXd::Zero(dim_); }

  /* Conservative smoothness / curvature bounds (quadratic: from the spectrum
   * of A plus the perturbation margin; classification: crude data bounds). */
  double smoothness_bound() const { return smoothness_; }
  double curvature_bound() const { return curvature_; }
  const Eigen::VectorXd& optimum() const { return w_star_; }  // quadratic only

 private:
  WorkloadSpec spec_;
  int dim_ = 0;
  int n_ = 0;
  double smoothness_ = 0.0;
  double curvature_ = 0.0;
  // quadratic state
  std::vector<Eigen::MatrixXd> quadratics_;  // one PSD matrix per example
  Eigen::VectorXd w_star_;
  // classification state
  Eigen::MatrixXd features_;  // n x dim
  Eigen::VectorXd labels_;    // +1 / -1
};

}  // namespace pstune
