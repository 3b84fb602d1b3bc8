// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace pstune {

struct KernelParams {
  Eigen::VectorXd lengthscales;   // one per input dimension
  double signal_variance = 1.0;
  double noise_variance = 0.0;
};

/* Matern covariance, smoothness 5/2, one lengthscale per dimension:
 * k(a,b) = sv * (1 + s + s^2/3) * exp(-s) with s = sqrt(5) * r and
 * r the lengthscale-weighted Euclidean distance. */
double matern52(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const KernelParams& p);

struct PosteriorPrediction {
  double mean = 0.0;
  double variance = 0.0;  // clamped at zero
};

/* Exact GP regression on a Cholesky factorization of K + (noise + jitter) I.
 *
 * fit() standardizes the targets, grid-searches lengthscale and noise scales
 * by log marginal likelihood, and reports predictions de-standardized.
 * with_params() keeps the caller's hyperparameters and raw targets (zero-mean
 * prior), which is the right tool for controlled numerical checks. */
class GpModel {
 public:
  static GpModel fit(const std::vector<std::vector<double>>& xs, const std::vector<double>& ys);
  static GpModel with_params(const std::vector<std::vector<double>>& xs,
                             const std::vector<double>& ys, const KernelParams& params);

  PosteriorPrediction predict(const std::vector<double>& x) const;
  PosteriorPrediction predict(const Eigen::VectorXd& x) const;

  const KernelParams& params() const { return params_; }
  double prior_mean() const { return y_mean_; }
  double prior_variance() const { return y_scale_ * y_scale_ * params_.signal_variance; }
  double log_marginal_likelihood() const { return lml_; }
  double jitter() const { return jitter_; }
  std::size_t size() const { return static_cast<std::size_t>(x_.rows()); }
  std::size_t input_dim() const { return static_cast<std::size_t>(x_.cols()); }

  nlohmann::ordered_json to_json() const;

 private:
  GpModel() = default;
  void factorize();  // throws numerical_error when the jitter ladder is exhausted

  Eigen::MatrixXd x_;          // n x d inputs
  Eigen::VectorXd y_std_;      // standardized (or raw) targets
  Eigen::MatrixXd chol_;       // lower factor of K + (noise + jitter) I
  Eigen::VectorXd alpha_;      // solve of the factored system against y_std_
  KernelParams params_;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  double jitter_ = 0.0;
  double lml_ = 0.0;
};

}  // namespace pstune
