// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#include "pstune/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pstune/errors.hpp"

namespace pstune {

namespace {

/* Plain factorization first; jitter only rescues a Gram matrix that is
 * numerically singular, so healthy problems stay exactly the stated model. */
constexpr double kJitterLadder[] = {0.0, 1e-10, 1e-8, 1e-6, 1e-4};
constexpr double kLengthscaleFactors[] = {0.1, 0.3, 1.0, 3.0};
constexpr double kNoiseFactors[] = {1e-6, 1e-4, 1e-2, 1e-1};

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& xs) {
  if (xs.empty()) throw validation_error("regression needs at least one input point");
  std::size_t d = xs.front().size();
  if (d == 0) throw validation_error("input points must have at least one dimension");
  Eigen::MatrixXd m(xs.size(), d);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].size() != d) throw validation_error("input points must share one dimension");
    for (std::size_t k = 0; k < d; ++k) {
      if (!std::isfinite(xs[i][k])) throw validation_error("input coordinates must be finite");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = xs[i][k];
    }
  }
  return m;
}

void check_params(const KernelParams& p, Eigen::Index dim) {
  if (p.lengthscales.size() != dim)
    throw validation_error("kernel needs one lengthscale per input dimension");
  for (Eigen::Index i = 0; i < dim; ++i)
    if (!std::isfinite(p.lengthscales[i]) || p.lengthscales[i] <= 0.0)
      throw validation_error("kernel lengthscales must be finite and positive");
  if (!std::isfinite(p.signal_variance) || p.signal_variance <= 0.0)
    throw validation_error("kernel signal variance must be finite and positive");
  if (!std::isfinite(p.noise_variance) || p.noise_variance < 0.0)
    throw validation_error("kernel noise variance must be finite and non-negative");
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& x, const KernelParams& p) {
  Eigen::Index n = x.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = p.signal_variance;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double v = matern52(x.row(i).transpose(), x.row(j).transpose(), p);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

/* Per-dimension median of pairwise absolute differences; 1.0 when degenerate. */
Eigen::VectorXd median_pairwise_distances(const Eigen::MatrixXd& x) {
  Eigen::Index n = x.rows();
  Eigen::Index d = x.cols();
  Eigen::VectorXd out(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    std::vector<double> dist;
    dist.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) dist.push_back(std::abs(x(i, k) - x(j, k)));
    double med = 0.0;
    if (!dist.empty()) {
      std::sort(dist.begin(), dist.end());
      std::size_t m = dist.size();
      med = m % 2 == 1 ? dist[m / 2] : 0.5 * (dist[m / 2 - 1] + dist[m / 2]);
    }
    out[k] = med > 0.0 ? med : 1.0;
  }
  return out;
}

}  // namespace

double matern52(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const KernelParams& p) {
  if (a.size() != b.size()) throw validation_error("kernel inputs must share one dimension");
  check_params(p, a.size());
  double r2 = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    double z = (a[i] - b[i]) / p.lengthscales[i];
    r2 += z * z;
  }
  double s = std::sqrt(5.0 * r2);
  return p.signal_variance * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

void GpModel::factorize() {
  Eigen::Index n = x_.rows();
  Eigen::MatrixXd k = kernel_matrix(x_, params_);
  for (double jitter : kJitterLadder) {
    Eigen::MatrixXd ky = k;
    ky.diagonal().array() += params_.noise_variance + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(ky);
    if (llt.info() != Eigen::Success) continue;
    chol_ = llt.matrixL();
    alpha_ = llt.solve(y_std_);
    jitter_ = jitter;
    double log_det_half = chol_.diagonal().array().log().sum();
    lml_ = -0.5 * y_std_.dot(alpha_) - log_det_half -
           0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
    return;
  }
  throw numerical_error("covariance factorization failed at every jitter level");
}

GpModel GpModel::fit(const std::vector<std::vector<double>>& xs, const std::vector<double>& ys) {
  Eigen::MatrixXd x = to_matrix(xs);
  if (ys.size() != static_cast<std::size_t>(x.rows()))
    throw validation_error("need exactly one target per input point");
  for (double y : ys)
    if (!std::isfinite(y)) throw validation_error("targets must be finite");

  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  double mean = y.mean();
  double var = (y.array() - mean).square().mean();
  double scale = var > 0.0 ? std::sqrt(var) : 1.0;
  Eigen::VectorXd y_std = (y.array() - mean) / scale;
  double var_std = (y_std.array() - y_std.mean()).square().mean();

  Eigen::VectorXd base = median_pairwise_distances(x);

  GpModel best;
  double best_lml = -std::numeric_limits<double>::infinity();
  bool found = false;
  std::string last_failure;
  for (double lf : kLengthscaleFactors) {
    for (double nf : kNoiseFactors) {
      GpModel m;
      m.x_ = x;
      m.y_std_ = y_std;
      m.y_mean_ = mean;
      m.y_scale_ = scale;
      m.params_.lengthscales = base * lf;
      m.params_.signal_variance = 1.0;
      m.params_.noise_variance = nf * var_std;
      try {
        m.factorize();
      } catch (const numerical_error& e) {
        last_failure = e.what();
        continue;
      }
      if (m.lml_ > best_lml) {
        best_lml = m.lml_;
        best = std::move(m);
        found = true;
      }
    }
  }
  if (!found) throw numerical_error("no hyperparameter candidate factorized: " + last_failure);
  return best;
}

GpModel GpModel::with_params(const std::vector<std::vector<double>>& xs,
                             const std::vector<double>& ys, const KernelParams& params) {
  GpModel m;
  m.x_ = to_matrix(xs);
  if (ys.size() != static_cast<std::size_t>(m.x_.rows()))
    throw validation_error("need exactly one target per input point");
  for (double y : ys)
    if (!std::isfinite(y)) throw validation_error("targets must be finite");
  check_params(params, m.x_.cols());
  m.y_std_ = Eigen::Map<const Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  m.y_mean_ = 0.0;
  m.y_scale_ = 1.0;
  m.params_ = params;
  m.factorize();
  return m;
}

PosteriorPrediction GpModel::predict(const Eigen::VectorXd& x) const {
  if (x.size() != x_.cols()) throw validation_error("query point has wrong dimension");
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i])) throw validation_error("query coordinates must be finite");
  Eigen::Index n = x_.rows();
  Eigen::VectorXd kx(n);
  for (Eigen::Index i = 0; i < n; ++i) kx[i] = matern52(x_.row(i).transpose(), x, params_);
  double mean_std = kx.dot(alpha_);
  Eigen::VectorXd w = chol_.triangularView<Eigen::Lower>().solve(kx);
  double var_std = params_.signal_variance - w.squaredNorm();
  var_std = std::max(var_std, 0.0);
  PosteriorPrediction out;
  out.mean = y_mean_ + y_scale_ * mean_std;
  out.variance = y_scale_ * y_scale_ * var_std;
  return out;
}

PosteriorPrediction GpModel::predict(const std::vector<double>& x) const {
  return predict(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())));
}

nlohmann::ordered_json GpModel::to_json() const {
  nlohmann::ordered_json j;
  j["n"] = size();
  j["dim"] = input_dim();
  std::vector<std::vector<double>> xs(size());
  for (std::size_t i = 0; i < size(); ++i) {
    xs[i].resize(input_dim());
    for (std::size_t k = 0; k < input_dim(); ++k)
      xs[i][k] = x_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
  }
  j["inputs"] = xs;
  std::vector<double> ys(size());
  for (std::size_t i = 0; i < size(); ++i)
    ys[i] = y_mean_ + y_scale_ * y_std_[static_cast<Eigen::Index>(i)];
  j["targets"] = ys;
  std::vector<double> ls(input_dim());
  for (std::size_t k = 0; k < input_dim(); ++k) ls[k] = params_.lengthscales[static_cast<Eigen::Index>(k)];
  j["lengthscales"] = ls;
  j["signal_variance"] = params_.signal_variance;
  j["noise_variance"] = params_.noise_variance;
  j["target_mean"] = y_mean_;
  j["target_scale"] = y_scale_;
  j["jitter"] = jitter_;
  j["log_marginal_likelihood"] = lml_;
  return j;
}

}  // namespace pstune
