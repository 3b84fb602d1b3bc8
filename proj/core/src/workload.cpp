// Copyright 2026 the pstune authors
// SPDX-License-Identifier: Apache-2.0

#include "pstune/workload.hpp"

#include <cmath>

#include "pstune/errors.hpp"
#include "pstune/rng.hpp"

namespace pstune {

WorkloadKind workload_kind_from_name(const std::string& name) {
  if (name == "quadratic") return WorkloadKind::Quadratic;
  if (name == "logistic_regression_l2") return WorkloadKind::LogisticRegressionL2;
  if (name == "linear_svm_l2") return WorkloadKind::LinearSvmL2;
  throw config_error("unknown workload kind: " + name);
}

std::string workload_kind_name(WorkloadKind k) {
  switch (k) {
    case WorkloadKind::Quadratic: return "quadratic";
    case WorkloadKind::LogisticRegressionL2: return "logistic_regression_l2";
    case WorkloadKind::LinearSvmL2: return "linear_svm_l2";
  }
  return "unknown";
}

namespace {

void validate_spec(const WorkloadSpec& s) {
  if (s.dimension < 1) throw config_error("workload dimension must be positive");
  if (s.n_examples < 1) throw config_error("workload needs at least one example");
  if (s.kind == WorkloadKind::Quadratic) {
    if (!(s.eigen_min > 0.0) || !(s.eigen_max >= s.eigen_min))
      throw config_error("quadratic curvature range needs 0 < eigen_min <= eigen_max");
  } else {
    if (s.l2_strength < 0.0) throw config_error("l2 strength must be non-negative");
    if (s.label_noise < 0.0 || s.label_noise >= 0.5)
      throw config_error("label noise must lie in [0, 0.5)");
  }
}

Eigen::MatrixXd random_orthogonal(int dim, Rng& rng) {
  Eigen::MatrixXd g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  return q;
}

double stable_log1p_exp(double v) {
  // log(1 + e^v) without overflow
  return v > 30.0 ? v : std::log1p(std::exp(v));
}

}  // namespace

Workload Workload::generate(const WorkloadSpec& spec) {
  validate_spec(spec);
  Workload w;
  w.spec_ = spec;
  w.dim_ = spec.dimension;
  w.n_ = spec.n_examples;
  Rng rng(mix_seed(spec.seed, 0xDA7A));

  if (spec.kind == WorkloadKind::Quadratic) {
    int d = w.dim_;
    Eigen::VectorXd eig(d);
    for (int i = 0; i < d; ++i) {
      double f = d == 1 ? 0.0 : static_cast<double>(i) / (d - 1);
      eig[i] = spec.eigen_min * std::pow(spec.eigen_max / spec.eigen_min, f);
    }
    Eigen::MatrixXd q = random_orthogonal(d, rng);
    Eigen::MatrixXd a = q * eig.asDiagonal() * q.transpose();
    a = 0.5 * (a + a.transpose());  // keep exact symmetry after the products

    /* Zero-mean symmetric perturbations, Gershgorin-bounded so that every
     * A_i = A + E_i keeps its spectrum above 0.1 * eigen_min. Centering can
     * double an entry, hence the extra factor of two in the denominator. */
    double margin = 0.9 * spec.eigen_min;
    double entry_scale = margin / (2.0 * static_cast<double>(d));
    std::vector<Eigen::MatrixXd> perturb(w.n_, Eigen::MatrixXd::Zero(d, d));
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        double mean_entry = 0.0;
        std::vector<double> vals(w.n_);
        for (int e = 0; e < w.n_; ++e) {
          vals[e] = entry_scale * rng.uniform(-1.0, 1.0);
          mean_entry += vals[e];
        }
        mean_entry /= static_cast<double>(w.n_);
        for (int e = 0; e < w.n_; ++e) {
          double v = vals[e] - mean_entry;
          perturb[e](i, j) = v;
          perturb[e](j, i) = v;
        }
      }
    w.quadratics_.reserve(w.n_);
    for (int e = 0; e < w.n_; ++e) w.quadratics_.push_back(a + perturb[e]);

    w.w_star_ = Eigen::VectorXd(d);
    for (int i = 0; i < d; ++i) w.w_star_[i] = rng.normal();
    w.w_star_ *= 1.0 / std::max(w.w_star_.norm(), 1e-12);

    w.smoothness_ = eig.maxCoeff() + margin;
    w.curvature_ = std::max(spec.eigen_min - margin, 0.05 * spec.eigen_min);
  } else {
    Eigen::VectorXd w_true(w.dim_);
    for (int i = 0; i < w.dim_; ++i) w_true[i] = rng.normal();
    w_true *= 1.0 / std::max(w_true.norm(), 1e-12);
    w.features_ = Eigen::MatrixXd(w.n_, w.dim_);
    w.labels_ = Eigen::VectorXd(w.n_);
    for (int e = 0; e < w.n_; ++e) {
      for (int i = 0; i < w.dim_; ++i) w.features_(e, i) = rng.normal();
      double score = w.features_.row(e).dot(w_true);
      double label = score >= 0.0 ? 1.0 : -1.0;
      if (rng.uniform01() < spec.label_noise) label = -label;
      w.labels_[e] = label;
    }
    double max_sq = 0.0;
    for (int e = 0; e < w.n_; ++e) max_sq = std::max(max_sq, w.features_.row(e).squaredNorm());
    w.smoothness_ = 0.25 * max_sq + spec.l2_strength;
    w.curvature_ = std::max(spec.l2_strength, 1e-6);
    w.w_star_ = Eigen::VectorXd::Zero(w.dim_);
  }
  return w;
}

double Workload::example_loss(const Eigen::VectorXd& w, std::size_t i) const {
  if (i >= static_cast<std::size_t>(n_)) throw validation_error("example index out of range");
  switch (spec_.kind) {
    case WorkloadKind::Quadratic: {
      Eigen::VectorXd e = w - w_star_;
      return 0.5 * e.dot(quadratics_[i] * e);
    }
    case WorkloadKind::LogisticRegressionL2: {
      double margin = labels_[static_cast<Eigen::Index>(i)] *
                      features_.row(static_cast<Eigen::Index>(i)).dot(w);
      return stable_log1p_exp(-margin) + 0.5 * spec_.l2_strength * w.squaredNorm();
    }
    case WorkloadKind::LinearSvmL2: {
      double margin = labels_[static_cast<Eigen::Index>(i)] *
                      features_.row(static_cast<Eigen::Index>(i)).dot(w);
      return std::max(0.0, 1.0 - margin) + 0.5 * spec_.l2_strength * w.squaredNorm();
    }
  }
  throw validation_error("unhandled workload kind");
}

void Workload::accumulate_example_gradient(const Eigen::VectorXd& w, std::size_t i,
                                           Eigen::VectorXd& acc) const {
  if (i >= static_cast<std::size_t>(n_)) throw validation_error("example index out of range");
  switch (spec_.kind) {
    case WorkloadKind::Quadratic:
      acc.noalias() += quadratics_[i] * (w - w_star_);
      return;
    case WorkloadKind::LogisticRegressionL2: {
      Eigen::Index e = static_cast<Eigen::Index>(i);
      double margin = labels_[e] * features_.row(e).dot(w);
      double sig = 1.0 / (1.0 + std::exp(margin));  // d/dm log(1+e^-m) = -sigmoid(-m)
      acc.noalias() += (-labels_[e] * sig) * features_.row(e).transpose();
      acc.noalias() += spec_.l2_strength * w;
      return;
    }
    case WorkloadKind::LinearSvmL2: {
      Eigen::Index e = static_cast<Eigen::Index>(i);
      double margin = labels_[e] * features_.row(e).dot(w);
      if (margin < 1.0) acc.noalias() += -labels_[e] * features_.row(e).transpose();
      acc.noalias() += spec_.l2_strength * w;
      return;
    }
  }
  throw validation_error("unhandled workload kind");
}

double Workload::minibatch_loss(const Eigen::VectorXd& w,
                                const std::vector<std::size_t>& batch) const {
  if (batch.empty()) throw validation_error("minibatch must be non-empty");
  double s = 0.0;
  for (std::size_t i : batch) s += example_loss(w, i);
  return s / static_cast<double>(batch.size());
}

Eigen::VectorXd Workload::minibatch_gradient(const Eigen::VectorXd& w,
                                             const std::vector<std::size_t>& batch) const {
  if (batch.empty()) throw validation_error("minibatch must be non-empty");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim_);
  for (std::size_t i : batch) accumulate_example_gradient(w, i, g);
  return g / static_cast<double>(batch.size());
}

double Workload::empirical_risk(const Eigen::VectorXd& w) const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i) s += example_loss(w, static_cast<std::size_t>(i));
  return s / static_cast<double>(n_);
}

}  // namespace pstune
