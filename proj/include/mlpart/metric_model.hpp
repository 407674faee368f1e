#pragma once

#include "mlpart/hermite.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <iostream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mlpart {

enum class MetricKind { full, diagonal };
enum class Task { changepoint, cluster, ncuts };

/// Known cluster count, or penalized selection of K with lambda = 1 absorbed
/// into the scale of B. A known mode with k == 0 takes K from each sample.
struct KMode {
  bool known = false;
  int k = 0;

  static KMode known_k(int k = 0) { return {true, k}; }
  static KMode penalized() { return {false, 0}; }
  bool operator==(const KMode&) const = default;
};

/// Mahalanobis (pseudo-)metric B, either a full PSD matrix or Diag(b), b >= 0.
///
/// The trainable parameters are a P x P matrix for the full kind and a P x 1
/// column for the diagonal kind; subgradients share that shape.
class MetricModel {
 public:
  static MetricModel full(Eigen::MatrixXd b, Task task = Task::changepoint, KMode mode = KMode::penalized()) {
    if (b.rows() != b.cols()) throw std::invalid_argument("MetricModel: full metric must be square");
    return MetricModel(MetricKind::full, std::move(b), task, mode);
  }

  static MetricModel diagonal(Eigen::VectorXd b, Task task = Task::changepoint, KMode mode = KMode::penalized()) {
    return MetricModel(MetricKind::diagonal, Eigen::MatrixXd(b), task, mode);
  }

  static MetricModel identity(int dim, MetricKind kind, Task task = Task::changepoint,
                              KMode mode = KMode::penalized(), double scale = 1.0) {
    if (kind == MetricKind::full) return full(scale * Eigen::MatrixXd::Identity(dim, dim), task, mode);
    return diagonal(Eigen::VectorXd::Constant(dim, scale), task, mode);
  }

  MetricKind kind() const { return kind_; }
  Task task() const { return task_; }
  KMode k_mode() const { return mode_; }
  int dim() const { return static_cast<int>(params_.rows()); }
  const std::optional<HermiteConfig>& feature_config() const { return features_; }

  const Eigen::MatrixXd& parameters() const { return params_; }

  /// Dense P x P matrix B.
  Eigen::MatrixXd matrix() const {
    if (kind_ == MetricKind::full) return params_;
    return params_.col(0).asDiagonal();
  }

  MetricModel with_parameters(Eigen::MatrixXd params) const {
    if (params.rows() != params_.rows() || params.cols() != params_.cols())
      throw std::invalid_argument("MetricModel: parameter shape mismatch");
    MetricModel out = *this;
    out.params_ = std::move(params);
    return out;
  }
  MetricModel with_k_mode(KMode mode) const {
    MetricModel out = *this;
    out.mode_ = mode;
    return out;
  }
  MetricModel with_task(Task task) const {
    MetricModel out = *this;
    out.task_ = task;
    return out;
  }
  MetricModel with_feature_config(std::optional<HermiteConfig> cfg) const {
    MetricModel out = *this;
    out.features_ = std::move(cfg);
    return out;
  }

 private:
  MetricModel(MetricKind kind, Eigen::MatrixXd params, Task task, KMode mode)
      : kind_(kind), params_(std::move(params)), task_(task), mode_(mode) {}

  MetricKind kind_;
  Eigen::MatrixXd params_;
  Task task_;
  KMode mode_;
  std::optional<HermiteConfig> features_;
};

/// X B X^T.
inline Eigen::MatrixXd gram(const Eigen::MatrixXd& x, const MetricModel& model) {
  if (x.cols() != model.dim()) throw std::invalid_argument("gram: feature dimension does not match metric");
  Eigen::MatrixXd out;
  if (model.kind() == MetricKind::diagonal) {
    const Eigen::MatrixXd xw = x * model.parameters().col(0).asDiagonal();
    out = xw * x.transpose();
  } else {
    out = x * model.parameters() * x.transpose();
  }
  return 0.5 * (out + out.transpose());
}

/// Pooled PCA metric over all datasets (stacked, then centered).
///
/// Full kind: projector onto the top-d principal directions; when `d` is
/// unset, the smallest d explaining 90% of the variance. Diagonal kind:
/// per-dimension inverse variances scaled so the largest weight is 1
/// (constant dimensions get weight 0).
inline MetricModel pca_init(std::span<const Eigen::MatrixXd> datasets, std::optional<int> d, MetricKind kind,
                            Task task = Task::changepoint, KMode mode = KMode::penalized()) {
  if (datasets.empty()) throw std::invalid_argument("pca_init: at least one dataset is required");
  const Eigen::Index p = datasets.front().cols();
  Eigen::Index rows = 0;
  for (const auto& x : datasets) {
    if (x.cols() != p) throw std::invalid_argument("pca_init: datasets disagree on feature dimension");
    rows += x.rows();
  }
  Eigen::MatrixXd stacked(rows, p);
  Eigen::Index at = 0;
  for (const auto& x : datasets) {
    stacked.middleRows(at, x.rows()) = x;
    at += x.rows();
  }
  stacked.rowwise() -= stacked.colwise().mean();
  const double denom = std::max<Eigen::Index>(rows - 1, 1);

  if (kind == MetricKind::diagonal) {
    Eigen::VectorXd var = stacked.colwise().squaredNorm().transpose() / denom;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
    for (Eigen::Index j = 0; j < p; ++j)
      if (var(j) > 0.0) b(j) = 1.0 / var(j);
    if (b.maxCoeff() > 0.0) b /= b.maxCoeff();
    return MetricModel::diagonal(b, task, mode);
  }

  const Eigen::MatrixXd cov = stacked.transpose() * stacked / denom;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  // Descending order.
  const Eigen::VectorXd values = eig.eigenvalues().reverse();
  const Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();
  const double total = values.cwiseMax(0.0).sum();
  const double tol = 1e-12 * std::max(1.0, values.cwiseAbs().maxCoeff());
  int rank = 0;
  for (Eigen::Index j = 0; j < p; ++j)
    if (values(j) > tol) ++rank;

  int keep = 0;
  if (d) {
    if (*d < 1 || *d > p) throw std::invalid_argument("pca_init: d must lie in [1, P]");
    keep = *d;
  } else {
    double acc = 0.0;
    while (keep < p && (total <= 0.0 || acc < 0.9 * total)) acc += std::max(values(keep++), 0.0);
  }
  if (keep > rank) {
    std::cerr << "warning: pca_init: reducing d from " << keep << " to data rank " << rank << "\n";
    keep = std::max(rank, 1);
  }
  const Eigen::MatrixXd u = vectors.leftCols(keep);
  return MetricModel::full(u * u.transpose(), task, mode);
}

enum class RegKind { frobenius_sq, l1_diag, trace };

struct Regularizer {
  RegKind kind = RegKind::frobenius_sq;
  double weight = 1e-3;
};

struct RegValue {
  double value = 0.0;
  Eigen::MatrixXd subgradient;  // shaped like MetricModel::parameters()
};

inline RegValue reg_value_and_subgrad(const MetricModel& model, const Regularizer& reg) {
  const Eigen::MatrixXd& w = model.parameters();
  const double mu = reg.weight;
  switch (reg.kind) {
    case RegKind::frobenius_sq:
      return {0.5 * mu * w.squaredNorm(), mu * w};
    case RegKind::l1_diag:
      if (model.kind() != MetricKind::diagonal)
        throw std::invalid_argument("reg_value_and_subgrad: l1 penalty requires a diagonal metric");
      // b >= 0 is maintained by projection, so |b| = b and the sign is fixed.
      return {mu * w.sum(), Eigen::MatrixXd::Constant(w.rows(), 1, mu)};
    case RegKind::trace:
      if (model.kind() == MetricKind::diagonal) return {mu * w.sum(), Eigen::MatrixXd::Constant(w.rows(), 1, mu)};
      return {mu * w.trace(), mu * Eigen::MatrixXd::Identity(w.rows(), w.cols())};
  }
  throw std::logic_error("unreachable");
}

/// Euclidean projection onto the feasible set (PSD cone / nonnegative orthant).
inline MetricModel project(const MetricModel& model) {
  if (model.kind() == MetricKind::diagonal) return model.with_parameters(model.parameters().cwiseMax(0.0));
  const Eigen::MatrixXd sym = 0.5 * (model.parameters() + model.parameters().transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.eigenvalues().minCoeff() >= 0.0) return model.with_parameters(sym);
  const Eigen::MatrixXd& v = eig.eigenvectors();
  Eigen::MatrixXd clipped = v * eig.eigenvalues().cwiseMax(0.0).asDiagonal() * v.transpose();
  return model.with_parameters(0.5 * (clipped + clipped.transpose()));
}

}  // namespace mlpart
