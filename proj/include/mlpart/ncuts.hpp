#pragma once

#include "mlpart/metric_model.hpp"
#include "mlpart/partition.hpp"
#include "mlpart/spectral.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace mlpart {

/// Pairwise similarities in (0, 1] with unit diagonal.
struct SimilarityMatrix {
  Eigen::MatrixXd w;
};

/// (W_B)_ij = exp(-(x_i - x_j)^T B (x_i - x_j)).
inline SimilarityMatrix gaussian_similarity(const Eigen::MatrixXd& x, const MetricModel& model) {
  const Eigen::MatrixXd g = gram(x, model);
  const Eigen::Index n = x.rows();
  SimilarityMatrix s{Eigen::MatrixXd::Ones(n, n)};
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d2 = std::max(0.0, g(i, i) + g(j, j) - 2.0 * g(i, j));
      s.w(i, j) = s.w(j, i) = std::exp(-d2);
    }
  return s;
}

/// Diag(W1)^{-1/2} W Diag(W1)^{-1/2}.
inline Eigen::MatrixXd normalize_similarity(const SimilarityMatrix& s) {
  const Eigen::VectorXd deg = s.w.rowwise().sum();
  if ((deg.array() <= 0.0).any()) throw std::invalid_argument("normalize_similarity: zero row sum");
  const Eigen::VectorXd inv_sqrt = deg.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd out = inv_sqrt.asDiagonal() * s.w * inv_sqrt.asDiagonal();
  return 0.5 * (out + out.transpose());
}

/// Gradient in B of sum_jk C_jk (W_B)_jk, shaped like model.parameters():
///   -sum_jk C_jk W_jk (x_j - x_k)(x_j - x_k)^T = -2 X^T (Diag(S 1) - S) X,  S = sym(C) .* W.
inline Eigen::MatrixXd similarity_gradient(const Eigen::MatrixXd& x, const MetricModel& model,
                                           const SimilarityMatrix& s, const Eigen::MatrixXd& weights) {
  if (weights.rows() != x.rows() || weights.cols() != x.rows())
    throw std::invalid_argument("similarity_gradient: weight matrix shape mismatch");
  const Eigen::MatrixXd sw = (0.5 * (weights + weights.transpose())).cwiseProduct(s.w);
  Eigen::MatrixXd lap = -sw;
  lap.diagonal() += sw.rowwise().sum();
  const Eigen::MatrixXd g = -2.0 * x.transpose() * lap * x;
  if (model.kind() == MetricKind::diagonal) return g.diagonal();
  return 0.5 * (g + g.transpose());
}

/// Spectral relaxation of max tr(WM) over K-partitions, rounded by k-means.
inline Partition ncut_decode(const SimilarityMatrix& s, int k, std::uint64_t seed, int restarts = 10) {
  if (k < 1) throw std::invalid_argument("ncut_decode: k must be >= 1");
  return round_projector(spectral_relax_k(s.w, k), k, seed, restarts);
}

}  // namespace mlpart
