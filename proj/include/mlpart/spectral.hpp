#pragma once

#include "mlpart/dp_solver.hpp"
#include "mlpart/metric_model.hpp"
#include "mlpart/partition.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace mlpart {

/// Orthogonal projector M = basis basis^T onto selected eigenvectors of A.
struct SpectralProjector {
  Eigen::MatrixXd m;
  int k = 0;
  Eigen::MatrixXd basis;        // T x k, orthonormal columns
  double value = 0.0;           // tr(AM) = sum of the selected eigenvalues
  Eigen::VectorXd eigenvalues;  // full spectrum of A, descending
};

namespace detail {

struct DescendingEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

inline DescendingEigen eig_descending(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (a + a.transpose()));
  if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  return {eig.eigenvalues().reverse(), eig.eigenvectors().rowwise().reverse()};
}

inline SpectralProjector projector_from(DescendingEigen e, int k) {
  SpectralProjector out;
  out.k = k;
  out.basis = e.vectors.leftCols(k);
  out.m = out.basis * out.basis.transpose();
  out.value = e.values.head(k).sum();
  out.eigenvalues = std::move(e.values);
  return out;
}

}  // namespace detail

/// max tr(AM) over projectors of rank k: the k leading eigenvectors of A.
inline SpectralProjector spectral_relax_k(const Eigen::MatrixXd& a, int k) {
  detail::require_symmetric(a, "spectral_relax_k");
  if (k < 1 || k > a.rows()) throw std::invalid_argument("spectral_relax_k: k must lie in [1, T]");
  return detail::projector_from(detail::eig_descending(a), k);
}

/// max tr(AM) over all projectors: eigenvectors with strictly positive
/// eigenvalue. Eigenvalues within rounding of zero count as zero.
inline SpectralProjector spectral_relax_auto(const Eigen::MatrixXd& a) {
  detail::require_symmetric(a, "spectral_relax_auto");
  auto e = detail::eig_descending(a);
  const double zero = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, e.values.cwiseAbs().maxCoeff());
  int k = 0;
  while (k < e.values.size() && e.values(k) > zero) ++k;
  return detail::projector_from(std::move(e), k);
}

struct KMeansResult {
  Partition partition;
  Eigen::MatrixXd centroids;  // K x P, cluster means in the original coordinates
  double distortion = 0.0;    // sum_i (x_i - c_{y_i})^T B (x_i - c_{y_i})
  std::vector<double> history;  // distortion after each Lloyd iteration of the winning restart
};

namespace detail {

struct LloydRun {
  std::vector<int> assign;
  double distortion = std::numeric_limits<double>::infinity();
  std::vector<double> history;
};

inline double sq_dist(const Eigen::MatrixXd& z, Eigen::Index i, const Eigen::MatrixXd& c, Eigen::Index j) {
  return (z.row(i) - c.row(j)).squaredNorm();
}

inline Eigen::MatrixXd cluster_means(const Eigen::MatrixXd& z, const std::vector<int>& assign, int k) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(k, z.cols());
  std::vector<int> count(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    c.row(assign[static_cast<std::size_t>(i)]) += z.row(i);
    ++count[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
  }
  for (int j = 0; j < k; ++j)
    if (count[static_cast<std::size_t>(j)] > 0) c.row(j) /= count[static_cast<std::size_t>(j)];
  return c;
}

inline LloydRun lloyd(const Eigen::MatrixXd& z, int k, std::mt19937_64& rng, int max_iter) {
  const Eigen::Index n = z.rows();
  // k-means++ seeding.
  Eigen::MatrixXd centers(k, z.cols());
  std::vector<char> chosen(static_cast<std::size_t>(n), 0);
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  for (int j = 0; j < k; ++j) {
    Eigen::Index pick = 0;
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!chosen[static_cast<std::size_t>(i)]) total += j == 0 ? 1.0 : d2[static_cast<std::size_t>(i)];
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng);
      Eigen::Index last = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (chosen[static_cast<std::size_t>(i)]) continue;
        const double w = j == 0 ? 1.0 : d2[static_cast<std::size_t>(i)];
        if (w <= 0.0) continue;
        last = i;
        if (r < w) break;
        r -= w;
      }
      pick = last;
    } else {
      // Every remaining point coincides with a center: take the first unused one.
      while (pick < n && chosen[static_cast<std::size_t>(pick)]) ++pick;
    }
    chosen[static_cast<std::size_t>(pick)] = 1;
    centers.row(j) = z.row(pick);
    for (Eigen::Index i = 0; i < n; ++i)
      d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], sq_dist(z, i, centers, j));
  }

  LloydRun run;
  run.assign.assign(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& a = run.assign[static_cast<std::size_t>(i)];
      int best = a;
      double best_d = a >= 0 ? sq_dist(z, i, centers, a) : std::numeric_limits<double>::infinity();
      for (int j = 0; j < k; ++j) {
        const double d = sq_dist(z, i, centers, j);
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      if (best != a) {
        a = best;
        changed = true;
      }
    }
    // Empty clusters take the point farthest from its center among clusters
    // that can spare one.
    std::vector<int> count(static_cast<std::size_t>(k), 0);
    for (int a : run.assign) ++count[static_cast<std::size_t>(a)];
    for (int j = 0; j < k; ++j) {
      if (count[static_cast<std::size_t>(j)] > 0) continue;
      Eigen::Index far = -1;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int a = run.assign[static_cast<std::size_t>(i)];
        if (count[static_cast<std::size_t>(a)] < 2) continue;
        const double d = sq_dist(z, i, centers, a);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      --count[static_cast<std::size_t>(run.assign[static_cast<std::size_t>(far)])];
      run.assign[static_cast<std::size_t>(far)] = j;
      ++count[static_cast<std::size_t>(j)];
      centers.row(j) = z.row(far);
      changed = true;
    }
    centers = cluster_means(z, run.assign, k);
    double distortion = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) distortion += sq_dist(z, i, centers, run.assign[static_cast<std::size_t>(i)]);
    run.history.push_back(distortion);
    run.distortion = distortion;
    if (!changed) break;
  }
  return run;
}

/// Rows of X mapped so that Euclidean distances equal B-distances.
inline Eigen::MatrixXd whiten(const Eigen::MatrixXd& x, const Eigen::MatrixXd& b) {
  if (b.rows() != x.cols() || b.cols() != x.cols()) throw std::invalid_argument("kmeans: metric dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (b + b.transpose()));
  const Eigen::MatrixXd root = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  return x * root;
}

}  // namespace detail

/// Lloyd's algorithm under the Mahalanobis metric B, best of `restarts`
/// k-means++ initializations (lowest distortion, ties to the earliest restart).
inline KMeansResult kmeans(const Eigen::MatrixXd& x, const Eigen::MatrixXd& b, int k, int restarts, std::uint64_t seed,
                           int max_iter = 300) {
  if (k < 1 || k > x.rows()) throw std::invalid_argument("kmeans: k must lie in [1, T]");
  if (restarts < 1) throw std::invalid_argument("kmeans: restarts must be >= 1");
  const Eigen::MatrixXd z = detail::whiten(x, b);
  detail::LloydRun best;
  for (int r = 0; r < restarts; ++r) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng(seq);
    auto run = detail::lloyd(z, k, rng, max_iter);
    if (run.distortion < best.distortion) best = std::move(run);
  }
  // Relabel by first appearance; centroids are recomputed in that order.
  const auto partition = Partition::canonical(best.assign, false);
  const Eigen::MatrixXd means = detail::cluster_means(x, partition.labels(), k);
  return {partition, means, best.distortion, std::move(best.history)};
}

inline KMeansResult kmeans(const Eigen::MatrixXd& x, const MetricModel& model, int k, int restarts,
                           std::uint64_t seed) {
  return kmeans(x, model.matrix(), k, restarts, seed);
}

/// Rounds a relaxed projector to a genuine K-partition: k-means on the unit-
/// normalized rows of the eigenvector basis. Exactly-zero rows go to cluster 0.
inline Partition round_projector(const SpectralProjector& proj, int k, std::uint64_t seed, int restarts = 10) {
  if (k < 1) throw std::invalid_argument("round_projector: k must be >= 1");
  const Eigen::Index n = proj.m.rows();
  if (k > n) throw std::invalid_argument("round_projector: k exceeds the number of items");
  if (k == 1) return Partition::single(static_cast<int>(n), false);
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(n, std::max<Eigen::Index>(proj.basis.cols(), k));
  rows.leftCols(proj.basis.cols()) = proj.basis;
  std::vector<Eigen::Index> nonzero;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = rows.row(i).norm();
    if (norm > 1e-12) {
      rows.row(i) /= norm;
      nonzero.push_back(i);
    }
  }
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(rows.cols(), rows.cols());
  if (static_cast<Eigen::Index>(nonzero.size()) < k || static_cast<Eigen::Index>(nonzero.size()) == n)
    return kmeans(rows, id, k, restarts, seed).partition;

  Eigen::MatrixXd sub(static_cast<Eigen::Index>(nonzero.size()), rows.cols());
  for (std::size_t r = 0; r < nonzero.size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = rows.row(nonzero[r]);
  const auto inner = kmeans(sub, id, k, restarts, seed).partition;
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  for (std::size_t r = 0; r < nonzero.size(); ++r) labels[static_cast<std::size_t>(nonzero[r])] = inner.labels()[r];
  return Partition::canonical(labels, false);
}

}  // namespace mlpart
