#pragma once

#include "mlpart/partition.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace mlpart {

// ---------------------------------------------------------------------------
// Frobenius partition loss
// ---------------------------------------------------------------------------

/// (1/T) ||M - N||_F^2. Accepts any pair of T x T matrices, so relaxed
/// projectors can be compared against rescaled equivalence matrices.
inline double frobenius_loss(const Eigen::MatrixXd& m, const Eigen::MatrixXd& n) {
  if (m.rows() != n.rows() || m.cols() != n.cols() || m.rows() != m.cols())
    throw std::invalid_argument("partition_loss: dimension mismatch");
  return (m - n).squaredNorm() / static_cast<double>(m.rows());
}

/// (1/T) (tr M + tr N - 2 tr(MN)); equal to frobenius_loss for symmetric
/// idempotent arguments.
inline double trace_form_loss(const Eigen::MatrixXd& m, const Eigen::MatrixXd& n) {
  if (m.rows() != n.rows() || m.cols() != n.cols() || m.rows() != m.cols())
    throw std::invalid_argument("partition_loss: dimension mismatch");
  const double cross = (m.array() * n.transpose().array()).sum();
  return (m.trace() + n.trace() - 2.0 * cross) / static_cast<double>(m.rows());
}

inline double partition_loss(const RescaledEquivalence& m, const RescaledEquivalence& n) {
  return frobenius_loss(m.m, n.m);
}

// ---------------------------------------------------------------------------
// Contingency table
// ---------------------------------------------------------------------------

struct ContingencyTable {
  Eigen::MatrixXi counts;  // counts(k, l) = |P_k ∩ Q_l|
  std::vector<int> row_sizes;
  std::vector<int> col_sizes;

  int total() const { return counts.sum(); }
  int rows() const { return static_cast<int>(counts.rows()); }
  int cols() const { return static_cast<int>(counts.cols()); }
};

inline ContingencyTable contingency(const Partition& p, const Partition& q) {
  if (p.size() != q.size()) throw std::invalid_argument("contingency: dimension mismatch");
  ContingencyTable c{Eigen::MatrixXi::Zero(p.num_clusters(), q.num_clusters()), p.cluster_sizes(),
                     q.cluster_sizes()};
  for (int t = 0; t < p.size(); ++t) ++c.counts(p[t], q[t]);
  return c;
}

/// Sum over cells of n_kl^2 / (|P_k| |Q_l|).
inline double association(const ContingencyTable& c) {
  double s = 0.0;
  for (int k = 0; k < c.rows(); ++k)
    for (int l = 0; l < c.cols(); ++l) {
      const double n = c.counts(k, l);
      if (n > 0) s += n * n / (static_cast<double>(c.row_sizes[k]) * c.col_sizes[l]);
    }
  return s;
}

/// Pearson chi-square statistic of the table against independence.
inline double chi_square(const ContingencyTable& c) {
  const double total = c.total();
  double chi2 = 0.0;
  for (int k = 0; k < c.rows(); ++k)
    for (int l = 0; l < c.cols(); ++l) {
      const double expected = static_cast<double>(c.row_sizes[k]) * c.col_sizes[l] / total;
      const double d = c.counts(k, l) - expected;
      chi2 += d * d / expected;
    }
  return chi2;
}

/// (1/T)(K1 + K2 - 2 sum n_kl^2 / (|P_k||Q_l|)), the loss computed without
/// forming any T x T matrix.
inline double contingency_loss(const ContingencyTable& c) {
  return (c.rows() + c.cols() - 2.0 * association(c)) / static_cast<double>(c.total());
}

inline double partition_loss(const Partition& p, const Partition& q) {
  return contingency_loss(contingency(p, q));
}

// ---------------------------------------------------------------------------
// Rand index
// ---------------------------------------------------------------------------

inline double rand_index(const Partition& p, const Partition& q) {
  if (p.size() != q.size()) throw std::invalid_argument("rand_index: dimension mismatch");
  if (p.size() < 2) throw std::invalid_argument("rand_index: requires T >= 2");
  const auto c = contingency(p, q);
  auto pairs = [](double n) { return n * (n - 1.0) / 2.0; };
  double same_both = 0.0, same_p = 0.0, same_q = 0.0;
  for (int k = 0; k < c.rows(); ++k)
    for (int l = 0; l < c.cols(); ++l) same_both += pairs(c.counts(k, l));
  for (int s : c.row_sizes) same_p += pairs(s);
  for (int s : c.col_sizes) same_q += pairs(s);
  const double all = pairs(p.size());
  const double discordant = same_p + same_q - 2.0 * same_both;
  return (all - discordant) / all;
}

// ---------------------------------------------------------------------------
// Hausdorff distance between segmentations
// ---------------------------------------------------------------------------

/// Interior boundaries mapped into [0, 1]: a cut after item t (1-based) is t/T.
inline std::vector<double> frontier(const Partition& p) {
  if (!p.sequential()) throw std::invalid_argument("frontier: partition is not sequential");
  std::vector<double> out;
  for (int b : p.breaks()) out.push_back(static_cast<double>(b) / p.size());
  return out;
}

struct HausdorffResult {
  double distance = 0.0;
  /// False when exactly one frontier is empty; `distance` is then +inf.
  bool comparable = true;
};

inline double directed_hausdorff(const std::vector<double>& from, const std::vector<double>& to) {
  double worst = 0.0;
  for (double x : from) {
    double nearest = std::numeric_limits<double>::infinity();
    for (double y : to) nearest = std::min(nearest, std::abs(x - y));
    worst = std::max(worst, nearest);
  }
  return worst;
}

inline HausdorffResult hausdorff_sets(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() && b.empty()) return {0.0, true};
  if (a.empty() || b.empty()) return {std::numeric_limits<double>::infinity(), false};
  return {std::max(directed_hausdorff(a, b), directed_hausdorff(b, a)), true};
}

inline HausdorffResult hausdorff(const Partition& p, const Partition& q) {
  if (!p.sequential() || !q.sequential())
    throw std::invalid_argument("hausdorff: both partitions must be sequential");
  if (p.size() != q.size()) throw std::invalid_argument("hausdorff: dimension mismatch");
  return hausdorff_sets(frontier(p), frontier(q));
}

// ---------------------------------------------------------------------------
// Flow statistics and the small-perturbation loss expansion
// ---------------------------------------------------------------------------

struct FlowStats {
  std::vector<double> eps_out;                // items of P_k that land outside Q_k
  std::vector<double> eps_in;                 // items of Q_k that come from other P_l
  std::vector<std::vector<double>> eps_pair;  // eps_pair[k][l] = |P_k ∩ Q_l|, zero on the diagonal
  double m_pq = 0.0;
  /// alignment[k] is the cluster of Q paired with cluster k of P.
  std::vector<int> alignment;
};

/// Greedy maximal-overlap matching of the clusters of Q onto those of P.
/// Ties go to the lowest P index, then the lowest Q index.
inline std::vector<int> align_clusters(const ContingencyTable& c) {
  const int k = c.rows();
  std::vector<int> match(static_cast<std::size_t>(k), -1);
  std::vector<char> p_used(static_cast<std::size_t>(k), 0), q_used(static_cast<std::size_t>(k), 0);
  for (int round = 0; round < k; ++round) {
    int best = -1, bk = -1, bl = -1;
    for (int i = 0; i < k; ++i) {
      if (p_used[i]) continue;
      for (int j = 0; j < k; ++j) {
        if (q_used[j]) continue;
        if (c.counts(i, j) > best) {
          best = c.counts(i, j);
          bk = i;
          bl = j;
        }
      }
    }
    match[bk] = bl;
    p_used[bk] = 1;
    q_used[bl] = 1;
  }
  return match;
}

inline FlowStats flow_stats(const Partition& p, const Partition& q) {
  if (p.size() != q.size()) throw std::invalid_argument("flow_stats: dimension mismatch");
  if (p.num_clusters() != q.num_clusters())
    throw std::invalid_argument("flow_stats: partitions must have the same number of clusters");
  const int k = p.num_clusters();
  const auto c = contingency(p, q);
  FlowStats f;
  f.alignment = align_clusters(c);
  f.eps_out.assign(k, 0.0);
  f.eps_in.assign(k, 0.0);
  f.eps_pair.assign(k, std::vector<double>(k, 0.0));
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      if (a == b) continue;
      const double n = c.counts(a, f.alignment[b]);
      f.eps_pair[a][b] = n;
      f.eps_out[a] += n;
      f.eps_in[b] += n;
      const double denom = std::min(c.row_sizes[a], c.row_sizes[b]);
      f.m_pq = std::max(f.m_pq, n / denom);
    }
  return f;
}

struct AsymptoticCheck {
  double loss_exact = 0.0;   // T * loss = ||M - N||_F^2
  double loss_approx = 0.0;  // 2 sum_k (eps_out + eps_in) / |P_k|
  /// loss_exact / loss_approx; empty when loss_approx is zero.
  std::optional<double> ratio;
};

inline AsymptoticCheck check_asymptotic_bound(const Partition& p, const Partition& q) {
  const auto f = flow_stats(p, q);
  const auto sizes = p.cluster_sizes();
  AsymptoticCheck out;
  out.loss_exact = p.size() * partition_loss(p, q);
  for (std::size_t k = 0; k < sizes.size(); ++k) out.loss_approx += (f.eps_out[k] + f.eps_in[k]) / sizes[k];
  out.loss_approx *= 2.0;
  if (out.loss_approx > 0.0) out.ratio = out.loss_exact / out.loss_approx;
  return out;
}

// ---------------------------------------------------------------------------
// Equivalence between the Frobenius loss and the Hausdorff distance
// ---------------------------------------------------------------------------

struct HausdorffBounds {
  double epsilon = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double loss = 0.0;  // ||M - N||_F^2
  /// |P| = |Q| and epsilon < l_min(P) / 2.
  bool applicable = false;
  bool within_bounds = true;  // lower <= loss <= upper, checked only when applicable
  double unconditional_lower = 0.0;
  bool unconditional_holds = true;
};

inline HausdorffBounds check_hausdorff_bounds(const Partition& p, const Partition& q) {
  if (!p.sequential() || !q.sequential())
    throw std::invalid_argument("check_hausdorff_bounds: both partitions must be sequential");
  constexpr double slack = 1e-12;
  const double n = p.size();
  const auto hp = hausdorff(p, q);
  auto normalized = [n](const std::vector<int>& sizes) {
    const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
    return std::pair{*lo / n, *hi / n};
  };
  const auto [lmin_p, lmax_p] = normalized(p.cluster_sizes());
  const double lmin_q = normalized(q.cluster_sizes()).first;

  HausdorffBounds out;
  out.loss = n * partition_loss(p, q);
  if (!hp.comparable) {
    out.epsilon = hp.distance;
    return out;
  }
  out.epsilon = hp.distance;
  out.unconditional_lower = out.epsilon / std::max(lmax_p, lmin_q);
  out.unconditional_holds = out.loss + slack >= out.unconditional_lower;
  out.applicable = p.num_clusters() == q.num_clusters() && out.epsilon < lmin_p / 2.0;
  if (out.applicable) {
    out.lower = out.epsilon / lmax_p;
    out.upper = 12.0 * p.num_clusters() * out.epsilon / lmin_p;
    out.within_bounds = out.lower <= out.loss + slack && out.loss <= out.upper + slack;
  }
  return out;
}

}  // namespace mlpart
