#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlpart {

/// A partition of T items into K clusters, stored as a label sequence.
///
/// Labels are cluster ids in [0, K) and every id is used. A sequential
/// partition (change-point segmentation) additionally has contiguous segments
/// with labels 0, 1, ..., K-1 in order, so its boundaries are implied by the
/// positions where the label increments.
class Partition {
 public:
  Partition(std::vector<int> labels, bool sequential)
      : labels_(std::move(labels)), sequential_(sequential) {
    validate();
  }

  /// Relabels `raw` by order of first appearance, so any labelling (including
  /// arbitrary integers) becomes a valid partition.
  static Partition canonical(std::span<const int> raw, bool sequential = false) {
    std::vector<int> ids;
    std::vector<int> out(raw.size());
    for (std::size_t t = 0; t < raw.size(); ++t) {
      auto it = std::find(ids.begin(), ids.end(), raw[t]);
      if (it == ids.end()) {
        ids.push_back(raw[t]);
        out[t] = static_cast<int>(ids.size()) - 1;
      } else {
        out[t] = static_cast<int>(it - ids.begin());
      }
    }
    return Partition(std::move(out), sequential);
  }

  static Partition from_segment_lengths(std::span<const int> lengths) {
    std::vector<int> labels;
    for (std::size_t k = 0; k < lengths.size(); ++k) {
      if (lengths[k] < 1) throw std::invalid_argument("segment length must be >= 1");
      labels.insert(labels.end(), static_cast<std::size_t>(lengths[k]), static_cast<int>(k));
    }
    return Partition(std::move(labels), true);
  }

  /// `starts` are the indices (in [1, T-1]) where a new segment begins.
  static Partition from_breaks(int length, std::span<const int> starts) {
    std::vector<int> sorted(starts.begin(), starts.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw std::invalid_argument("duplicate break position");
    if (!sorted.empty() && (sorted.front() < 1 || sorted.back() > length - 1))
      throw std::invalid_argument("break position outside [1, T-1]");
    std::vector<int> labels(static_cast<std::size_t>(std::max(length, 0)), 0);
    int label = 0;
    std::size_t next = 0;
    for (int t = 0; t < length; ++t) {
      if (next < sorted.size() && sorted[next] == t) {
        ++label;
        ++next;
      }
      labels[static_cast<std::size_t>(t)] = label;
    }
    return Partition(std::move(labels), true);
  }

  static Partition single(int length, bool sequential = true) {
    return Partition(std::vector<int>(static_cast<std::size_t>(length), 0), sequential);
  }

  static Partition singletons(int length, bool sequential = true) {
    std::vector<int> labels(static_cast<std::size_t>(length));
    for (int t = 0; t < length; ++t) labels[static_cast<std::size_t>(t)] = t;
    return Partition(std::move(labels), sequential);
  }

  int size() const { return static_cast<int>(labels_.size()); }
  int num_clusters() const { return num_clusters_; }
  bool sequential() const { return sequential_; }
  const std::vector<int>& labels() const { return labels_; }
  int operator[](int t) const { return labels_[static_cast<std::size_t>(t)]; }

  std::vector<int> cluster_sizes() const {
    std::vector<int> sizes(static_cast<std::size_t>(num_clusters_), 0);
    for (int l : labels_) ++sizes[static_cast<std::size_t>(l)];
    return sizes;
  }

  /// Start indices of segments 1..K-1. Only meaningful for sequential partitions.
  std::vector<int> breaks() const {
    std::vector<int> out;
    for (std::size_t t = 1; t < labels_.size(); ++t)
      if (labels_[t] != labels_[t - 1]) out.push_back(static_cast<int>(t));
    return out;
  }

  /// Two partitions are equal when they induce the same grouping of items.
  bool same_grouping(const Partition& other) const {
    if (other.size() != size()) return false;
    return canonical(labels_).labels_ == canonical(other.labels_).labels_;
  }

  bool operator==(const Partition& other) const = default;

 private:
  void validate() {
    if (labels_.empty()) throw std::invalid_argument("partition must contain at least one item");
    int max_label = -1;
    for (int l : labels_) {
      if (l < 0) throw std::invalid_argument("negative cluster label");
      max_label = std::max(max_label, l);
    }
    num_clusters_ = max_label + 1;
    std::vector<char> seen(static_cast<std::size_t>(num_clusters_), 0);
    for (int l : labels_) seen[static_cast<std::size_t>(l)] = 1;
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
      throw std::invalid_argument("cluster labels must cover [0, K) without gaps");
    if (sequential_) {
      if (labels_.front() != 0) throw std::invalid_argument("sequential partition must start at label 0");
      for (std::size_t t = 1; t < labels_.size(); ++t) {
        int step = labels_[t] - labels_[t - 1];
        if (step != 0 && step != 1)
          throw std::invalid_argument("sequential partition labels must increase by exactly 1 at each change");
      }
    }
  }

  std::vector<int> labels_;
  bool sequential_ = false;
  int num_clusters_ = 0;
};

/// M = Y (Y^T Y)^{-1} Y^T for a partition with assignment matrix Y.
struct RescaledEquivalence {
  Eigen::MatrixXd m;
  int k = 0;

  int size() const { return static_cast<int>(m.rows()); }
};

inline RescaledEquivalence to_rescaled_equivalence(const Partition& p) {
  const int n = p.size();
  const auto sizes = p.cluster_sizes();
  RescaledEquivalence out{Eigen::MatrixXd::Zero(n, n), p.num_clusters()};
  for (int i = 0; i < n; ++i) {
    const double w = 1.0 / sizes[static_cast<std::size_t>(p[i])];
    for (int j = 0; j < n; ++j)
      if (p[i] == p[j]) out.m(i, j) = w;
  }
  return out;
}

/// Binary T x K assignment matrix.
inline Eigen::MatrixXd assignment_matrix(const Partition& p) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(p.size(), p.num_clusters());
  for (int t = 0; t < p.size(); ++t) y(t, p[t]) = 1.0;
  return y;
}

}  // namespace mlpart
