#pragma once

#include "mlpart/error.hpp"
#include "mlpart/partition.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

namespace mlpart {

/// Summed area table I(r, c) = sum_{r' <= r, c' <= c} A(r', c').
class SummedAreaTable {
 public:
  explicit SummedAreaTable(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("integral_image: matrix must be square");
    const Eigen::Index n = a.rows();
    table_.resize(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < n; ++c)
        table_(r, c) = a(r, c) + at(r - 1, c) + at(r, c - 1) - at(r - 1, c - 1);
  }

  int size() const { return static_cast<int>(table_.rows()); }
  const Eigen::MatrixXd& table() const { return table_; }

  /// Inclusive prefix sum, zero when either index is negative.
  double at(Eigen::Index r, Eigen::Index c) const { return (r < 0 || c < 0) ? 0.0 : table_(r, c); }

  /// Sum of the diagonal block A[s..e, s..e].
  double block(int s, int e) const { return at(e, e) - at(s - 1, e) - at(e, s - 1) + at(s - 1, s - 1); }

 private:
  Eigen::MatrixXd table_;
};

inline SummedAreaTable integral_image(const Eigen::MatrixXd& a) { return SummedAreaTable(a); }

/// Contribution of segment [s, e] to tr(AM): its block sum over its length.
inline double segment_gain(const SummedAreaTable& sat, int s, int e) {
  if (s < 0 || e < s || e >= sat.size()) throw std::out_of_range("segment_gain: invalid segment bounds");
  return sat.block(s, e) / static_cast<double>(e - s + 1);
}

/// Restrictions on admissible cut positions. A cut at position c separates
/// item c-1 from item c, so valid positions are 1..T-1.
struct SequentialConstraints {
  std::vector<int> forced_breaks;
  /// Inclusive item ranges [a, b] that must lie in a single segment.
  std::vector<std::pair<int, int>> forbidden_intervals;

  bool empty() const { return forced_breaks.empty() && forbidden_intervals.empty(); }

  void validate(int length) const {
    for (int c : forced_breaks)
      if (c < 1 || c > length - 1) throw InfeasibleError("forced break outside [1, T-1]");
    for (const auto& [a, b] : forbidden_intervals) {
      if (a < 0 || b >= length || a > b) throw InfeasibleError("forbidden interval outside [0, T-1]");
      for (int c : forced_breaks)
        if (c > a && c <= b) throw InfeasibleError("forced break lies inside a forbidden interval");
    }
  }
};

struct Penalized {
  double lambda = 1.0;
};
struct FixedK {
  int k = 1;
};
using SegmentMode = std::variant<Penalized, FixedK>;

struct DpOptions {
  int min_segment_length = 1;
};

struct SegmentationResult {
  Partition partition;
  /// tr(AM), minus lambda * K in penalized mode.
  double value = 0.0;
};

namespace detail {

inline void require_symmetric(const Eigen::MatrixXd& a, const char* who) {
  if (a.rows() != a.cols()) throw std::invalid_argument(std::string(who) + ": matrix must be square");
  if (a.rows() == 0) throw std::invalid_argument(std::string(who) + ": empty matrix");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw std::invalid_argument(std::string(who) + ": matrix must be symmetric");
}

/// Which segments [s, e] are admissible under constraints and minimum length.
class Admissibility {
 public:
  Admissibility(int length, const SequentialConstraints& constraints, int min_len)
      : min_len_(std::max(1, min_len)),
        cut_ok_(static_cast<std::size_t>(length + 1), 1),
        next_forced_(static_cast<std::size_t>(length + 1), length) {
    constraints.validate(length);
    for (const auto& [a, b] : constraints.forbidden_intervals)
      for (int c = a + 1; c <= b; ++c) cut_ok_[static_cast<std::size_t>(c)] = 0;
    std::vector<char> forced(static_cast<std::size_t>(length + 1), 0);
    for (int c : constraints.forced_breaks) forced[static_cast<std::size_t>(c)] = 1;
    // next_forced_[s] = smallest forced cut strictly greater than s.
    for (int s = length - 1; s >= 0; --s)
      next_forced_[static_cast<std::size_t>(s)] =
          forced[static_cast<std::size_t>(s + 1)] ? s + 1 : next_forced_[static_cast<std::size_t>(s + 1)];
  }

  bool segment(int s, int e) const {
    if (e - s + 1 < min_len_) return false;
    if (s > 0 && !cut_ok_[static_cast<std::size_t>(s)]) return false;
    return next_forced_[static_cast<std::size_t>(s)] > e;
  }

 private:
  int min_len_;
  std::vector<char> cut_ok_;
  std::vector<int> next_forced_;
};

inline bool better(double value, double incumbent) {
  const double tol = 1e-12 * std::max(1.0, std::abs(incumbent));
  return value > incumbent + tol;
}

inline bool tied(double value, double incumbent) {
  const double tol = 1e-12 * std::max(1.0, std::abs(incumbent));
  return std::abs(value - incumbent) <= tol;
}

inline Partition from_starts(int length, std::vector<int> starts) {
  std::reverse(starts.begin(), starts.end());
  if (!starts.empty() && starts.front() == 0) starts.erase(starts.begin());
  return Partition::from_breaks(length, starts);
}

}  // namespace detail

/// Exact maximization of tr(AM) - lambda tr(M) over contiguous segmentations
/// (penalized mode), or of tr(AM) over segmentations with exactly K segments.
///
/// A may be indefinite. Penalized runs in O(T^2), fixed-K in O(K T^2), after an
/// O(T^2) summed area table. Among equal-valued optima the solver prefers fewer
/// segments, then earlier cut positions.
inline SegmentationResult dp_segment(const Eigen::MatrixXd& a, const SegmentMode& mode,
                                     const SequentialConstraints& constraints = {}, const DpOptions& opts = {}) {
  detail::require_symmetric(a, "dp_segment");
  const int n = static_cast<int>(a.rows());
  const SummedAreaTable sat(a);
  const detail::Admissibility admissible(n, constraints, opts.min_segment_length);
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();

  if (const auto* pen = std::get_if<Penalized>(&mode)) {
    // best[m]: optimum over the first m items; start[m]: first item of the last segment.
    std::vector<double> best(static_cast<std::size_t>(n + 1), neg_inf);
    std::vector<int> count(static_cast<std::size_t>(n + 1), 0);
    std::vector<int> start(static_cast<std::size_t>(n + 1), -1);
    best[0] = 0.0;
    for (int e = 0; e < n; ++e) {
      auto& b = best[static_cast<std::size_t>(e + 1)];
      auto& c = count[static_cast<std::size_t>(e + 1)];
      auto& st = start[static_cast<std::size_t>(e + 1)];
      for (int s = 0; s <= e; ++s) {
        const double prev = best[static_cast<std::size_t>(s)];
        if (prev == neg_inf || !admissible.segment(s, e)) continue;
        const double v = prev + segment_gain(sat, s, e) - pen->lambda;
        const int cnt = count[static_cast<std::size_t>(s)] + 1;
        if (st < 0 || detail::better(v, b) || (detail::tied(v, b) && cnt < c)) {
          b = v;
          c = cnt;
          st = s;
        }
      }
    }
    if (start[static_cast<std::size_t>(n)] < 0) throw InfeasibleError("dp_segment: no admissible segmentation");
    std::vector<int> starts;
    for (int m = n; m > 0; m = start[static_cast<std::size_t>(m)]) starts.push_back(start[static_cast<std::size_t>(m)]);
    return {detail::from_starts(n, std::move(starts)), best[static_cast<std::size_t>(n)]};
  }

  const int k = std::get<FixedK>(mode).k;
  if (k < 1 || k > n) throw InfeasibleError("dp_segment: K must lie in [1, T]");
  // best(j, m): optimum over the first m items split into j segments.
  Eigen::MatrixXd best = Eigen::MatrixXd::Constant(k + 1, n + 1, neg_inf);
  Eigen::MatrixXi start = Eigen::MatrixXi::Constant(k + 1, n + 1, -1);
  best(0, 0) = 0.0;
  for (int j = 1; j <= k; ++j) {
    for (int e = j - 1; e < n; ++e) {
      double& b = best(j, e + 1);
      int& st = start(j, e + 1);
      for (int s = j - 1; s <= e; ++s) {
        const double prev = best(j - 1, s);
        if (prev == neg_inf || !admissible.segment(s, e)) continue;
        const double v = prev + segment_gain(sat, s, e);
        if (st < 0 || detail::better(v, b)) {
          b = v;
          st = s;
        }
      }
    }
  }
  if (start(k, n) < 0) throw InfeasibleError("dp_segment: no admissible segmentation with the requested K");
  std::vector<int> starts;
  for (int j = k, m = n; j > 0; --j) {
    const int s = start(j, m);
    starts.push_back(s);
    m = s;
  }
  return {detail::from_starts(n, std::move(starts)), best(k, n)};
}

/// Objective of an explicit segmentation evaluated straight from A (no table).
inline double segmentation_objective(const Eigen::MatrixXd& a, const Partition& p, double lambda = 0.0) {
  const int n = p.size();
  double total = 0.0;
  int s = 0;
  for (int e = 0; e < n; ++e) {
    if (e + 1 == n || p[e + 1] != p[e]) {
      total += a.block(s, s, e - s + 1, e - s + 1).sum() / (e - s + 1) - lambda;
      s = e + 1;
    }
  }
  return total;
}

/// Exhaustive search over all 2^(T-1) segmentations. Oracle for dp_segment.
inline SegmentationResult brute_force_segment(const Eigen::MatrixXd& a, const SegmentMode& mode,
                                              const SequentialConstraints& constraints = {},
                                              const DpOptions& opts = {}) {
  detail::require_symmetric(a, "brute_force_segment");
  const int n = static_cast<int>(a.rows());
  if (n > 14) throw std::invalid_argument("brute_force_segment: T must be <= 14");
  const detail::Admissibility admissible(n, constraints, opts.min_segment_length);
  const auto* pen = std::get_if<Penalized>(&mode);
  const int want_k = pen ? -1 : std::get<FixedK>(mode).k;
  const double lambda = pen ? pen->lambda : 0.0;

  bool found = false;
  double best_value = 0.0;
  std::vector<int> best_starts;
  for (unsigned mask = 0; mask < (1u << (n - 1)); ++mask) {
    std::vector<int> starts;
    for (int c = 1; c < n; ++c)
      if (mask & (1u << (c - 1))) starts.push_back(c);
    const int k = static_cast<int>(starts.size()) + 1;
    if (want_k > 0 && k != want_k) continue;
    bool ok = true;
    for (int j = 0; j < k && ok; ++j) {
      const int s = j == 0 ? 0 : starts[static_cast<std::size_t>(j - 1)];
      const int e = j + 1 < k ? starts[static_cast<std::size_t>(j)] - 1 : n - 1;
      ok = admissible.segment(s, e);
    }
    if (!ok) continue;
    const auto p = Partition::from_breaks(n, starts);
    const double v = segmentation_objective(a, p, lambda);
    bool take = !found || detail::better(v, best_value);
    if (!take && detail::tied(v, best_value)) {
      if (starts.size() != best_starts.size()) {
        take = starts.size() < best_starts.size();
      } else {
        take = std::lexicographical_compare(starts.rbegin(), starts.rend(), best_starts.rbegin(), best_starts.rend());
      }
    }
    if (take) {
      found = true;
      best_value = v;
      best_starts = std::move(starts);
    }
  }
  if (!found) throw InfeasibleError("brute_force_segment: no admissible segmentation");
  return {Partition::from_breaks(n, best_starts), best_value};
}

}  // namespace mlpart
