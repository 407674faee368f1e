#pragma once

#include "mlpart/dp_solver.hpp"
#include "mlpart/error.hpp"
#include "mlpart/losses.hpp"
#include "mlpart/metric_model.hpp"
#include "mlpart/ncuts.hpp"
#include "mlpart/partition.hpp"
#include "mlpart/spectral.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mlpart {

/// One supervised dataset: features X (T x P) and its ground-truth partition.
///
/// Cluster-task features are centered on construction. Differences of
/// tr(X^T M X) between genuine partitions do not depend on the origin, but
/// the spectral relaxation does, and centering keeps it from spending a rank
/// on the mean direction.
struct TrainingSample {
  Eigen::MatrixXd x;
  Partition truth;
  RescaledEquivalence truth_m;

  static TrainingSample make(Eigen::MatrixXd x, Partition truth, Task task) {
    if (x.rows() != truth.size()) throw std::invalid_argument("TrainingSample: label count does not match data rows");
    if (task == Task::changepoint && !truth.sequential())
      throw std::invalid_argument("TrainingSample: change-point truth must be sequential");
    if (task == Task::cluster) x.rowwise() -= x.colwise().mean();
    auto m = to_rescaled_equivalence(truth);
    return {std::move(x), std::move(truth), std::move(m)};
  }

  int size() const { return static_cast<int>(x.rows()); }
};

/// Features as the decoder sees them for a given task.
inline Eigen::MatrixXd prepare_features(Eigen::MatrixXd x, Task task) {
  if (task == Task::cluster) x.rowwise() -= x.colwise().mean();
  return x;
}

// ---------------------------------------------------------------------------
// Joint feature map and loss-augmented inference
// ---------------------------------------------------------------------------

/// <w, phi(X, M)>, normalized by 1/T in both modes:
///   known K:   (1/T) tr(B X^T M X)
///   penalized: (1/T) (tr(B X^T M X) - tr M)
inline double feature_inner(const Eigen::MatrixXd& x, const Eigen::MatrixXd& m, const MetricModel& model, KMode mode) {
  if (m.rows() != x.rows() || m.cols() != x.rows()) throw std::invalid_argument("feature_inner: dimension mismatch");
  if (x.cols() != model.dim()) throw std::invalid_argument("feature_inner: metric dimension mismatch");
  const Eigen::MatrixXd xmx = x.transpose() * m * x;
  const double quad = (model.matrix().array() * xmx.array()).sum();
  const double pen = mode.known ? 0.0 : m.trace();
  return (quad - pen) / static_cast<double>(x.rows());
}

/// (1/T) tr(W_B M), the normalized-cut score.
inline double ncut_feature_inner(const SimilarityMatrix& s, const Eigen::MatrixXd& m) {
  return (s.w.array() * m.transpose().array()).sum() / static_cast<double>(m.rows());
}

/// A_i with argmax_M tr(A_i M) = argmax_M { loss(M, M_i) + <w, phi(X_i, M)> }:
///   known K:   (1/T)(X B X^T - 2 M_i + I)
///   penalized: (1/T)(X B X^T - 2 M_i)
/// For the ncuts task X B X^T is replaced by W_B. The +I term only adds the
/// constant K/T on M_K.
inline Eigen::MatrixXd loss_augmented_matrix(const TrainingSample& sample, const MetricModel& model, KMode mode) {
  const double n = sample.size();
  Eigen::MatrixXd a = model.task() == Task::ncuts ? gaussian_similarity(sample.x, model).w : gram(sample.x, model);
  a -= 2.0 * sample.truth_m.m;
  if (mode.known) a.diagonal().array() += 1.0;
  return a / n;
}

struct SurrogateResult {
  double value = 0.0;  // L_i = loss(M*, M_i) + <w, phi(M*)> - <w, phi(M_i)>
  Eigen::MatrixXd m_star;
  std::optional<Partition> partition;  // set when M* is a genuine segmentation
  Eigen::MatrixXd subgradient;         // shaped like model.parameters()
};

namespace detail {

inline Eigen::MatrixXd shape_like(const MetricModel& model, const Eigen::MatrixXd& full_grad) {
  if (model.kind() == MetricKind::diagonal) return full_grad.diagonal();
  return 0.5 * (full_grad + full_grad.transpose());
}

}  // namespace detail

/// Structured hinge surrogate of one sample with its loss-augmented argmax and
/// a subgradient in the metric parameters.
///
/// Change-point samples are solved exactly by dynamic programming over
/// segmentations; cluster and ncuts samples through the spectral relaxation
/// (the relaxed projector enters the loss through the trace form).
inline SurrogateResult surrogate_loss(const TrainingSample& sample, const MetricModel& model, KMode mode) {
  const int n = sample.size();
  const int k = sample.truth.num_clusters();
  const Eigen::MatrixXd a = loss_augmented_matrix(sample, model, mode);
  SurrogateResult out;
  if (model.task() == Task::changepoint) {
    const SegmentMode seg = mode.known ? SegmentMode{FixedK{k}} : SegmentMode{Penalized{0.0}};
    auto res = dp_segment(a, seg);
    out.m_star = to_rescaled_equivalence(res.partition).m;
    out.partition = std::move(res.partition);
  } else {
    out.m_star = (mode.known ? spectral_relax_k(a, k) : spectral_relax_auto(a)).m;
  }
  const Eigen::MatrixXd& mi = sample.truth_m.m;
  const double loss = trace_form_loss(out.m_star, mi);
  if (model.task() == Task::ncuts) {
    const auto s = gaussian_similarity(sample.x, model);
    out.value = loss + ncut_feature_inner(s, out.m_star) - ncut_feature_inner(s, mi);
    out.subgradient = similarity_gradient(sample.x, model, s, out.m_star - mi) / static_cast<double>(n);
  } else {
    out.value = loss + feature_inner(sample.x, out.m_star, model, mode) - feature_inner(sample.x, mi, model, mode);
    out.subgradient =
        detail::shape_like(model, sample.x.transpose() * (out.m_star - mi) * sample.x / static_cast<double>(n));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Decoding
// ---------------------------------------------------------------------------

struct DecodeOptions {
  std::optional<int> k;  // overrides the model's known K
  int restarts = 20;
  std::uint64_t seed = 0;
};

/// Partition of new data under a trained metric, using the model's task and
/// K mode: exact DP for change points, k-means (known K) or rounded spectral
/// relaxation (penalized) for clustering, rounded spectral relaxation of W_B
/// for normalized cuts.
inline Partition decode(const Eigen::MatrixXd& x_raw, const MetricModel& model, const DecodeOptions& opts = {}) {
  const KMode mode = model.k_mode();
  std::optional<int> k = opts.k;
  if (!k && mode.known && mode.k > 0) k = mode.k;
  if (mode.known && !k) throw InfeasibleError("decode: K is required in known-K mode");
  if (k && (*k < 1 || *k > x_raw.rows())) throw InfeasibleError("decode: K must lie in [1, T]");
  const Eigen::MatrixXd x = prepare_features(x_raw, model.task());

  switch (model.task()) {
    case Task::changepoint: {
      const Eigen::MatrixXd g = gram(x, model);
      if (mode.known) return dp_segment(g, FixedK{*k}).partition;
      return dp_segment(g, Penalized{1.0}).partition;
    }
    case Task::cluster: {
      if (mode.known) return kmeans(x, model.matrix(), *k, opts.restarts, opts.seed).partition;
      Eigen::MatrixXd a = gram(x, model);
      a.diagonal().array() -= 1.0;
      const auto proj = spectral_relax_auto(a);
      return round_projector(proj, std::max(1, proj.k), opts.seed, opts.restarts);
    }
    case Task::ncuts: {
      const auto s = gaussian_similarity(x, model);
      if (mode.known) return ncut_decode(s, *k, opts.seed, opts.restarts);
      Eigen::MatrixXd a = s.w;
      a.diagonal().array() -= 1.0;
      const auto proj = spectral_relax_auto(a);
      return round_projector(proj, std::max(1, proj.k), opts.seed, opts.restarts);
    }
  }
  throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// Projected subgradient training
// ---------------------------------------------------------------------------

struct TrainerConfig {
  int max_iters = 200;
  double step0 = 1.0;  // step at iteration t is step0 / sqrt(t)
  Regularizer reg{RegKind::frobenius_sq, 1e-3};
  KMode mode = KMode::penalized();
  Task task = Task::changepoint;
  double tol = 1e-6;  // relative objective change over `window` iterations
  int window = 10;
  std::uint64_t seed = 0;
};

struct TrainResult {
  MetricModel model;
  std::vector<double> objective;  // objective at each visited iterate
  double best_objective = 0.0;
  int iterations = 0;
};

/// (1/N) sum_i L_i + Omega, with its subgradient.
struct ObjectiveValue {
  double value = 0.0;
  Eigen::MatrixXd subgradient;
};

inline ObjectiveValue structured_objective(std::span<const TrainingSample> samples, const MetricModel& model,
                                           const TrainerConfig& cfg) {
  const auto reg = reg_value_and_subgrad(model, cfg.reg);
  ObjectiveValue out{0.0, Eigen::MatrixXd::Zero(model.parameters().rows(), model.parameters().cols())};
  // Fixed sample order keeps the reduction bit-reproducible.
  for (const auto& s : samples) {
    const auto r = surrogate_loss(s, model, cfg.mode);
    out.value += r.value;
    out.subgradient += r.subgradient;
  }
  const double n = static_cast<double>(samples.size());
  out.value = out.value / n + reg.value;
  out.subgradient = out.subgradient / n + reg.subgradient;
  return out;
}

namespace detail {

inline void check_samples(std::span<const TrainingSample> samples, int dim) {
  if (samples.empty()) throw std::invalid_argument("train: at least one sample is required");
  for (const auto& s : samples)
    if (s.x.cols() != dim) throw std::invalid_argument("train: samples disagree with the metric dimension");
}

inline bool stalled(const std::vector<double>& trace, int window, double tol) {
  if (window < 1 || static_cast<int>(trace.size()) <= window) return false;
  const double now = trace.back();
  const double then = trace[trace.size() - 1 - static_cast<std::size_t>(window)];
  return std::abs(now - then) <= tol * std::max(std::abs(then), 1e-12);
}

/// Generic projected subgradient loop with best-iterate selection.
template <class Objective>
TrainResult projected_subgradient(const MetricModel& init, const TrainerConfig& cfg, Objective&& objective) {
  MetricModel current = project(init);
  TrainResult out{current, {}, std::numeric_limits<double>::infinity(), 0};
  for (int t = 1; t <= cfg.max_iters; ++t) {
    const ObjectiveValue f = objective(current);
    out.objective.push_back(f.value);
    out.iterations = t;
    if (f.value < out.best_objective) {
      out.best_objective = f.value;
      out.model = current;
    }
    if (stalled(out.objective, cfg.window, cfg.tol)) break;
    const double step = cfg.step0 / std::sqrt(static_cast<double>(t));
    current = project(current.with_parameters(current.parameters() - step * f.subgradient));
  }
  if (out.objective.empty()) out.best_objective = objective(current).value;
  return out;
}

}  // namespace detail

/// Minimizes (1/N) sum_i L_i(B) + Omega(B) over the feasible metrics by
/// projected subgradient descent, returning the best iterate.
inline TrainResult train(std::span<const TrainingSample> samples, const TrainerConfig& cfg, const MetricModel& init) {
  detail::check_samples(samples, init.dim());
  const MetricModel start = init.with_task(cfg.task).with_k_mode(cfg.mode);
  return detail::projected_subgradient(start, cfg, [&](const MetricModel& m) {
    return structured_objective(samples, m, cfg);
  });
}

// ---------------------------------------------------------------------------
// Partial labels
// ---------------------------------------------------------------------------

/// Per-sample constraints for partially annotated change-point data.
struct PartialLabels {
  std::vector<SequentialConstraints> constraints;
  double fraction = 1.0;  // annotated share of each series
};

/// Constraints for an annotated prefix covering `fraction` of each series:
/// every true break inside the prefix is forced and no other cut may fall
/// inside it.
inline SequentialConstraints prefix_constraints(const Partition& truth, double fraction) {
  const int n = truth.size();
  const int annotated = static_cast<int>(std::floor(std::clamp(fraction, 0.0, 1.0) * n));
  SequentialConstraints c;
  if (annotated <= 0) return c;
  int seg_start = 0;
  for (int t = 1; t <= annotated; ++t) {
    const bool end = t == n || truth[t] != truth[t - 1];
    if (t == annotated || end) {
      if (t - 1 > seg_start) c.forbidden_intervals.emplace_back(seg_start, t - 1);
      if (end && t < annotated) c.forced_breaks.push_back(t);
      seg_start = t;
    }
  }
  return c;
}

inline PartialLabels annotate_prefix(std::span<const TrainingSample> samples, double fraction) {
  PartialLabels p;
  p.fraction = fraction;
  for (const auto& s : samples) p.constraints.push_back(prefix_constraints(s.truth, fraction));
  return p;
}

struct PartialTrainOptions {
  MetricKind kind = MetricKind::diagonal;
  std::optional<int> pca_dim;
  int max_rounds = 10;
};

struct PartialTrainResult {
  MetricModel model;
  int rounds = 0;
  std::vector<Partition> completed;  // labels used in the last training round
};

/// Alternates constrained decoding of every sample under the current metric
/// with full-label training, starting from the PCA metric. Stops once the
/// completed labels repeat or after `max_rounds` rounds.
inline PartialTrainResult train_partial(std::span<const TrainingSample> samples, const PartialLabels& partial,
                                        const TrainerConfig& cfg, const PartialTrainOptions& opts = {}) {
  if (cfg.task != Task::changepoint) throw std::invalid_argument("train_partial: only change-point tasks are supported");
  if (partial.constraints.size() != samples.size())
    throw std::invalid_argument("train_partial: one constraint set per sample is required");
  std::vector<Eigen::MatrixXd> xs;
  for (const auto& s : samples) xs.push_back(s.x);
  detail::check_samples(samples, static_cast<int>(xs.front().cols()));

  MetricModel model = pca_init(xs, opts.pca_dim, opts.kind, cfg.task, cfg.mode);
  PartialTrainResult out{model, 0, {}};
  std::optional<std::vector<Partition>> previous;
  for (int round = 1; round <= opts.max_rounds; ++round) {
    std::vector<Partition> labels;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const Eigen::MatrixXd g = gram(samples[i].x, model);
      const int k = cfg.mode.k > 0 ? cfg.mode.k : samples[i].truth.num_clusters();
      const SegmentMode seg = cfg.mode.known ? SegmentMode{FixedK{k}} : SegmentMode{Penalized{1.0}};
      labels.push_back(dp_segment(g, seg, partial.constraints[i]).partition);
    }
    if (previous && *previous == labels) break;
    std::vector<TrainingSample> completed;
    for (std::size_t i = 0; i < samples.size(); ++i)
      completed.push_back(TrainingSample::make(samples[i].x, labels[i], cfg.task));
    model = train(completed, cfg, model).model;
    out.model = model;
    out.rounds = round;
    out.completed = labels;
    previous = std::move(labels);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Normalized cuts: convex-concave procedure
// ---------------------------------------------------------------------------

struct CccpOptions {
  int outer_iters = 10;
  int inner_iters = 50;
};

struct CccpResult {
  MetricModel model;
  std::vector<double> outer_objective;  // objective at B_0, B_1, ...
  bool monotone = true;                 // outer objective never increased beyond 1e-8
};

/// Objective (1/N) sum_i L_i(B) + Omega(B) for the ncuts task with known K.
inline double ncut_objective(std::span<const TrainingSample> samples, const MetricModel& model,
                             const TrainerConfig& cfg) {
  double total = 0.0;
  for (const auto& s : samples) total += surrogate_loss(s, model, KMode::known_k()).value;
  return total / static_cast<double>(samples.size()) + reg_value_and_subgrad(model, cfg.reg).value;
}

/// Learns B inside the Gaussian similarity W_B. Each per-sample surrogate is
/// max_M {loss + tr(W_B M)/T} - tr(W_B M_i)/T: the second term is replaced by
/// its tangent at the current B_t (an upper bound, exact at B_t), and the
/// resulting problem is minimized by projected subgradient steps.
inline CccpResult train_ncuts_cccp(std::span<const TrainingSample> samples, const TrainerConfig& cfg,
                                   const MetricModel& init, const CccpOptions& opts = {}) {
  if (!cfg.mode.known) throw std::invalid_argument("train_ncuts_cccp: only known-K mode is supported for ncuts");
  detail::check_samples(samples, init.dim());
  const KMode known = KMode::known_k(cfg.mode.k);
  MetricModel current = project(init.with_task(Task::ncuts).with_k_mode(known));
  CccpResult out{current, {ncut_objective(samples, current, cfg)}, true};

  for (int outer = 0; outer < opts.outer_iters; ++outer) {
    // Tangent of the concave part -tr(W_B M_i)/T at B_t.
    std::vector<double> anchor_value;
    std::vector<Eigen::MatrixXd> anchor_grad;
    for (const auto& s : samples) {
      const auto w = gaussian_similarity(s.x, current);
      anchor_value.push_back(ncut_feature_inner(w, s.truth_m.m));
      anchor_grad.push_back(similarity_gradient(s.x, current, w, s.truth_m.m) / static_cast<double>(s.size()));
    }
    const Eigen::MatrixXd anchor_params = current.parameters();

    auto surrogate = [&](const MetricModel& m) {
      const auto reg = reg_value_and_subgrad(m, cfg.reg);
      ObjectiveValue f{0.0, Eigen::MatrixXd::Zero(m.parameters().rows(), m.parameters().cols())};
      const Eigen::MatrixXd delta = m.parameters() - anchor_params;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        const auto w = gaussian_similarity(s.x, m);
        const auto proj = spectral_relax_k(loss_augmented_matrix(s, m, known), s.truth.num_clusters());
        const double convex = trace_form_loss(proj.m, s.truth_m.m) + ncut_feature_inner(w, proj.m);
        const double tangent = anchor_value[i] + (anchor_grad[i].array() * delta.array()).sum();
        f.value += convex - tangent;
        f.subgradient += similarity_gradient(s.x, m, w, proj.m) / static_cast<double>(s.size()) - anchor_grad[i];
      }
      const double n = static_cast<double>(samples.size());
      f.value = f.value / n + reg.value;
      f.subgradient = f.subgradient / n + reg.subgradient;
      return f;
    };

    TrainerConfig inner = cfg;
    inner.max_iters = opts.inner_iters;
    inner.mode = known;
    inner.task = Task::ncuts;
    if (opts.inner_iters > 0) current = detail::projected_subgradient(current, inner, surrogate).model;

    const double value = ncut_objective(samples, current, cfg);
    if (value > out.outer_objective.back() + 1e-8) out.monotone = false;
    const double before = out.outer_objective.back();
    out.outer_objective.push_back(value);
    out.model = current;
    if (std::abs(before - value) <= cfg.tol * std::max(std::abs(before), 1e-12)) break;
  }
  return out;
}

}  // namespace mlpart
