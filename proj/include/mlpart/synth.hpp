#pragma once

#include "mlpart/error.hpp"
#include "mlpart/partition.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace mlpart::synth {

struct Series {
  Eigen::MatrixXd x;
  Partition truth;
};

/// Uniformly placed segmentation with exactly k segments of length >= min_len.
inline Partition random_segmentation(int length, int k, int min_len, std::mt19937_64& rng) {
  if (k < 1 || static_cast<long>(k) * min_len > length)
    throw InfeasibleError("random_segmentation: cannot fit K segments of the minimum length");
  // Uniform composition: distribute the slack length - k*min_len over k parts.
  const int slack = length - k * min_len;
  std::uniform_int_distribution<int> pick(0, slack + k - 1);
  std::vector<int> bars;
  while (static_cast<int>(bars.size()) < k - 1) {
    const int b = pick(rng);
    if (std::find(bars.begin(), bars.end(), b) == bars.end()) bars.push_back(b);
  }
  std::sort(bars.begin(), bars.end());
  std::vector<int> lengths;
  int prev = -1;
  for (int b : bars) {
    lengths.push_back(min_len + (b - prev - 1));
    prev = b;
  }
  lengths.push_back(min_len + (slack + k - 1 - prev - 1));
  return Partition::from_segment_lengths(lengths);
}

struct ChangepointConfig {
  int dims = 30;
  int length = 200;
  int relevant = 3;
  int k_min = 2;
  int k_max = 6;
  double noise = 0.5;
  int min_segment = 5;
};

/// Multivariate series whose first `relevant` dimensions share the labelled
/// segmentation; each remaining dimension follows its own independent
/// segmentation. Segment means are N(0, 1), additive noise N(0, noise^2).
inline Series synth_changepoint(const ChangepointConfig& cfg, std::uint64_t seed) {
  if (cfg.relevant < 0 || cfg.relevant > cfg.dims) throw InfeasibleError("synth_changepoint: relevant must lie in [0, dims]");
  if (cfg.k_min < 1 || cfg.k_min > cfg.k_max) throw InfeasibleError("synth_changepoint: invalid K range");
  if (static_cast<long>(cfg.k_max) * cfg.min_segment > cfg.length)
    throw InfeasibleError("synth_changepoint: K range infeasible for the series length");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_k(cfg.k_min, cfg.k_max);
  std::normal_distribution<double> unit(0.0, 1.0);

  auto fill = [&](Eigen::MatrixXd& x, int dim, const Partition& seg) {
    std::vector<double> means(static_cast<std::size_t>(seg.num_clusters()));
    for (auto& m : means) m = unit(rng);
    for (int t = 0; t < cfg.length; ++t) x(t, dim) = means[static_cast<std::size_t>(seg[t])] + cfg.noise * unit(rng);
  };

  Eigen::MatrixXd x(cfg.length, cfg.dims);
  const Partition shared = random_segmentation(cfg.length, pick_k(rng), cfg.min_segment, rng);
  for (int d = 0; d < cfg.relevant; ++d) fill(x, d, shared);
  for (int d = cfg.relevant; d < cfg.dims; ++d) {
    const Partition own = random_segmentation(cfg.length, pick_k(rng), cfg.min_segment, rng);
    fill(x, d, own);
  }
  return {std::move(x), shared};
}

/// Zero-mean univariate Gaussian series with piecewise-constant standard
/// deviation, one segment per entry of `stds`. Segments are at least
/// max(5, length / (2 * segments)) long so every regime is observable.
inline Series synth_varchange(int length, const std::vector<double>& stds, std::uint64_t seed) {
  const int k = static_cast<int>(stds.size());
  if (k < 1) throw InfeasibleError("synth_varchange: at least one segment is required");
  for (double s : stds)
    if (!(s > 0.0)) throw InfeasibleError("synth_varchange: standard deviations must be > 0");
  std::mt19937_64 rng(seed);
  const int min_len = std::max(5, length / (2 * k));
  const Partition seg = random_segmentation(length, k, min_len, rng);
  std::normal_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd x(length, 1);
  for (int t = 0; t < length; ++t) x(t, 0) = stds[static_cast<std::size_t>(seg[t])] * unit(rng);
  return {std::move(x), seg};
}

struct BlobImageConfig {
  int height = 16;
  int width = 16;
  double noise = 0.1;
};

/// Tiny two-region image: a disk of one colour on a background of another,
/// plus per-channel Gaussian noise. Pixel features are
/// (row / H, col / W, r, g, b); the truth separates disk from background.
inline Series synth_blob_image(const BlobImageConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double radius = (0.25 + 0.1 * unit01(rng)) * std::min(cfg.height, cfg.width);
  const double cr = cfg.height * (0.35 + 0.3 * unit01(rng));
  const double cc = cfg.width * (0.35 + 0.3 * unit01(rng));
  Eigen::Vector3d bg, fg;
  for (int c = 0; c < 3; ++c) bg(c) = 0.3 + 0.4 * unit01(rng);
  // Foreground differs from the background by a fixed-norm colour offset.
  Eigen::Vector3d dir(gauss(rng), gauss(rng), gauss(rng));
  fg = bg + 0.35 * dir.normalized();

  const int n = cfg.height * cfg.width;
  Eigen::MatrixXd x(n, 5);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int r = 0; r < cfg.height; ++r)
    for (int c = 0; c < cfg.width; ++c) {
      const int i = r * cfg.width + c;
      const double dr = r + 0.5 - cr, dc = c + 0.5 - cc;
      const bool inside = dr * dr + dc * dc <= radius * radius;
      labels[static_cast<std::size_t>(i)] = inside ? 1 : 0;
      const Eigen::Vector3d& base = inside ? fg : bg;
      x(i, 0) = static_cast<double>(r) / cfg.height;
      x(i, 1) = static_cast<double>(c) / cfg.width;
      for (int ch = 0; ch < 3; ++ch) x(i, 2 + ch) = base(ch) + cfg.noise * gauss(rng);
    }
  return {std::move(x), Partition::canonical(labels, false)};
}

}  // namespace mlpart::synth
