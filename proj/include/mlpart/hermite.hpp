#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>

namespace mlpart {

/// Robust moment embedding of a univariate series through Hermite functions.
struct HermiteConfig {
  int order = 5;  // psi_0 .. psi_{order-1}
  /// Scale applied before evaluation. When unset: 1 if standardizing, the
  /// sample standard deviation of the series otherwise.
  std::optional<double> sigma;
  bool standardize = true;
};

/// Orthonormal Hermite function psi_i(x / sigma).
///
/// psi_i(u) = h_i(u) exp(-u^2/2) / sqrt(2^i i! sqrt(pi)), with h_i the
/// physicists' polynomials (h_{i+1} = 2u h_i - 2i h_{i-1}). The recurrence is
/// run on the normalized functions directly,
///   psi_{i+1} = sqrt(2/(i+1)) u psi_i - sqrt(i/(i+1)) psi_{i-1},
/// which never forms h_i and stays bounded for any x.
inline double hermite_function(int i, double x, double sigma = 1.0) {
  if (i < 0) throw std::invalid_argument("hermite_function: order must be >= 0");
  if (!(sigma > 0.0)) throw std::invalid_argument("hermite_function: sigma must be > 0");
  const double u = x / sigma;
  double prev = 0.0;
  double cur = std::exp(-0.5 * u * u) / std::sqrt(std::sqrt(std::numbers::pi));
  for (int n = 0; n < i; ++n) {
    const double next = std::sqrt(2.0 / (n + 1)) * u * cur - std::sqrt(static_cast<double>(n) / (n + 1)) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// Column j of the result is psi_j applied pointwise to the series.
inline Eigen::MatrixXd embed_series(std::span<const double> series, const HermiteConfig& cfg) {
  if (cfg.order < 1) throw std::invalid_argument("embed_series: order must be >= 1");
  if (series.empty()) throw std::invalid_argument("embed_series: empty series");
  const Eigen::Index n = static_cast<Eigen::Index>(series.size());
  Eigen::Map<const Eigen::VectorXd> x(series.data(), n);
  const double mean = x.mean();
  const double var = n > 1 ? (x.array() - mean).square().sum() / static_cast<double>(n - 1) : 0.0;
  const double sd = std::sqrt(var);

  Eigen::VectorXd u = x;
  double sigma = 1.0;
  if (cfg.standardize) {
    u = (x.array() - mean) / (sd > 0.0 ? sd : 1.0);
    sigma = cfg.sigma.value_or(1.0);
  } else {
    sigma = cfg.sigma.value_or(sd > 0.0 ? sd : 1.0);
  }
  if (!(sigma > 0.0)) throw std::invalid_argument("embed_series: sigma must be > 0");

  Eigen::MatrixXd out(n, cfg.order);
  for (Eigen::Index t = 0; t < n; ++t)
    for (int j = 0; j < cfg.order; ++j) out(t, j) = hermite_function(j, u(t), sigma);
  return out;
}

/// Every column embedded separately, blocks placed side by side.
inline Eigen::MatrixXd embed_columns(const Eigen::MatrixXd& x, const HermiteConfig& cfg) {
  Eigen::MatrixXd out(x.rows(), x.cols() * cfg.order);
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const Eigen::VectorXd col = x.col(c);
    out.middleCols(c * cfg.order, cfg.order) = embed_series(std::span<const double>(col.data(), col.size()), cfg);
  }
  return out;
}

}  // namespace mlpart
