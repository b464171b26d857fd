#pragma once

// Besov sequence norms b^beta with p = q = 2 and the kernels they induce.
//
//   ||theta||^2_{b^beta} = sum_{j >= -1} 2^{2 beta j} ||theta_j||_2^2
//   rho(a, b)            = ||a - b||^2_{b^beta}
//   kappa(a, b)          = rho(a, 0) + rho(b, 0) - rho(a, b)
//                        = 2 sum_j 2^{2 beta j} <a_j, b_j>
//
// The base point of the induced kernel is the zero pyramid.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "funcdep/errors.hpp"
#include "funcdep/wavelet.hpp"

namespace funcdep {

struct BesovKernelConfig {
  double beta = 0.0;
  int coarse_scale = 1;
  FilterId filter_id = FilterId::D10;
  static constexpr int p = 2;
  static constexpr int q = 2;
};

struct GramMatrix {
  Eigen::MatrixXd entries;
  BesovKernelConfig config;
  /// Set for single-level Gram matrices.
  std::optional<int> level;

  Eigen::Index size() const { return entries.rows(); }
};

inline double level_weight(double beta, int j) { return std::exp2(2.0 * beta * j); }

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

inline void require_same_structure(std::span<const WaveletCoeffs> sample) {
  for (const auto& c : sample)
    if (!c.same_shape(sample.front()))
      throw Error(ErrorKind::DimensionMismatch, "sample pyramids differ in structure");
}

}  // namespace detail

inline double besov_norm_sq(const WaveletCoeffs& coeffs, double beta) {
  double total = 0.0;
  for (int j = -1; j <= coeffs.max_level; ++j) {
    auto block = coeffs.level(j);
    total += level_weight(beta, j) * detail::dot(block, block);
  }
  return total;
}

/// Squared b^beta distance. Levels missing from the shallower pyramid count as zero.
inline double semi_metric(const WaveletCoeffs& a, const WaveletCoeffs& b, double beta) {
  const int top = std::max(a.max_level, b.max_level);
  double total = 0.0;
  for (int j = -1; j <= top; ++j) {
    double s = 0.0;
    if (a.has_level(j) && b.has_level(j)) {
      s = detail::sq_dist(a.level(j), b.level(j));
    } else {
      auto block = a.has_level(j) ? a.level(j) : b.level(j);
      s = detail::dot(block, block);
    }
    total += level_weight(beta, j) * s;
  }
  return total;
}

inline double kernel(const WaveletCoeffs& a, const WaveletCoeffs& b, double beta) {
  const int top = std::min(a.max_level, b.max_level);
  double total = 0.0;
  for (int j = -1; j <= top; ++j) total += level_weight(beta, j) * detail::dot(a.level(j), b.level(j));
  return 2.0 * total;
}

/// n x d matrix whose rows are the b^beta-weighted coefficient vectors scaled
/// by sqrt(2), so that F F^T is the Gram matrix.
inline Eigen::MatrixXd weighted_features(std::span<const WaveletCoeffs> sample, double beta) {
  detail::require_same_structure(sample);
  const auto& first = sample.front();
  const Eigen::Index n = static_cast<Eigen::Index>(sample.size());
  const Eigen::Index d = static_cast<Eigen::Index>(first.grid_size());
  Eigen::MatrixXd features(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& c = sample[static_cast<std::size_t>(i)];
    Eigen::Index col = 0;
    for (int j = -1; j <= c.max_level; ++j) {
      const double w = std::sqrt(2.0 * level_weight(beta, j));
      for (double v : c.level(j)) features(i, col++) = w * v;
    }
  }
  return features;
}

inline GramMatrix gram_matrix(std::span<const WaveletCoeffs> sample, double beta) {
  if (sample.size() < 2) throw Error(ErrorKind::SampleTooSmall, "gram matrix needs n >= 2");
  Eigen::MatrixXd f = weighted_features(sample, beta);
  GramMatrix g;
  g.entries = f * f.transpose();
  g.entries = 0.5 * (g.entries + g.entries.transpose()).eval();
  g.config.beta = beta;
  g.config.coarse_scale = sample.front().coarse_scale;
  return g;
}

/// Gram matrix of the unweighted single-level kernel 2 <theta_j, theta'_j>.
inline GramMatrix per_scale_gram(std::span<const WaveletCoeffs> sample, int j) {
  if (sample.size() < 2) throw Error(ErrorKind::SampleTooSmall, "gram matrix needs n >= 2");
  detail::require_same_structure(sample);
  if (!sample.front().has_level(j))
    throw Error(ErrorKind::InvalidScale, "level " + std::to_string(j) + " not present");
  const Eigen::Index n = static_cast<Eigen::Index>(sample.size());
  const Eigen::Index width = static_cast<Eigen::Index>(sample.front().level(j).size());
  Eigen::MatrixXd block(n, width);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto lv = sample[static_cast<std::size_t>(i)].level(j);
    for (Eigen::Index k = 0; k < width; ++k) block(i, k) = lv[static_cast<std::size_t>(k)];
  }
  GramMatrix g;
  g.entries = 2.0 * block * block.transpose();
  g.entries = 0.5 * (g.entries + g.entries.transpose()).eval();
  g.config.beta = 0.0;
  g.config.coarse_scale = sample.front().coarse_scale;
  g.level = j;
  return g;
}

}  // namespace funcdep
