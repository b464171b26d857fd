#pragma once

// Marginal selection of the kernel smoothness beta.
//
// Each detail level j contributes a distance variance
//   dvar(j) = n^{-2} tr(G_j H G_j H),  G_j = per-level Gram matrix.
// Balancing 2^{2 beta j} sqrt(dvar(j)) across levels gives
//   (1/2) log2 dvar(j) ~ log2 C + beta * (-2 j),
// so beta is the least-squares slope of (1/2) log2 dvar(j) on -2j, fitted
// over the levels L..cutoff whose signal distance variance is not below
// that of the thresholding residual.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "funcdep/besov.hpp"
#include "funcdep/errors.hpp"
#include "funcdep/hsic.hpp"

namespace funcdep {

struct ScaleProfile {
  std::vector<int> levels;
  std::vector<double> dvar_signal;
  std::vector<double> dvar_residual;
  int cutoff = -1;
};

struct SlopeFit {
  double intercept = 0.0;
  double slope = 0.0;
  std::vector<int> levels_used;
};

struct BetaSelection {
  double beta = 0.0;
  SlopeFit fit;
  bool fallback_used = false;
  ScaleProfile profile;
};

/// Optional level band [lo, hi] restricting the regression.
struct LevelBand {
  int lo;
  int hi;
};

inline double scale_distance_variance(std::span<const WaveletCoeffs> sample, int j) {
  GramMatrix g = per_scale_gram(sample, j);
  return std::max(0.0, empirical_hsic(g.entries, g.entries));
}

namespace detail {

inline void require_matching(std::span<const WaveletCoeffs> signal, std::span<const WaveletCoeffs> residual) {
  if (signal.size() != residual.size())
    throw Error(ErrorKind::DimensionMismatch, "signal and residual samples differ in size");
  if (signal.empty()) throw Error(ErrorKind::SampleTooSmall, "empty sample");
  for (std::size_t i = 0; i < signal.size(); ++i)
    if (!signal[i].same_shape(signal.front()) || !residual[i].same_shape(signal.front()))
      throw Error(ErrorKind::DimensionMismatch, "signal and residual pyramids differ in structure");
}

}  // namespace detail

/// Per-level distance variances of signal and residual for j = L..J.
inline ScaleProfile scale_profile(std::span<const WaveletCoeffs> signal, std::span<const WaveletCoeffs> residual,
                                  int coarse_scale) {
  detail::require_matching(signal, residual);
  const int top = signal.front().max_level;
  if (coarse_scale < -1 || coarse_scale > top)
    throw Error(ErrorKind::InvalidScale, "coarse scale outside the pyramid");
  ScaleProfile p;
  p.cutoff = coarse_scale - 1;
  for (int j = coarse_scale; j <= top; ++j) {
    p.levels.push_back(j);
    p.dvar_signal.push_back(scale_distance_variance(signal, j));
    p.dvar_residual.push_back(scale_distance_variance(residual, j));
  }
  for (std::size_t i = 0; i < p.levels.size(); ++i)
    if (p.dvar_signal[i] >= p.dvar_residual[i]) p.cutoff = p.levels[i];
  return p;
}

/// max{ j in [L, J] : dvar_signal(j) >= dvar_residual(j) }, or L - 1 if none.
inline int cutoff_scale(std::span<const WaveletCoeffs> signal, std::span<const WaveletCoeffs> residual,
                        int coarse_scale) {
  return scale_profile(signal, residual, coarse_scale).cutoff;
}

/// Ordinary least squares y = a + b x. Requires at least two distinct x.
inline std::pair<double, double> least_squares_line(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  return {my - slope * mx, slope};
}

/// Fits beta on a precomputed profile.
inline BetaSelection select_beta_from_profile(ScaleProfile profile, double beta_max,
                                              std::optional<LevelBand> band = std::nullopt) {
  BetaSelection sel;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < profile.levels.size(); ++i) {
    const int j = profile.levels[i];
    if (j > profile.cutoff) continue;
    if (band && (j < band->lo || j > band->hi)) continue;
    if (!(profile.dvar_signal[i] > 0.0)) continue;
    xs.push_back(-2.0 * j);
    ys.push_back(0.5 * std::log2(profile.dvar_signal[i]));
    sel.fit.levels_used.push_back(j);
  }
  sel.profile = std::move(profile);
  if (xs.size() < 2) {
    sel.fallback_used = true;
    sel.beta = 0.0;
    return sel;
  }
  auto [a, b] = least_squares_line(xs, ys);
  sel.fit.intercept = a;
  sel.fit.slope = b;
  sel.beta = std::clamp(b, 0.0, beta_max);
  return sel;
}

inline BetaSelection select_beta(std::span<const WaveletCoeffs> signal, std::span<const WaveletCoeffs> residual,
                                 int coarse_scale, double beta_max, std::optional<LevelBand> band = std::nullopt) {
  return select_beta_from_profile(scale_profile(signal, residual, coarse_scale), beta_max, band);
}

/// Default upper bound 0.95 * alpha keeps beta below the family's smoothness.
inline double default_beta_max(const WaveletFilter& filter) { return 0.95 * filter.holder_alpha; }

}  // namespace funcdep
