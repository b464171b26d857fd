#pragma once

// Per-curve wavelet soft-thresholding with a MAD noise-scale estimate taken
// from the finest detail level.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "funcdep/errors.hpp"
#include "funcdep/parallel.hpp"
#include "funcdep/wavelet.hpp"

namespace funcdep {

/// Median of |W| for W ~ N(0, 1).
inline constexpr double kMedianAbsNormal = 0.6744897501960817;

struct NoiseEstimate {
  double delta_hat = 0.0;
  int source_level = 0;
};

struct DenoiseResult {
  WaveletCoeffs coeffs;           // soft-thresholded
  NoiseEstimate noise;
  double threshold = 0.0;
  WaveletCoeffs residual_coeffs;  // raw minus thresholded
};

/// Median with the midpoint convention for even counts. Takes a copy.
inline double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::InsufficientData, "median of empty set");
  const std::size_t n = values.size();
  auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  double upper = *mid;
  if (n % 2 == 1) return upper;
  double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

/// delta_hat = median{ sqrt(m) |theta_{J,k}| } / median|W|.
inline NoiseEstimate estimate_noise_sd(const WaveletCoeffs& coeffs, std::size_t m) {
  if (coeffs.details.empty() || coeffs.details.back().empty())
    throw Error(ErrorKind::InsufficientData, "finest detail block is empty");
  const auto& finest = coeffs.details.back();
  const double root_m = std::sqrt(static_cast<double>(m));
  std::vector<double> scaled(finest.size());
  std::transform(finest.begin(), finest.end(), scaled.begin(),
                 [root_m](double v) { return root_m * std::abs(v); });
  return {median(std::move(scaled)) / kMedianAbsNormal, coeffs.max_level};
}

inline double soft_threshold_value(double v, double lambda) {
  double mag = std::abs(v) - lambda;
  if (mag <= 0.0) return 0.0;
  return std::copysign(mag, v);
}

/// Soft rule on every level j >= L; the scaling block (levels below L) is untouched.
inline WaveletCoeffs soft_threshold(const WaveletCoeffs& coeffs, double lambda, int coarse_scale) {
  if (!(lambda >= 0.0)) throw Error(ErrorKind::InvalidThreshold, "threshold must be >= 0");
  WaveletCoeffs out = coeffs;
  for (int j = std::max(coarse_scale, coeffs.coarse_scale); j <= coeffs.max_level; ++j)
    for (double& v : out.details[static_cast<std::size_t>(j - coeffs.coarse_scale)])
      v = soft_threshold_value(v, lambda);
  return out;
}

/// Universal threshold delta * sqrt(2 log m / m) in function-space units.
inline double universal_threshold(double delta_hat, std::size_t m) {
  const double md = static_cast<double>(m);
  return delta_hat * std::sqrt(2.0 * std::log(md) / md);
}

inline DenoiseResult denoise_from_coeffs(WaveletCoeffs raw, std::size_t m) {
  DenoiseResult r;
  r.noise = estimate_noise_sd(raw, m);
  r.threshold = universal_threshold(r.noise.delta_hat, m);
  r.coeffs = soft_threshold(raw, r.threshold, raw.coarse_scale);
  r.residual_coeffs = raw - r.coeffs;
  return r;
}

inline DenoiseResult denoise_curve(std::span<const double> x, const WaveletFilter& filter, int coarse_scale) {
  return denoise_from_coeffs(forward_dwt(x, filter, coarse_scale), x.size());
}

/// Denoises each row of a row-major n x m buffer independently.
inline std::vector<DenoiseResult> denoise_rows(std::span<const double> data, std::size_t n, std::size_t m,
                                               const WaveletFilter& filter, int coarse_scale,
                                               unsigned threads = 1) {
  if (data.size() != n * m) throw Error(ErrorKind::DimensionMismatch, "buffer size is not n*m");
  std::vector<DenoiseResult> out(n);
  parallel_for(n, threads, [&](std::size_t i) {
    out[i] = denoise_curve(data.subspan(i * m, m), filter, coarse_scale);
  });
  return out;
}

}  // namespace funcdep
