#pragma once

// Periodized orthogonal discrete wavelet transform on [0,1].
//
// Coefficients use the function-space normalization: the orthonormal
// filter-bank output is multiplied by m^{-1/2}, so each coefficient
// approximates the integral of f against the corresponding L2-normalized
// scaling function or wavelet. Under that convention
//   sum(theta^2) == sum(x^2) / m.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "funcdep/errors.hpp"

namespace funcdep {

enum class FilterId { Haar, D2, D4, D10 };

struct WaveletFilter {
  FilterId id;
  std::vector<double> lowpass_taps;
  int vanishing_moments;
  /// Hoelder exponent of the mother wavelet as tabulated by Daubechies.
  double holder_alpha;

  std::size_t length() const { return lowpass_taps.size(); }

  /// Quadrature-mirror highpass: g_k = (-1)^k h_{K-1-k}.
  double highpass(std::size_t k) const {
    double h = lowpass_taps[length() - 1 - k];
    return (k % 2 == 0) ? h : -h;
  }
};

namespace detail {

// Daubechies extremal-phase lowpass taps, sum normalized to sqrt(2).
inline constexpr std::array<double, 4> kDaub2 = {
    0.48296291314453416, 0.8365163037378079, 0.2241438680420134, -0.12940952255126037};

inline constexpr std::array<double, 8> kDaub4 = {
    0.2303778133088965,   0.7148465705529157,  0.6308807679298589,  -0.027983769416859854,
    -0.18703481171909309, 0.030841381835560764, 0.0328830116668852, -0.010597401785069032};

inline constexpr std::array<double, 20> kDaub10 = {
    0.026670057900555554,    0.1881768000776915,     0.5272011889317256,
    0.6884590394536035,      0.2811723436605775,     -0.24984642432731538,
    -0.19594627437737705,    0.12736934033579325,    0.09305736460357235,
    -0.07139414716639708,    -0.029457536821875813,  0.033212674059341,
    0.0036065535669561697,   -0.010733175483330575,  0.001395351747052901,
    0.001992405295185056,    -0.0006858566949597116, -0.00011646685512928545,
    9.358867032006959e-05,   -1.3264202894521244e-05};

}  // namespace detail

inline WaveletFilter make_filter(FilterId id) {
  switch (id) {
    case FilterId::Haar: {
      const double h = 1.0 / std::sqrt(2.0);
      // Haar is discontinuous; 1/2 is its L2-Sobolev regularity.
      return {id, {h, h}, 1, 0.5};
    }
    case FilterId::D2:
      return {id, {detail::kDaub2.begin(), detail::kDaub2.end()}, 2, 0.5500};
    case FilterId::D4:
      return {id, {detail::kDaub4.begin(), detail::kDaub4.end()}, 4, 1.6179};
    case FilterId::D10:
      return {id, {detail::kDaub10.begin(), detail::kDaub10.end()}, 10, 2.902};
  }
  throw Error(ErrorKind::UsageError, "unknown filter id");
}

constexpr std::string_view filter_name(FilterId id) {
  switch (id) {
    case FilterId::Haar: return "haar";
    case FilterId::D2: return "d2";
    case FilterId::D4: return "d4";
    case FilterId::D10: return "d10";
  }
  return "?";
}

inline std::optional<FilterId> parse_filter(std::string_view name) {
  for (FilterId id : {FilterId::Haar, FilterId::D2, FilterId::D4, FilterId::D10})
    if (filter_name(id) == name) return id;
  return std::nullopt;
}

/// Coefficient pyramid (xi, theta_L, ..., theta_J) for a length m = 2^{J+1} signal.
///
/// The scaling block xi has length 2^L. Following the usual re-indexing it
/// also serves as the virtual levels -1..L-1: level -1 is xi[0] and level
/// j in [0, L) is xi[2^j .. 2^{j+1}).
struct WaveletCoeffs {
  int coarse_scale = 0;
  int max_level = 0;
  std::vector<double> scaling;
  std::vector<std::vector<double>> details;  // details[j - L] has length 2^j

  std::size_t grid_size() const { return std::size_t{1} << (max_level + 1); }

  /// Lowest level index present (always -1).
  static constexpr int min_level() { return -1; }

  bool has_level(int j) const { return j >= -1 && j <= max_level; }

  /// Block for level j in [-1, J], including the virtual sub-coarse levels.
  std::span<const double> level(int j) const {
    if (!has_level(j)) throw Error(ErrorKind::InvalidScale, "level " + std::to_string(j) + " not present");
    if (j >= coarse_scale) return details[static_cast<std::size_t>(j - coarse_scale)];
    if (j < 0) return std::span<const double>(scaling).subspan(0, 1);
    std::size_t start = std::size_t{1} << j;
    return std::span<const double>(scaling).subspan(start, start);
  }

  std::span<double> level(int j) {
    auto c = static_cast<const WaveletCoeffs&>(*this).level(j);
    return {const_cast<double*>(c.data()), c.size()};
  }

  std::span<const double> detail(int j) const {
    if (j < coarse_scale || j > max_level)
      throw Error(ErrorKind::InvalidScale, "detail level " + std::to_string(j) + " not present");
    return details[static_cast<std::size_t>(j - coarse_scale)];
  }

  /// Throws MalformedPyramid unless every block has its dyadic length.
  void validate() const {
    if (coarse_scale < 0 || coarse_scale > max_level || max_level < 0 || max_level > 40)
      throw Error(ErrorKind::MalformedPyramid, "inconsistent coarse/max level");
    if (scaling.size() != (std::size_t{1} << coarse_scale))
      throw Error(ErrorKind::MalformedPyramid, "scaling block has length " + std::to_string(scaling.size()));
    if (details.size() != static_cast<std::size_t>(max_level - coarse_scale + 1))
      throw Error(ErrorKind::MalformedPyramid, "wrong number of detail blocks");
    for (int j = coarse_scale; j <= max_level; ++j)
      if (details[static_cast<std::size_t>(j - coarse_scale)].size() != (std::size_t{1} << j))
        throw Error(ErrorKind::MalformedPyramid, "detail block " + std::to_string(j) + " has wrong length");
  }

  bool same_shape(const WaveletCoeffs& other) const {
    return coarse_scale == other.coarse_scale && max_level == other.max_level;
  }

  /// Zero pyramid with the given structure.
  static WaveletCoeffs zeros(int coarse_scale, int max_level) {
    WaveletCoeffs c;
    c.coarse_scale = coarse_scale;
    c.max_level = max_level;
    c.scaling.assign(std::size_t{1} << coarse_scale, 0.0);
    for (int j = coarse_scale; j <= max_level; ++j) c.details.emplace_back(std::size_t{1} << j, 0.0);
    return c;
  }

  /// All coefficients concatenated as (xi, theta_L, ..., theta_J).
  std::vector<double> flatten() const {
    std::vector<double> out(scaling);
    for (const auto& d : details) out.insert(out.end(), d.begin(), d.end());
    return out;
  }

  template <class Fn>
  void for_each_value(Fn&& fn) {
    for (double& v : scaling) fn(v);
    for (auto& d : details)
      for (double& v : d) fn(v);
  }

  WaveletCoeffs& operator+=(const WaveletCoeffs& rhs) { return combine(rhs, 1.0); }
  WaveletCoeffs& operator-=(const WaveletCoeffs& rhs) { return combine(rhs, -1.0); }
  WaveletCoeffs& operator*=(double a) {
    for_each_value([a](double& v) { v *= a; });
    return *this;
  }

  friend WaveletCoeffs operator+(WaveletCoeffs a, const WaveletCoeffs& b) { return a += b; }
  friend WaveletCoeffs operator-(WaveletCoeffs a, const WaveletCoeffs& b) { return a -= b; }
  friend WaveletCoeffs operator*(double s, WaveletCoeffs a) { return a *= s; }

 private:
  WaveletCoeffs& combine(const WaveletCoeffs& rhs, double sign) {
    if (!same_shape(rhs)) throw Error(ErrorKind::DimensionMismatch, "pyramids differ in structure");
    for (std::size_t k = 0; k < scaling.size(); ++k) scaling[k] += sign * rhs.scaling[k];
    for (std::size_t b = 0; b < details.size(); ++b)
      for (std::size_t k = 0; k < details[b].size(); ++k) details[b][k] += sign * rhs.details[b][k];
    return *this;
  }
};

/// log2(m) - 1 for a power-of-two m >= 2; throws InvalidGrid otherwise.
inline int finest_level(std::size_t m) {
  if (m < 2 || !std::has_single_bit(m))
    throw Error(ErrorKind::InvalidGrid, "grid size " + std::to_string(m) + " is not a power of two >= 2");
  return std::bit_width(m) - 2;
}

namespace detail {

// One analysis step on the first `len` entries of buf; approximation goes to
// out_approx, detail to out_detail (each len/2).
inline void analysis_step(std::span<const double> in, const WaveletFilter& f,
                          std::span<double> approx, std::span<double> det) {
  const std::size_t len = in.size();
  const std::size_t half = len / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double a = 0.0, d = 0.0;
    for (std::size_t k = 0; k < f.length(); ++k) {
      double x = in[(2 * i + k) % len];
      a += f.lowpass_taps[k] * x;
      d += f.highpass(k) * x;
    }
    approx[i] = a;
    det[i] = d;
  }
}

inline void synthesis_step(std::span<const double> approx, std::span<const double> det,
                           const WaveletFilter& f, std::span<double> out) {
  const std::size_t len = out.size();
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < approx.size(); ++i)
    for (std::size_t k = 0; k < f.length(); ++k)
      out[(2 * i + k) % len] += f.lowpass_taps[k] * approx[i] + f.highpass(k) * det[i];
}

}  // namespace detail

/// Forward periodized DWT down to coarse scale L.
inline WaveletCoeffs forward_dwt(std::span<const double> x, const WaveletFilter& filter, int coarse_scale) {
  const int J = finest_level(x.size());
  if (coarse_scale < 0 || coarse_scale > J)
    throw Error(ErrorKind::InvalidScale,
                "coarse scale " + std::to_string(coarse_scale) + " outside [0, " + std::to_string(J) + "]");

  WaveletCoeffs out = WaveletCoeffs::zeros(coarse_scale, J);
  const double norm = 1.0 / std::sqrt(static_cast<double>(x.size()));
  std::vector<double> current(x.begin(), x.end());
  std::vector<double> approx;
  for (int j = J; j >= coarse_scale; --j) {
    approx.assign(current.size() / 2, 0.0);
    auto& det = out.details[static_cast<std::size_t>(j - coarse_scale)];
    detail::analysis_step(current, filter, approx, det);
    for (double& v : det) v *= norm;
    current.swap(approx);
  }
  for (std::size_t k = 0; k < current.size(); ++k) out.scaling[k] = current[k] * norm;
  return out;
}

/// Inverse of forward_dwt under the same normalization.
inline std::vector<double> inverse_dwt(const WaveletCoeffs& coeffs, const WaveletFilter& filter) {
  coeffs.validate();
  const double scale = std::sqrt(static_cast<double>(coeffs.grid_size()));
  std::vector<double> current(coeffs.scaling);
  for (double& v : current) v *= scale;
  std::vector<double> det, next;
  for (int j = coeffs.coarse_scale; j <= coeffs.max_level; ++j) {
    const auto& block = coeffs.details[static_cast<std::size_t>(j - coeffs.coarse_scale)];
    det.assign(block.begin(), block.end());
    for (double& v : det) v *= scale;
    next.assign(current.size() * 2, 0.0);
    detail::synthesis_step(current, det, filter, next);
    current.swap(next);
  }
  return current;
}

}  // namespace funcdep
