#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "funcdep/wavelet.hpp"

namespace funcdep::testing {

inline std::vector<double> random_vector(std::size_t m, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  std::vector<double> v(m);
  for (double& x : v) x = g(rng);
  return v;
}

inline WaveletCoeffs random_pyramid(int coarse, int top, std::mt19937_64& rng) {
  WaveletCoeffs c = WaveletCoeffs::zeros(coarse, top);
  std::normal_distribution<double> g(0.0, 1.0);
  c.for_each_value([&](double& v) { v = g(rng); });
  return c;
}

inline std::vector<WaveletCoeffs> random_sample(std::size_t n, int coarse, int top, std::mt19937_64& rng) {
  std::vector<WaveletCoeffs> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_pyramid(coarse, top, rng));
  return out;
}

/// Random PSD matrix A A^T with A n x r.
inline Eigen::MatrixXd random_psd(Eigen::Index n, Eigen::Index r, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd a(n, r);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  return a * a.transpose();
}

// Explicit m x m analysis matrix built from per-level circulant blocks.
// Row order matches flatten(): scaling, then details L..J.
inline Eigen::MatrixXd explicit_dwt_matrix(const WaveletFilter& f, std::size_t m, int coarse) {
  const int J = static_cast<int>(std::log2(static_cast<double>(m))) - 1;
  const auto M = static_cast<Eigen::Index>(m);
  Eigen::MatrixXd approx_rows = Eigen::MatrixXd::Identity(M, M);
  std::vector<Eigen::MatrixXd> detail_rows(static_cast<std::size_t>(J - coarse + 1));
  Eigen::Index len = M;
  for (int j = J; j >= coarse; --j) {
    const Eigen::Index half = len / 2;
    Eigen::MatrixXd lo = Eigen::MatrixXd::Zero(half, len), hi = Eigen::MatrixXd::Zero(half, len);
    const auto K = static_cast<Eigen::Index>(f.lowpass_taps.size());
    for (Eigen::Index i = 0; i < half; ++i)
      for (Eigen::Index k = 0; k < K; ++k) {
        const Eigen::Index col = (2 * i + k) % len;
        lo(i, col) += f.lowpass_taps[static_cast<std::size_t>(k)];
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        hi(i, col) += sign * f.lowpass_taps[static_cast<std::size_t>(K - 1 - k)];
      }
    detail_rows[static_cast<std::size_t>(j - coarse)] = hi * approx_rows;
    approx_rows = (lo * approx_rows).eval();
    len = half;
  }
  Eigen::MatrixXd w(M, M);
  Eigen::Index r = 0;
  w.middleRows(r, approx_rows.rows()) = approx_rows;
  r += approx_rows.rows();
  for (const auto& d : detail_rows) {
    w.middleRows(r, d.rows()) = d;
    r += d.rows();
  }
  return w / std::sqrt(static_cast<double>(m));
}

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

}  // namespace funcdep::testing
