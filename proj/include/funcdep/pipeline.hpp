#pragma once

// End-to-end wavelet HSIC test: denoise each curve, pick beta per family,
// build Besov Gram matrices and run the permutation test.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "funcdep/baselines.hpp"
#include "funcdep/besov.hpp"
#include "funcdep/denoise.hpp"
#include "funcdep/hsic.hpp"
#include "funcdep/tuning.hpp"
#include "funcdep/wavelet.hpp"

namespace funcdep {

struct PipelineOptions {
  FilterId filter = FilterId::D10;
  int coarse_scale = 1;
  std::optional<double> beta_max;  // default 0.95 * holder_alpha
  std::optional<LevelBand> band;
  std::size_t permutations = 199;
  TieRule tie_rule = TieRule::Conservative;
  double fpca_var_frac = 0.95;
  unsigned threads = 1;
};

/// One function family after denoising and beta selection.
struct FamilyFit {
  std::vector<WaveletCoeffs> coeffs;     // soft-thresholded
  std::vector<WaveletCoeffs> residuals;  // raw minus thresholded
  std::vector<double> noise_sd;
  BetaSelection selection;
  double beta = 0.0;
  bool beta_fixed = false;
};

inline FamilyFit fit_family(const CurveMatrix& x, const PipelineOptions& opt,
                            std::optional<double> fixed_beta = std::nullopt) {
  const WaveletFilter filter = make_filter(opt.filter);
  const std::size_t n = static_cast<std::size_t>(x.rows()), m = static_cast<std::size_t>(x.cols());
  auto results = denoise_rows(std::span<const double>(x.data(), n * m), n, m, filter, opt.coarse_scale, opt.threads);
  FamilyFit fit;
  fit.coeffs.reserve(n);
  fit.residuals.reserve(n);
  for (auto& r : results) {
    fit.noise_sd.push_back(r.noise.delta_hat);
    fit.coeffs.push_back(std::move(r.coeffs));
    fit.residuals.push_back(std::move(r.residual_coeffs));
  }
  if (fixed_beta) {
    fit.beta = *fixed_beta;
    fit.beta_fixed = true;
  } else {
    fit.selection = select_beta(fit.coeffs, fit.residuals, opt.coarse_scale,
                                opt.beta_max.value_or(default_beta_max(filter)), opt.band);
    fit.beta = fit.selection.beta;
  }
  return fit;
}

/// Denoised curves on the sample grid, one row per subject.
inline CurveMatrix reconstruct_curves(const FamilyFit& fit, FilterId filter_id) {
  const WaveletFilter filter = make_filter(filter_id);
  const Eigen::Index n = static_cast<Eigen::Index>(fit.coeffs.size());
  const Eigen::Index m = static_cast<Eigen::Index>(fit.coeffs.front().grid_size());
  CurveMatrix out(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto row = inverse_dwt(fit.coeffs[static_cast<std::size_t>(i)], filter);
    out.row(i) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), m);
  }
  return out;
}

inline PermutationReport wavhsic_test(const FamilyFit& fx, const FamilyFit& fy, const PipelineOptions& opt,
                                      std::uint64_t seed) {
  GramMatrix gx = gram_matrix(fx.coeffs, fx.beta);
  GramMatrix gy = gram_matrix(fy.coeffs, fy.beta);
  return permutation_test(gx, gy, opt.permutations, seed, opt.tie_rule, opt.threads);
}

/// Runs one comparison method on denoised curves.
inline BaselineResult run_baseline(Method method, const CurveMatrix& x, const CurveMatrix& y,
                                   const PipelineOptions& opt, std::uint64_t seed) {
  switch (method) {
    case Method::Pearson: return pearson_fisher_t(x, y);
    case Method::Dnm: return dynamical_correlation(x, y, opt.permutations, seed);
    case Method::Gtemp: return global_temporal_correlation(x, y, opt.permutations, seed);
    case Method::DcovC: return dcov_bias_corrected_t(x, y);
    case Method::FpcaDcov: return fpca_dcov(x, y, opt.fpca_var_frac, opt.permutations, seed);
    case Method::WavHsic: break;
  }
  throw Error(ErrorKind::UsageError, "wavhsic is not a baseline");
}

}  // namespace funcdep
