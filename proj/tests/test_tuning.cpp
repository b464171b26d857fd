#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "funcdep/tuning.hpp"
#include "support.hpp"

using namespace funcdep;
using funcdep::testing::random_sample;
using funcdep::testing::rel_err;

namespace {

std::vector<WaveletCoeffs> zeros_like(const std::vector<WaveletCoeffs>& s) {
  return std::vector<WaveletCoeffs>(s.size(), WaveletCoeffs::zeros(s.front().coarse_scale, s.front().max_level));
}

// Sample whose level-j blocks have standard deviation sd(j).
template <class Sd>
std::vector<WaveletCoeffs> scaled_sample(std::size_t n, int coarse, int top, Sd sd, std::mt19937_64& rng) {
  auto s = random_sample(n, coarse, top, rng);
  for (auto& c : s)
    for (int j = coarse; j <= top; ++j)
      for (double& v : c.level(j)) v *= sd(j);
  return s;
}

}  // namespace

TEST(ScaleDistanceVariance, IdenticalBlocksGiveZero) {
  std::mt19937_64 rng(1);
  auto s = random_sample(6, 1, 5, rng);
  for (auto& c : s)
    for (double& v : c.level(3)) v = 0.25;
  EXPECT_EQ(scale_distance_variance(s, 3), 0.0);
}

TEST(ScaleDistanceVariance, NonNegativeAndMatchesBruteForce) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 10; ++rep) {
    auto s = random_sample(12, 1, 5, rng);
    for (int j = 1; j <= 5; ++j) {
      const double d = scale_distance_variance(s, j);
      EXPECT_GE(d, 0.0);
      Eigen::MatrixXd g = per_scale_gram(s, j).entries;
      EXPECT_LE(rel_err(d, hsic_brute_force(g, g)), 1e-12);
    }
  }
}

TEST(CutoffScale, ZeroResidualGivesFinestLevel) {
  std::mt19937_64 rng(3);
  auto s = random_sample(8, 2, 6, rng);
  EXPECT_EQ(cutoff_scale(s, zeros_like(s), 2), 6);
}

TEST(CutoffScale, ZeroSignalDetailsGiveNoUsableScale) {
  std::mt19937_64 rng(4);
  auto resid = random_sample(8, 2, 6, rng);
  auto sig = random_sample(8, 2, 6, rng);
  for (auto& c : sig)
    for (auto& d : c.details) std::fill(d.begin(), d.end(), 0.0);
  EXPECT_EQ(cutoff_scale(sig, resid, 2), 1);
}

TEST(CutoffScale, MatchesDirectSetEnumeration) {
  std::mt19937_64 rng(5);
  auto sig = scaled_sample(40, 2, 8, [](int j) { return j <= 5 ? 1.0 : 0.01; }, rng);
  auto res = scaled_sample(40, 2, 8, [](int) { return 0.2; }, rng);
  ScaleProfile p = scale_profile(sig, res, 2);
  int expect = 1;
  for (std::size_t i = 0; i < p.levels.size(); ++i)
    if (p.dvar_signal[i] >= p.dvar_residual[i]) expect = std::max(expect, p.levels[i]);
  EXPECT_EQ(p.cutoff, expect);
  EXPECT_EQ(p.cutoff, 5);
  EXPECT_EQ(p.levels.front(), 2);
  EXPECT_EQ(p.levels.back(), 8);
}

TEST(CutoffScale, StructureMismatch) {
  std::mt19937_64 rng(6);
  auto a = random_sample(5, 1, 4, rng), b = random_sample(5, 1, 5, rng);
  try {
    cutoff_scale(a, b, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
}

TEST(SelectBeta, ExactPowerLawRecovered) {
  const double beta = 0.73, c = 1.9;
  ScaleProfile p;
  for (int j = 2; j <= 7; ++j) {
    p.levels.push_back(j);
    p.dvar_signal.push_back(c * c * std::exp2(-4.0 * beta * j));
    p.dvar_residual.push_back(0.0);
  }
  p.cutoff = 7;
  BetaSelection s = select_beta_from_profile(p, 5.0);
  EXPECT_NEAR(s.beta, beta, 1e-12);
  EXPECT_NEAR(s.fit.intercept, std::log2(c), 1e-12);
  EXPECT_FALSE(s.fallback_used);
  EXPECT_EQ(s.fit.levels_used.size(), 6u);

  BetaSelection clamped = select_beta_from_profile(p, 0.5);
  EXPECT_EQ(clamped.beta, 0.5);
  LevelBand band{3, 4};
  BetaSelection banded = select_beta_from_profile(p, 5.0, band);
  EXPECT_NEAR(banded.beta, beta, 1e-12);
  EXPECT_EQ(banded.fit.levels_used, (std::vector<int>{3, 4}));
}

TEST(SelectBeta, FallbackWithFewerThanTwoLevels) {
  ScaleProfile p;
  p.levels = {3, 4, 5};
  p.dvar_signal = {1.0, 0.0, 0.5};
  p.dvar_residual = {0.1, 0.1, 0.1};
  p.cutoff = 4;  // level 4 has zero dvar, leaving one usable level
  BetaSelection s = select_beta_from_profile(p, 2.0);
  EXPECT_TRUE(s.fallback_used);
  EXPECT_EQ(s.beta, 0.0);
}

TEST(SelectBeta, IncreasingProfileClampsToZero) {
  ScaleProfile p;
  p.levels = {1, 2, 3};
  p.dvar_signal = {1.0, 2.0, 4.0};
  p.dvar_residual = {0, 0, 0};
  p.cutoff = 3;
  EXPECT_EQ(select_beta_from_profile(p, 2.0).beta, 0.0);
}

TEST(SelectBeta, ScaleEquivarianceAndOrderInvariance) {
  std::mt19937_64 rng(7);
  auto sig = scaled_sample(30, 1, 6, [](int j) { return std::exp2(-0.8 * j); }, rng);
  auto res = scaled_sample(30, 1, 6, [](int) { return 0.001; }, rng);
  BetaSelection base = select_beta(sig, res, 1, 3.0);
  EXPECT_GT(base.beta, 0.0);

  auto sig2 = sig, res2 = res;
  for (auto& c : sig2) c *= 3.0;
  for (auto& c : res2) c *= 3.0;
  BetaSelection scaled = select_beta(sig2, res2, 1, 3.0);
  EXPECT_NEAR(scaled.beta, base.beta, 1e-10);
  for (std::size_t i = 0; i < base.profile.levels.size(); ++i)
    EXPECT_LE(rel_err(scaled.profile.dvar_signal[i], 81.0 * base.profile.dvar_signal[i]), 1e-10);

  std::reverse(sig2.begin(), sig2.end());
  std::reverse(res2.begin(), res2.end());
  EXPECT_NEAR(select_beta(sig2, res2, 1, 3.0).beta, base.beta, 1e-10);
}

TEST(SelectBeta, DefaultBetaMax) {
  EXPECT_NEAR(default_beta_max(make_filter(FilterId::D10)), 0.95 * 2.902, 1e-3);
  EXPECT_LT(default_beta_max(make_filter(FilterId::D4)), make_filter(FilterId::D4).holder_alpha);
}

TEST(LeastSquares, Line) {
  std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  auto [a, b] = least_squares_line(x, y);
  EXPECT_NEAR(a, 1.0, 1e-14);
  EXPECT_NEAR(b, 2.0, 1e-14);
}
