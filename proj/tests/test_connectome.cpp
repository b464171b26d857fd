#include <random>

#include <gtest/gtest.h>

#include "funcdep/connectome.hpp"

using namespace funcdep;

namespace {

std::vector<PairResult> with_p(const std::vector<double>& p) {
  std::vector<PairResult> out;
  for (std::size_t k = 0; k < p.size(); ++k) out.push_back({k, k + 1, 0.0, p[k]});
  return out;
}

std::size_t count(const std::vector<bool>& m) { return static_cast<std::size_t>(std::count(m.begin(), m.end(), true)); }

CurveMatrix noise(std::size_t n, std::size_t m, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CurveMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  return x;
}

}  // namespace

TEST(ChannelPairs, CanonicalOrder) {
  auto p = channel_pairs(4);
  ASSERT_EQ(p.size(), 6u);
  EXPECT_EQ(p[0], std::make_pair(std::size_t{0}, std::size_t{1}));
  EXPECT_EQ(p[2], std::make_pair(std::size_t{0}, std::size_t{3}));
  EXPECT_EQ(p[5], std::make_pair(std::size_t{2}, std::size_t{3}));
  EXPECT_EQ(channel_pairs(10).size(), 45u);
  EXPECT_TRUE(channel_pairs(1).empty());
}

TEST(DiscoveryMask, FloorOfRateTimesPairs) {
  std::vector<double> p(45);
  for (std::size_t k = 0; k < 45; ++k) p[k] = static_cast<double>((k * 17) % 45) / 45.0;
  auto pairs = with_p(p);
  auto mask = discovery_mask(pairs, 0.6);
  EXPECT_EQ(count(mask), 27u);
  for (std::size_t k = 0; k < 45; ++k) EXPECT_EQ(mask[k], p[k] < 27.0 / 45.0 - 1e-12) << k;
  EXPECT_EQ(count(discovery_mask(pairs, 1.0)), 45u);
  EXPECT_EQ(count(discovery_mask(pairs, 0.0)), 0u);
  EXPECT_EQ(count(discovery_mask(with_p(std::vector<double>(10, 0.5)), 0.3)), 3u);
}

TEST(DiscoveryMask, TiesByStatisticThenIndex) {
  std::vector<PairResult> pairs{{0, 1, 0.1, 0.01}, {0, 2, -0.9, 0.01}, {1, 2, 0.5, 0.01}, {0, 3, 0.5, 0.01}};
  auto mask = discovery_mask(pairs, 0.5);
  EXPECT_EQ(mask, (std::vector<bool>{false, true, true, false}));
}

TEST(DiscoveryMask, RateOutOfRange) {
  auto pairs = with_p({0.1, 0.2});
  EXPECT_THROW(discovery_mask(pairs, -0.1), Error);
  EXPECT_THROW(discovery_mask(pairs, 1.5), Error);
}

TEST(PairwiseTests, DuplicateChannelGetsMinimalP) {
  std::mt19937_64 rng(3);
  PipelineOptions opt;
  opt.permutations = 99;
  std::vector<CurveMatrix> data{noise(20, 64, rng), noise(20, 64, rng), noise(20, 64, rng)};
  data.push_back(data[0]);
  std::vector<FamilyFit> fits;
  for (const auto& d : data) fits.push_back(fit_family(d, opt, 0.5));
  auto res = pairwise_tests(fits, {}, Method::WavHsic, opt, 9, 1);
  ASSERT_EQ(res.size(), 6u);
  EXPECT_EQ(res[2].a, 0u);
  EXPECT_EQ(res[2].b, 3u);
  EXPECT_DOUBLE_EQ(res[2].p_value, 1.0 / 100.0);
  auto mask = discovery_mask(res, 1.0 / 6.0);
  EXPECT_TRUE(mask[2]);
}

TEST(PairwiseTests, DeterministicAcrossThreadsAndMatchesSinglePair) {
  std::mt19937_64 rng(4);
  PipelineOptions opt;
  opt.permutations = 49;
  std::vector<CurveMatrix> data{noise(15, 32, rng), noise(15, 32, rng), noise(15, 32, rng)};
  std::vector<FamilyFit> fits;
  std::vector<CurveMatrix> den;
  for (const auto& d : data) {
    fits.push_back(fit_family(d, opt));
    den.push_back(reconstruct_curves(fits.back(), opt.filter));
  }
  for (Method m : {Method::WavHsic, Method::Dnm}) {
    auto a = pairwise_tests(fits, den, m, opt, 5, 1);
    auto b = pairwise_tests(fits, den, m, opt, 5, 4);
    for (std::size_t k = 0; k < a.size(); ++k) {
      EXPECT_EQ(a[k].p_value, b[k].p_value);
      EXPECT_EQ(a[k].statistic, b[k].statistic);
    }
  }
  auto all = pairwise_tests(fits, den, Method::WavHsic, opt, 5, 1);
  auto direct = wavhsic_test(fits[1], fits[2], opt, derive_key(5, StreamId::Pair, {1, 2}));
  EXPECT_EQ(all[2].p_value, direct.p_value);
  EXPECT_EQ(all[2].statistic, direct.observed);
}
