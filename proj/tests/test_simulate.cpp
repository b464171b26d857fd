#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "funcdep/simulate.hpp"

using namespace funcdep;

namespace {

const std::set<Method> kEveryMethod{Method::WavHsic, Method::Pearson, Method::Dnm,
                                    Method::Gtemp,   Method::DcovC,   Method::FpcaDcov};

SimConfig config(Setting s, std::size_t n, std::size_t m, double snr, std::size_t reps) {
  SimConfig c;
  c.setting = s;
  c.n = n;
  c.m = m;
  c.snr = snr;
  c.reps = reps;
  c.seed = 7;
  return c;
}

}  // namespace

TEST(FourierBasis, ValuesAndOrthonormality) {
  Eigen::MatrixXd phi = fourier_basis(256, 0.0);
  EXPECT_EQ(phi.rows(), 16);
  EXPECT_EQ(phi.cols(), 256);
  EXPECT_NEAR(phi(0, 0), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(phi(1, 0), 0.0, 1e-15);
  Eigen::MatrixXd gram = phi * phi.transpose() / 256.0;
  EXPECT_LE((gram - Eigen::MatrixXd::Identity(16, 16)).cwiseAbs().maxCoeff(), 1e-3);
  Eigen::MatrixXd shifted = fourier_basis(256, kShiftY);
  for (int k = 0; k < 8; ++k)
    for (Eigen::Index l = 0; l < 256; ++l)
      EXPECT_NEAR(shifted(2 * k, l) * shifted(2 * k, l) + shifted(2 * k + 1, l) * shifted(2 * k + 1, l), 2.0, 1e-12);
  EXPECT_NEAR(shifted(0, 0), std::sqrt(2.0) * std::cos(2 * M_PI * 0.2), 1e-14);
  EXPECT_THROW(fourier_basis(8, 0.0), Error);
}

TEST(Generate, SettingThreeCorrection) {
  SimConfig c = config(Setting::S3, 500, 64, 4.0, 1);
  Engine e = make_engine(1);
  auto [eta, zeta] = generate_scores(c, e);
  for (int k = 9; k <= 16; ++k) {
    const double ev = std::pow(k, -1.05);
    for (Eigen::Index i = 0; i < 500; ++i) EXPECT_NEAR(zeta(i, k - 1), eta(i, k - 1) * eta(i, k - 1) - ev, 1e-15);
    EXPECT_NEAR(zeta.col(k - 1).mean(), 0.0, 4.0 * std::sqrt(2.0) * ev / std::sqrt(500.0));
  }
}

TEST(Generate, SettingTwoWithZeroRhoMatchesSettingOne) {
  SimConfig s1 = config(Setting::S1, 20, 64, 4.0, 1);
  SimConfig s2 = config(Setting::S2, 20, 64, 4.0, 1);
  s2.high_freq_rho = 0.0;
  {
    Engine e1 = make_engine(5), e2 = make_engine(5);
    auto [a1, b1] = generate_scores(s1, e1);
    auto [a2, b2] = generate_scores(s2, e2);
    EXPECT_EQ(a1, a2);
    EXPECT_EQ(b1, b2);
  }
  // Independent streams: band-pooled standardized moments agree within 3 standard errors.
  const int reps = 1000;
  Eigen::ArrayXXd m1 = Eigen::ArrayXXd::Zero(2, 4), m2 = m1;
  for (int r = 0; r < reps; ++r) {
    Engine e1 = make_engine(1000 + static_cast<std::uint64_t>(r));
    Engine e2 = make_engine(900000 + static_cast<std::uint64_t>(r));
    auto p1 = generate_scores(s1, e1);
    auto p2 = generate_scores(s2, e2);
    for (int f = 0; f < 2; ++f)
      for (int k = 0; k < 16; ++k) {
        const double sd = std::sqrt(std::pow(k + 1, f == 0 ? -1.05 : -1.2));
        const int band = k < 8 ? 0 : 1;
        const Eigen::VectorXd c1 = (f == 0 ? p1.first : p1.second).col(k) / sd;
        const Eigen::VectorXd c2 = (f == 0 ? p2.first : p2.second).col(k) / sd;
        m1(f, band) += c1.sum();
        m1(f, 2 + band) += c1.squaredNorm();
        m2(f, band) += c2.sum();
        m2(f, 2 + band) += c2.squaredNorm();
      }
  }
  const double count = reps * 20.0 * 8.0;
  const double se_mean = std::sqrt(2.0 / count), se_var = std::sqrt(2.0 * 2.0 / count);
  for (int f = 0; f < 2; ++f)
    for (int band = 0; band < 2; ++band) {
      EXPECT_NEAR(m1(f, band) / count, m2(f, band) / count, 3.0 * se_mean);
      EXPECT_NEAR(m1(f, 2 + band) / count, m2(f, 2 + band) / count, 3.0 * se_var);
    }
}

TEST(Generate, SettingTwoCorrelation) {
  SimConfig c = config(Setting::S2, 4000, 64, 4.0, 1);
  Engine e = make_engine(3);
  auto [eta, zeta] = generate_scores(c, e);
  for (int k = 1; k <= 16; ++k) {
    Eigen::VectorXd a = eta.col(k - 1).array() - eta.col(k - 1).mean();
    Eigen::VectorXd b = zeta.col(k - 1).array() - zeta.col(k - 1).mean();
    const double r = a.dot(b) / (a.norm() * b.norm());
    EXPECT_NEAR(r, k > 8 ? 0.6 : 0.0, 0.06) << k;
  }
}

TEST(Generate, SnrDefinition) {
  SimConfig c = config(Setting::S1, 200, 256, 4.0, 1);
  SimulatedPair p = generate(c, 0);
  const double ratio_x = pooled_variance(p.x - p.x_clean) / pooled_variance(p.x_clean);
  const double ratio_y = pooled_variance(p.y - p.y_clean) / pooled_variance(p.y_clean);
  EXPECT_GE(ratio_x, 0.23);
  EXPECT_LE(ratio_x, 0.27);
  EXPECT_GE(ratio_y, 0.23);
  EXPECT_LE(ratio_y, 0.27);
  EXPECT_NEAR(p.noise_sd_x * p.noise_sd_x * 4.0, pooled_variance(p.x_clean), 1e-12);
}

TEST(Generate, DeterministicPerReplicate) {
  SimConfig c = config(Setting::S2, 10, 64, 8.0, 1);
  SimulatedPair a = generate(c, 3), b = generate(c, 3), d = generate(c, 4);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
  EXPECT_NE(a.x, d.x);
}

TEST(SimConfig, Validation) {
  SimConfig c = config(Setting::S1, 50, 100, 4.0, 1);
  EXPECT_THROW(c.validate(), Error);
  c.m = 64;
  c.reps = 0;
  EXPECT_THROW(c.validate(), Error);
  c.reps = 1;
  c.n = 1;
  EXPECT_THROW(c.validate(), Error);
}

TEST(RunExperiment, DeterministicAcrossThreadsAndRatesOnGrid) {
  SimConfig c = config(Setting::S2, 30, 64, 4.0, 6);
  c.permutations = 49;
  ExperimentRow a = run_experiment(c, kEveryMethod, 1);
  ExperimentRow b = run_experiment(c, kEveryMethod, 4);
  EXPECT_EQ(a.rejection_rate, b.rejection_rate);
  EXPECT_EQ(a.median_beta_x, b.median_beta_x);
  EXPECT_EQ(a.median_beta_y, b.median_beta_y);
  EXPECT_EQ(a.rejection_rate.size(), 6u);
  for (const auto& [m, rate] : a.rejection_rate) {
    EXPECT_GE(rate, 0.0);
    EXPECT_LE(rate, 1.0);
    EXPECT_NEAR(rate * 6.0, std::round(rate * 6.0), 1e-12);
  }
}

TEST(RunExperiment, SingleReplicateRateIsZeroOrOne) {
  SimConfig c = config(Setting::S1, 20, 64, 4.0, 1);
  c.permutations = 19;
  ExperimentRow r = run_experiment(c, {Method::WavHsic});
  const double rate = r.rejection_rate.at(Method::WavHsic);
  EXPECT_TRUE(rate == 0.0 || rate == 1.0);
}

TEST(RunExperiment, NullCalibrationAllMethods) {
  SimConfig c = config(Setting::S1, 50, 64, 4.0, 199);
  ExperimentRow r = run_experiment(c, kEveryMethod, default_thread_count());
  for (const auto& [m, rate] : r.rejection_rate) EXPECT_LE(rate, 0.12) << method_name(m);
  EXPECT_GE(r.rejection_rate.at(Method::WavHsic), 0.005);
}

TEST(RunExperiment, SettingTwoPowerOrderingAndGrowthInN) {
  SimConfig big = config(Setting::S2, 200, 256, 8.0, 30);
  ExperimentRow r = run_experiment(big, {Method::WavHsic, Method::Dnm, Method::Gtemp}, default_thread_count());
  EXPECT_GT(r.rejection_rate.at(Method::WavHsic), r.rejection_rate.at(Method::Dnm));
  EXPECT_GT(r.rejection_rate.at(Method::WavHsic), r.rejection_rate.at(Method::Gtemp));
  SimConfig small = config(Setting::S2, 50, 256, 8.0, 30);
  ExperimentRow s = run_experiment(small, {Method::WavHsic}, default_thread_count());
  EXPECT_GE(r.rejection_rate.at(Method::WavHsic), s.rejection_rate.at(Method::WavHsic));
}
