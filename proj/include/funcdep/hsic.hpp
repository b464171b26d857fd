#pragma once

// Empirical HSIC  gamma = n^{-2} tr(K H L H)  and its permutation test.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "funcdep/besov.hpp"
#include "funcdep/errors.hpp"
#include "funcdep/parallel.hpp"
#include "funcdep/random.hpp"

namespace funcdep {

/// Statistics in (-kHsicClamp, 0) are roundoff and reported as 0.
inline constexpr double kHsicClamp = 1e-12;

struct HsicResult {
  double statistic = 0.0;
  Eigen::Index n = 0;
  double beta_x = 0.0;
  double beta_y = 0.0;
};

enum class TieRule { Conservative, Random };

constexpr std::string_view tie_rule_name(TieRule r) {
  return r == TieRule::Conservative ? "conservative" : "random";
}

inline std::optional<TieRule> parse_tie_rule(std::string_view s) {
  if (s == "conservative") return TieRule::Conservative;
  if (s == "random") return TieRule::Random;
  return std::nullopt;
}

struct PermutationReport {
  double observed = 0.0;
  std::vector<double> perm_stats;
  std::size_t rank = 1;
  double p_value = 1.0;
  TieRule tie_rule = TieRule::Conservative;
  std::uint64_t seed = 0;

  std::size_t permutations() const { return perm_stats.size(); }
};

namespace detail {

inline void require_conformable(const Eigen::MatrixXd& k, const Eigen::MatrixXd& l) {
  if (k.rows() != k.cols() || l.rows() != l.cols() || k.rows() != l.rows())
    throw Error(ErrorKind::DimensionMismatch, "Gram matrices must be square and of equal size");
  if (k.rows() < 2) throw Error(ErrorKind::SampleTooSmall, "HSIC needs n >= 2");
}

inline double clamp_statistic(double v) { return (v < 0.0 && v > -kHsicClamp) ? 0.0 : v; }

}  // namespace detail

/// H K H without forming H.
inline Eigen::MatrixXd double_center(const Eigen::MatrixXd& k) {
  Eigen::VectorXd row_mean = k.rowwise().mean();
  Eigen::RowVectorXd col_mean = k.colwise().mean();
  double grand = k.mean();
  Eigen::MatrixXd c = k;
  c.colwise() -= row_mean;
  c.rowwise() -= col_mean;
  c.array() += grand;
  return c;
}

inline double empirical_hsic(const Eigen::MatrixXd& k, const Eigen::MatrixXd& l) {
  detail::require_conformable(k, l);
  const double n = static_cast<double>(k.rows());
  Eigen::MatrixXd kc = double_center(k);
  return detail::clamp_statistic(kc.cwiseProduct(l).sum() / (n * n));
}

inline HsicResult empirical_hsic(const GramMatrix& gx, const GramMatrix& gy) {
  return {empirical_hsic(gx.entries, gy.entries), gx.size(), gx.config.beta, gy.config.beta};
}

/// V-statistic expansion of the HSIC double integral, evaluated literally in
/// O(n^3). Kept as an independent reference for empirical_hsic.
inline double hsic_brute_force(const Eigen::MatrixXd& k, const Eigen::MatrixXd& l) {
  detail::require_conformable(k, l);
  const Eigen::Index n = k.rows();
  long double first = 0, second = 0, sum_k = 0, sum_l = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      first += static_cast<long double>(k(i, j)) * l(i, j);
      sum_k += k(i, j);
      sum_l += l(i, j);
      for (Eigen::Index q = 0; q < n; ++q) second += static_cast<long double>(k(i, j)) * l(i, q);
    }
  const long double nn = static_cast<long double>(n);
  long double value = first / (nn * nn) - 2.0L * second / (nn * nn * nn) + sum_k * sum_l / (nn * nn * nn * nn);
  return static_cast<double>(value);
}

inline double hsic_brute_force(const GramMatrix& gx, const GramMatrix& gy) {
  return hsic_brute_force(gx.entries, gy.entries);
}

/// Statistic with L's rows and columns relabeled by perm, given a pre-centered K.
inline double permuted_statistic(const Eigen::MatrixXd& k_centered, const Eigen::MatrixXd& l,
                                 const std::vector<std::size_t>& perm) {
  const Eigen::Index n = k_centered.rows();
  double s = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index pj = static_cast<Eigen::Index>(perm[static_cast<std::size_t>(j)]);
    for (Eigen::Index i = 0; i < n; ++i)
      s += k_centered(i, j) * l(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]), pj);
  }
  const double nn = static_cast<double>(n);
  return detail::clamp_statistic(s / (nn * nn));
}

/// Rank of observed among {observed} U perm_stats in decreasing order.
/// Values within tol of observed count as ties.
inline std::size_t permutation_rank(double observed, const std::vector<double>& perm_stats, double tol,
                                    TieRule rule, std::uint64_t seed) {
  std::size_t greater = 0, ties = 0;
  for (double s : perm_stats) {
    if (s > observed + tol) ++greater;
    else if (s >= observed - tol) ++ties;
  }
  if (rule == TieRule::Conservative || ties == 0) return greater + ties + 1;
  Engine engine = make_engine(seed, StreamId::TieBreak);
  std::uniform_int_distribution<std::size_t> pick(0, ties);
  return greater + 1 + pick(engine);
}

/// Monte-Carlo permutation test with B non-identity permutations of Y.
/// Permutation b draws from the stream keyed by (seed, b), so the report
/// does not depend on the thread count.
inline PermutationReport permutation_test(const Eigen::MatrixXd& k, const Eigen::MatrixXd& l,
                                          std::size_t permutations, std::uint64_t seed,
                                          TieRule rule = TieRule::Conservative, unsigned threads = 1) {
  detail::require_conformable(k, l);
  if (permutations < 1) throw Error(ErrorKind::InvalidPermutationCount, "need at least one permutation");
  const Eigen::Index n = k.rows();
  const double nn = static_cast<double>(n);
  Eigen::MatrixXd kc = double_center(k);

  PermutationReport report;
  report.tie_rule = rule;
  report.seed = seed;
  report.observed = detail::clamp_statistic(kc.cwiseProduct(l).sum() / (nn * nn));
  report.perm_stats.assign(permutations, 0.0);
  parallel_for(permutations, threads, [&](std::size_t b) {
    Engine engine = make_engine(seed, StreamId::Permutation, {b});
    auto perm = random_non_identity_permutation(static_cast<std::size_t>(n), engine);
    report.perm_stats[b] = permuted_statistic(kc, l, perm);
  });

  // Cauchy-Schwarz bound on |statistic|; ties are judged relative to it.
  const double scale = kc.norm() * double_center(l).norm() / (nn * nn);
  report.rank = permutation_rank(report.observed, report.perm_stats, 1e-10 * scale, rule, seed);
  report.p_value = static_cast<double>(report.rank) / static_cast<double>(permutations + 1);
  return report;
}

inline PermutationReport permutation_test(const GramMatrix& gx, const GramMatrix& gy, std::size_t permutations,
                                          std::uint64_t seed, TieRule rule = TieRule::Conservative,
                                          unsigned threads = 1) {
  return permutation_test(gx.entries, gy.entries, permutations, seed, rule, threads);
}

}  // namespace funcdep
