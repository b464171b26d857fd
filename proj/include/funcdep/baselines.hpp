#pragma once

// Comparison tests for functional dependence: subject-wise Pearson with a
// Fisher-z t-test, dynamical correlation, global temporal correlation,
// bias-corrected distance-correlation t-test, and distance covariance on
// leading FPC scores. Integrals use the trapezoidal rule on the regular grid
// t_l = l/m, l = 0..m-1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "funcdep/errors.hpp"
#include "funcdep/hsic.hpp"
#include "funcdep/random.hpp"

namespace funcdep {

/// Rows are subjects, columns are grid points.
using CurveMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Method { WavHsic, Pearson, Dnm, Gtemp, DcovC, FpcaDcov };

inline constexpr Method kAllMethods[] = {Method::Pearson, Method::Dnm,      Method::Gtemp,
                                         Method::DcovC,   Method::FpcaDcov, Method::WavHsic};

constexpr std::string_view method_name(Method m) {
  switch (m) {
    case Method::WavHsic: return "wavhsic";
    case Method::Pearson: return "pearson";
    case Method::Dnm: return "dnm";
    case Method::Gtemp: return "gtemp";
    case Method::DcovC: return "dcov_c";
    case Method::FpcaDcov: return "fpca_dcov";
  }
  return "?";
}

inline std::optional<Method> parse_method(std::string_view s) {
  for (Method m : kAllMethods)
    if (method_name(m) == s) return m;
  return std::nullopt;
}

struct BaselineResult {
  Method method;
  double statistic = 0.0;
  double p_value = 1.0;
  std::map<std::string, double> detail;
};

namespace detail {

inline void require_pair(const CurveMatrix& x, const CurveMatrix& y, Eigen::Index min_n) {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw Error(ErrorKind::DimensionMismatch, "curve matrices differ in shape");
  if (x.rows() < min_n)
    throw Error(ErrorKind::SampleTooSmall, "need at least " + std::to_string(min_n) + " subjects");
}

inline Eigen::VectorXd trapezoid_weights(Eigen::Index m) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  if (m > 1) {
    w(0) *= 0.5;
    w(m - 1) *= 0.5;
  }
  return w;
}

inline double pearson(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                      bool* degenerate = nullptr) {
  Eigen::VectorXd ac = a.array() - a.mean();
  Eigen::VectorXd bc = b.array() - b.mean();
  const double saa = ac.squaredNorm(), sbb = bc.squaredNorm();
  if (!(saa > 0.0) || !(sbb > 0.0)) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  if (degenerate) *degenerate = false;
  return std::clamp(ac.dot(bc) / std::sqrt(saa * sbb), -1.0, 1.0);
}

inline double student_t_upper(double t, double df) {
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  boost::math::students_t dist(df);
  return boost::math::cdf(boost::math::complement(dist, t));
}

/// Conservative Monte-Carlo p-value for a two-sided statistic.
template <class PermStat>
double two_sided_permutation_pvalue(double observed, std::size_t n, std::size_t permutations, std::uint64_t seed,
                                    PermStat&& stat_of) {
  if (permutations < 1) throw Error(ErrorKind::InvalidPermutationCount, "need at least one permutation");
  std::vector<double> stats(permutations);
  for (std::size_t b = 0; b < permutations; ++b) {
    Engine engine = make_engine(seed, StreamId::Permutation, {b});
    stats[b] = std::abs(stat_of(random_non_identity_permutation(n, engine)));
  }
  const double obs = std::abs(observed);
  std::size_t rank = permutation_rank(obs, stats, 1e-12 * obs, TieRule::Conservative, seed);
  return static_cast<double>(rank) / static_cast<double>(permutations + 1);
}

inline std::uint64_t method_seed(std::uint64_t seed, Method m) {
  return derive_key(seed, StreamId::Baseline, {static_cast<std::uint64_t>(m)});
}

/// Pairwise Euclidean distances between rows.
inline Eigen::MatrixXd distance_matrix(const Eigen::MatrixXd& rows) {
  const Eigen::Index n = rows.rows();
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = (rows.row(i) - rows.row(j)).norm();
  }
  return d;
}

/// U-centering: A~_ij = a_ij - a_i./(n-2) - a_.j/(n-2) + a../((n-1)(n-2)), zero diagonal.
inline Eigen::MatrixXd u_center(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  const double nd = static_cast<double>(n);
  Eigen::VectorXd row = a.rowwise().sum();
  Eigen::RowVectorXd col = a.colwise().sum();
  const double total = a.sum();
  Eigen::MatrixXd u(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      u(i, j) = (i == j) ? 0.0
                         : a(i, j) - row(i) / (nd - 2) - col(j) / (nd - 2) + total / ((nd - 1) * (nd - 2));
  return u;
}

inline double u_inner(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double nd = static_cast<double>(a.rows());
  return a.cwiseProduct(b).sum() / (nd * (nd - 3));
}

}  // namespace detail

/// Per-subject Pearson correlation over time, Fisher z, two-sided one-sample t-test.
inline BaselineResult pearson_fisher_t(const CurveMatrix& x, const CurveMatrix& y) {
  detail::require_pair(x, y, 3);
  constexpr double kClamp = 1.0 - 1e-12;
  std::vector<double> z;
  z.reserve(static_cast<std::size_t>(x.rows()));
  double excluded = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    bool degenerate = false;
    double r = detail::pearson(x.row(i).transpose(), y.row(i).transpose(), &degenerate);
    if (degenerate) {
      ++excluded;
      continue;
    }
    z.push_back(std::atanh(std::clamp(r, -kClamp, kClamp)));
  }
  if (z.size() < 3)
    throw Error(ErrorKind::DegenerateCurve, "fewer than 3 subjects with non-constant curves");

  const double n = static_cast<double>(z.size());
  double mean = 0;
  for (double v : z) mean += v;
  mean /= n;
  double ss = 0;
  for (double v : z) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1));

  BaselineResult res{Method::Pearson, 0.0, 1.0, {}};
  if (sd > 0.0) {
    res.statistic = mean / (sd / std::sqrt(n));
    res.p_value = std::min(1.0, 2.0 * detail::student_t_upper(std::abs(res.statistic), n - 1));
  } else if (mean != 0.0) {
    res.statistic = std::copysign(HUGE_VAL, mean);
    res.p_value = 0.0;
  }
  res.detail["excluded_subjects"] = excluded;
  res.detail["df"] = n - 1;
  res.detail["mean_z"] = mean;
  return res;
}

/// Curves centered by their time average and scaled to unit L2 norm.
inline CurveMatrix standardize_curves(const CurveMatrix& x) {
  const Eigen::VectorXd w = detail::trapezoid_weights(x.cols());
  const double wsum = w.sum();
  CurveMatrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::VectorXd row = x.row(i).transpose();
    const double avg = row.dot(w) / wsum;
    row.array() -= avg;
    const double norm = std::sqrt(row.cwiseProduct(row).dot(w));
    if (!(norm > 0.0)) throw Error(ErrorKind::DegenerateCurve, "subject " + std::to_string(i) + " has zero norm");
    out.row(i) = (row / norm).transpose();
  }
  return out;
}

/// Mean over subjects of the cosine between standardized curves; permutation p-value.
inline BaselineResult dynamical_correlation(const CurveMatrix& x, const CurveMatrix& y, std::size_t permutations,
                                            std::uint64_t seed) {
  detail::require_pair(x, y, 2);
  const Eigen::VectorXd w = detail::trapezoid_weights(x.cols());
  CurveMatrix xs = standardize_curves(x), ys = standardize_curves(y);
  // cross(i, k) = <x~_i, y~_k>
  Eigen::MatrixXd cross = xs * w.asDiagonal() * ys.transpose();
  const std::size_t n = static_cast<std::size_t>(x.rows());
  auto stat_of = [&](const std::vector<std::size_t>& perm) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += cross(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(perm[i]));
    return s / static_cast<double>(n);
  };
  BaselineResult res{Method::Dnm, cross.diagonal().mean(), 1.0, {}};
  res.statistic = std::clamp(res.statistic, -1.0, 1.0);
  res.p_value = detail::two_sided_permutation_pvalue(res.statistic, n, permutations,
                                                     detail::method_seed(seed, Method::Dnm), stat_of);
  return res;
}

/// Normalized trapezoidal integral of the cross-subject correlation curve r(t).
inline BaselineResult global_temporal_correlation(const CurveMatrix& x, const CurveMatrix& y,
                                                  std::size_t permutations, std::uint64_t seed) {
  detail::require_pair(x, y, 3);
  const Eigen::Index n = x.rows(), m = x.cols();
  const Eigen::VectorXd w = detail::trapezoid_weights(m);
  const double wsum = w.sum();

  // Columns centered and scaled to unit norm; zero-variance columns stay zero.
  CurveMatrix xc = x.rowwise() - x.colwise().mean();
  CurveMatrix yc = y.rowwise() - y.colwise().mean();
  double degenerate_points = 0;
  for (Eigen::Index l = 0; l < m; ++l) {
    const double nx = xc.col(l).norm(), ny = yc.col(l).norm();
    if (nx > 0.0 && ny > 0.0) {
      xc.col(l) /= nx;
      yc.col(l) /= ny;
    } else {
      xc.col(l).setZero();
      yc.col(l).setZero();
      ++degenerate_points;
    }
  }
  auto stat_of = [&](const std::vector<std::size_t>& perm) {
    double s = 0;
    for (Eigen::Index l = 0; l < m; ++l) {
      double r = 0;
      for (Eigen::Index i = 0; i < n; ++i) r += xc(i, l) * yc(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]), l);
      s += w(l) * std::clamp(r, -1.0, 1.0);
    }
    return s / wsum;
  };
  std::vector<std::size_t> id(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < id.size(); ++i) id[i] = i;

  BaselineResult res{Method::Gtemp, stat_of(id), 1.0, {}};
  res.p_value = detail::two_sided_permutation_pvalue(res.statistic, static_cast<std::size_t>(n), permutations,
                                                     detail::method_seed(seed, Method::Gtemp), stat_of);
  res.detail["degenerate_points"] = degenerate_points;
  return res;
}

/// Bias-corrected distance correlation t-test for high-dimensional vectors.
/// Rows are subjects; one-sided, rejecting for large T.
inline BaselineResult dcov_bias_corrected_t(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  if (x.rows() != y.rows()) throw Error(ErrorKind::DimensionMismatch, "x and y differ in subject count");
  if (x.rows() < 4) throw Error(ErrorKind::SampleTooSmall, "dcov_c needs n >= 4");
  const double n = static_cast<double>(x.rows());
  Eigen::MatrixXd a = detail::u_center(detail::distance_matrix(x));
  Eigen::MatrixXd b = detail::u_center(detail::distance_matrix(y));
  const double xy = detail::u_inner(a, b), xx = detail::u_inner(a, a), yy = detail::u_inner(b, b);
  double r = 0.0;
  if (xx > 0.0 && yy > 0.0) r = xy / std::sqrt(xx * yy);
  const double r2 = std::min(r * r, 1.0 - 1e-12);
  const double v = n * (n - 3) / 2;
  BaselineResult res{Method::DcovC, std::sqrt(v - 1) * r / std::sqrt(1 - r2), 1.0, {}};
  res.p_value = detail::student_t_upper(res.statistic, v - 1);
  res.detail["df"] = v - 1;
  res.detail["r_star"] = r;
  return res;
}

struct FpcaScores {
  Eigen::MatrixXd scores;          // n x K
  Eigen::VectorXd eigenvalues;     // all covariance-operator eigenvalues, descending
  Eigen::MatrixXd eigenfunctions;  // m x K, L2-normalized on the grid
  Eigen::RowVectorXd mean;
  Eigen::Index components = 0;
};

/// Leading FPC scores explaining at least var_frac of the variance.
/// The covariance operator uses grid weights 1/m, so eigenfunctions are
/// sqrt(m) times unit eigenvectors and scores are L2 inner products.
inline FpcaScores fpca(const CurveMatrix& x, double var_frac) {
  if (x.rows() < 2) throw Error(ErrorKind::SampleTooSmall, "fpca needs n >= 2");
  if (!(var_frac > 0.0 && var_frac <= 1.0)) throw Error(ErrorKind::UsageError, "var_frac must lie in (0, 1]");
  const double n = static_cast<double>(x.rows());
  const double m = static_cast<double>(x.cols());
  FpcaScores out;
  out.mean = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - out.mean;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  out.eigenvalues = s.array().square() / ((n - 1) * m);
  const double total = s.squaredNorm();
  Eigen::Index k = 0;
  if (total > 0.0) {
    double cum = 0;
    while (k < s.size()) {
      cum += s(k) * s(k);
      ++k;
      if (cum / total >= var_frac * (1.0 - 1e-12)) break;
    }
  }
  out.components = k;
  out.eigenfunctions = std::sqrt(m) * svd.matrixV().leftCols(k);
  out.scores = centered * svd.matrixV().leftCols(k) / std::sqrt(m);
  return out;
}

inline Eigen::MatrixXd fpca_scores(const CurveMatrix& x, double var_frac) { return fpca(x, var_frac).scores; }

/// Distance covariance V-statistic on FPC scores with a permutation p-value.
inline BaselineResult fpca_dcov(const CurveMatrix& x, const CurveMatrix& y, double var_frac,
                                std::size_t permutations, std::uint64_t seed) {
  detail::require_pair(x, y, 2);
  FpcaScores fx = fpca(x, var_frac), fy = fpca(y, var_frac);
  Eigen::MatrixXd dx = detail::distance_matrix(fx.scores), dy = detail::distance_matrix(fy.scores);
  // Distance covariance is the HSIC of the (negated) distance kernels; the
  // signs cancel.
  PermutationReport rep = permutation_test(dx, dy, permutations, detail::method_seed(seed, Method::FpcaDcov));
  BaselineResult res{Method::FpcaDcov, rep.observed, rep.p_value, {}};
  res.detail["components_x"] = static_cast<double>(fx.components);
  res.detail["components_y"] = static_cast<double>(fy.components);
  return res;
}

}  // namespace funcdep
