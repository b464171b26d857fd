#pragma once

// All-pairs dependence testing across channels and discovery-rate edge masks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "funcdep/errors.hpp"
#include "funcdep/parallel.hpp"
#include "funcdep/pipeline.hpp"
#include "funcdep/random.hpp"

namespace funcdep {

struct PairResult {
  std::size_t a = 0, b = 0;
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Canonical pair order (0,1), (0,2), ..., (P-2,P-1).
inline std::vector<std::pair<std::size_t, std::size_t>> channel_pairs(std::size_t channels) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t a = 0; a < channels; ++a)
    for (std::size_t b = a + 1; b < channels; ++b) out.emplace_back(a, b);
  return out;
}

/// Selects floor(rate * P) pairs with the smallest p-values; equal p-values
/// are ordered by larger |statistic|, then by pair index.
inline std::vector<bool> discovery_mask(const std::vector<PairResult>& pairs, double rate) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw Error(ErrorKind::UsageError, "discovery rate must lie in [0, 1]");
  const std::size_t keep =
      static_cast<std::size_t>(std::floor(rate * static_cast<double>(pairs.size()) + 1e-9));
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    if (pairs[i].p_value != pairs[j].p_value) return pairs[i].p_value < pairs[j].p_value;
    return std::abs(pairs[i].statistic) > std::abs(pairs[j].statistic);
  });
  std::vector<bool> mask(pairs.size(), false);
  for (std::size_t r = 0; r < std::min(keep, order.size()); ++r) mask[order[r]] = true;
  return mask;
}

/// Per-channel fits are shared; pair (a, b) uses the stream keyed by (seed, a, b).
inline std::vector<PairResult> pairwise_tests(const std::vector<FamilyFit>& fits,
                                              const std::vector<CurveMatrix>& denoised, Method method,
                                              const PipelineOptions& opt, std::uint64_t seed, unsigned threads) {
  const auto pairs = channel_pairs(fits.size());
  std::vector<PairResult> out(pairs.size());
  PipelineOptions inner = opt;
  inner.threads = 1;
  std::vector<GramMatrix> grams;
  if (method == Method::WavHsic)
    for (const auto& f : fits) grams.push_back(gram_matrix(f.coeffs, f.beta));
  parallel_for(pairs.size(), threads, [&](std::size_t k) {
    const auto [a, b] = pairs[k];
    const std::uint64_t pair_seed = derive_key(seed, StreamId::Pair, {a, b});
    PairResult r{a, b, 0.0, 1.0};
    if (method == Method::WavHsic) {
      auto rep = permutation_test(grams[a], grams[b], inner.permutations, pair_seed, inner.tie_rule, 1);
      r.statistic = rep.observed;
      r.p_value = rep.p_value;
    } else {
      auto res = run_baseline(method, denoised[a], denoised[b], inner, pair_seed);
      r.statistic = res.statistic;
      r.p_value = res.p_value;
    }
    out[k] = r;
  });
  return out;
}

}  // namespace funcdep
