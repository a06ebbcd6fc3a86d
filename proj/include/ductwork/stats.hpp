#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ductwork {

struct CiSummary {
  std::string metric;
  double mean{};
  double lower{};
  double upper{};
  std::size_t sample_count{};
  std::size_t resample_count{};
};

namespace detail {

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty set");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace detail

// Percentile bootstrap of the mean. Resampling indexes positions of a
// sorted copy of the samples, so the result is invariant under sample
// permutation given the same seed.
inline CiSummary bootstrap_ci(const std::string& metric,
                              std::vector<double> samples,
                              std::size_t resamples = 1000, double level = 0.95,
                              std::uint64_t seed = 0) {
  if (samples.empty())
    throw std::invalid_argument("bootstrap_ci requires at least one sample");
  std::sort(samples.begin(), samples.end());
  const double mean =
      std::accumulate(samples.begin(), samples.end(), 0.0) /
      static_cast<double>(samples.size());

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
  std::vector<double> means;
  means.reserve(resamples);
  for (std::size_t r = 0; r < resamples; ++r) {
    double sum = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) sum += samples[pick(rng)];
    means.push_back(sum / static_cast<double>(samples.size()));
  }
  std::sort(means.begin(), means.end());

  const double alpha = 1.0 - level;
  CiSummary ci;
  ci.metric = metric;
  ci.mean = mean;
  ci.lower = detail::quantile_sorted(means, alpha / 2.0);
  ci.upper = detail::quantile_sorted(means, 1.0 - alpha / 2.0);
  ci.sample_count = samples.size();
  ci.resample_count = resamples;
  return ci;
}

}  // namespace ductwork
