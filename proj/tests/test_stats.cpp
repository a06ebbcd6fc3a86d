#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ductwork/stats.hpp"

using namespace ductwork;
using Catch::Matchers::WithinAbs;

TEST_CASE("constant samples give a zero-width interval at the value") {
  const auto ci = bootstrap_ci("rate", {5.0, 5.0, 5.0, 5.0});
  CHECK(ci.mean == 5.0);
  CHECK(ci.lower == 5.0);
  CHECK(ci.upper == 5.0);
  CHECK(ci.sample_count == 4);
  CHECK(ci.resample_count == 1000);
}

TEST_CASE("a single sample collapses to itself") {
  const auto ci = bootstrap_ci("x", {7.0});
  CHECK(ci.mean == 7.0);
  CHECK(ci.lower == 7.0);
  CHECK(ci.upper == 7.0);
}

TEST_CASE("empty input is rejected") {
  CHECK_THROWS_AS(bootstrap_ci("x", {}), std::invalid_argument);
}

TEST_CASE("interval brackets the mean of 1..100") {
  std::vector<double> samples(100);
  std::iota(samples.begin(), samples.end(), 1.0);
  const auto ci = bootstrap_ci("x", samples, 2000, 0.95, 1);
  CHECK_THAT(ci.mean, WithinAbs(50.5, 1e-12));
  CHECK(ci.lower < 50.5);
  CHECK(ci.upper > 50.5);
  CHECK(ci.lower < ci.upper);

  // Compare against the normal-approximation interval for the mean.
  double var = 0.0;
  for (double x : samples) var += (x - 50.5) * (x - 50.5);
  var /= samples.size() - 1;
  const double half = 1.96 * std::sqrt(var / samples.size());
  const double boot_width = ci.upper - ci.lower;
  CHECK_THAT(boot_width, WithinAbs(2 * half, 0.15 * 2 * half));
}

TEST_CASE("result is invariant under sample permutation") {
  std::vector<double> samples{3.0, 1.0, 4.0, 1.5, 9.0, 2.6, 5.3};
  const auto a = bootstrap_ci("x", samples, 500, 0.95, 7);
  std::mt19937_64 rng(11);
  std::shuffle(samples.begin(), samples.end(), rng);
  const auto b = bootstrap_ci("x", samples, 500, 0.95, 7);
  CHECK(a.mean == b.mean);
  CHECK(a.lower == b.lower);
  CHECK(a.upper == b.upper);
}

TEST_CASE("narrower confidence level gives a narrower interval") {
  std::vector<double> samples(50);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> dist(10.0, 2.0);
  for (auto& x : samples) x = dist(rng);
  const auto wide = bootstrap_ci("x", samples, 2000, 0.99, 5);
  const auto narrow = bootstrap_ci("x", samples, 2000, 0.80, 5);
  CHECK(narrow.upper - narrow.lower < wide.upper - wide.lower);
}
