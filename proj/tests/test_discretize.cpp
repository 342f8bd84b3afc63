// Copyright 2026 The cpmbig Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "cpmbig/discretize.hpp"
#include "cpmbig/fit.hpp"
#include "cpmbig/random.hpp"
#include "oracles/oracles.hpp"

namespace {

using namespace cpmbig;

RoundingScheme decimal(int s, double t = 1.0) {
  return {RoundingMode::decimal, s, static_cast<int>(std::lround(t * 10)), 0};
}
RoundingScheme sigdigit(int s, double t = 1.0) {
  return {RoundingMode::sigdigit, s, static_cast<int>(std::lround(t * 10)), 0};
}

TEST(Binning, SizesFollowQuotientAndRemainder) {
  std::mt19937_64 gen(2);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + gen() % 500;
    const std::size_t mb = 2 + gen() % (n - 1);
    std::vector<double> y(n);
    for (auto& v : y) v = std::ldexp(static_cast<double>(gen() >> 11), -53);
    Rng rng(rep);
    const auto res = bin_equal_quantile(y, mb, rng);
    const std::size_t q = n / mb, r = n % mb;
    std::size_t big = 0;
    ASSERT_EQ(res.bin_edges.size(), mb + 1);
    EXPECT_EQ(res.bin_edges.back(), n);
    for (std::size_t b = 0; b < mb; ++b) {
      const std::size_t len = res.bin_size(b);
      ASSERT_TRUE(len == q || len == q + 1);
      big += len == q + 1 ? 1 : 0;
    }
    EXPECT_EQ(big, r);
  }
}

TEST(Binning, FifteenIntoFour) {
  std::vector<double> y(15);
  std::iota(y.begin(), y.end(), 1.0);
  Rng rng(6);
  const auto res = bin_equal_quantile(y, 4, rng);
  std::vector<std::size_t> sizes;
  for (std::size_t b = 0; b < 4; ++b) sizes.push_back(res.bin_size(b));
  std::sort(sizes.begin(), sizes.end());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{3, 4, 4, 4}));
  EXPECT_EQ(res.achieved, 4u);
}

TEST(Binning, OneBinPerObservationIsIdentity) {
  std::vector<double> y = {3.5, -1.0, 8.25, 0.0, 2.0};
  Rng rng(1);
  EXPECT_EQ(bin_equal_quantile(y, 5, rng).y_b, y);
}

TEST(Binning, BinTakesItsMedian) {
  const std::vector<double> y = {130.3, 50.3, 310.7, 79.7, 203.8};
  Rng rng(1);
  // Two bins of sizes {2,3} in seed order; check against the sorted values.
  const auto res = bin_equal_quantile(y, 2, rng);
  const bool small_first = res.bin_size(0) == 2;
  const double lo = small_first ? 0.5 * (50.3 + 79.7) : 79.7;
  const double hi = small_first ? 203.8 : 0.5 * (203.8 + 310.7);
  EXPECT_DOUBLE_EQ(res.y_b[1], lo);
  EXPECT_DOUBLE_EQ(res.y_b[2], hi);

  std::vector<double> five = {50.3, 79.7, 130.3, 203.8, 310.7};
  five.insert(five.begin(), {1.0, 2.0, 3.0, 4.0, 5.0});
  Rng rng2(3);
  const auto two = bin_equal_quantile(five, 2, rng2);
  for (std::size_t i = 5; i < 10; ++i) EXPECT_EQ(two.y_b[i], 130.3);
}

TEST(Binning, MonotoneAndDeterministic) {
  std::mt19937_64 gen(9);
  std::exponential_distribution<double> e(1.0);
  std::vector<double> y(400);
  for (auto& v : y) v = std::round(e(gen) * 20) / 4;  // heavy ties
  Rng a = make_stream(4, Stream::binning), b = make_stream(4, Stream::binning);
  const auto ra = bin_equal_quantile(y, 37, a);
  EXPECT_EQ(ra.y_b, bin_equal_quantile(y, 37, b).y_b);
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j)
      if (y[i] < y[j]) {
        ASSERT_LE(ra.y_b[i], ra.y_b[j]);
      }
}

TEST(Binning, RejectsBadCount) {
  std::vector<double> y = {1, 2, 3};
  Rng rng(1);
  EXPECT_THROW(bin_equal_quantile(y, 1, rng), std::invalid_argument);
  EXPECT_THROW(bin_equal_quantile(y, 4, rng), std::invalid_argument);
}

TEST(Rounding, WorkedValues) {
  EXPECT_EQ(round_value(12.34, decimal(1)), 12.3);
  EXPECT_EQ(round_value(12.34, decimal(0)), 12.0);
  EXPECT_EQ(round_value(12.34, decimal(-1)), 10.0);
  EXPECT_EQ(round_value(12.34, sigdigit(2)), 12.0);
  EXPECT_EQ(round_value(12.34, decimal(0, 2.0)), 12.5);
  EXPECT_EQ(round_value(12.34, decimal(0, 10.0)), 12.3);
  EXPECT_EQ(round_value(12.34, decimal(0, 3.0)), 37.0 / 3.0);
}

TEST(Rounding, HalvesGoAwayFromZero) {
  EXPECT_EQ(round_value(2.5, decimal(0)), 3.0);
  EXPECT_EQ(round_value(-2.5, decimal(0)), -3.0);
  EXPECT_EQ(round_value(2.675, decimal(2)), 2.68);  // stored just below the half
  EXPECT_EQ(round_value(0.125, decimal(2)), 0.13);
  EXPECT_EQ(round_value(1.005, decimal(2)), 1.01);
  EXPECT_EQ(round_value(0.0, decimal(3)), 0.0);
}

TEST(Rounding, SignificantDigits) {
  EXPECT_EQ(round_value(0.0034567, sigdigit(3)), 0.00346);
  EXPECT_EQ(round_value(3397.08, sigdigit(3)), 3400.0);
  EXPECT_EQ(round_value(1000.0, sigdigit(1)), 1000.0);
  EXPECT_EQ(round_value(999.6, sigdigit(3)), 1000.0);
  EXPECT_EQ(round_value(0.001, sigdigit(2)), 0.001);
  EXPECT_EQ(round_value(0.0, sigdigit(2)), 0.0);
  EXPECT_EQ(round_value(-12.34, sigdigit(2)), -12.0);
  EXPECT_EQ(round_value(13.25, sigdigit(3, 5.2)), std::round(13.25 * 5.2 * 10) / 52);
}

TEST(Rounding, MatchesExactIntegerArithmetic) {
  std::mt19937_64 gen(13);
  for (int rep = 0; rep < 20000; ++rep) {
    const int d = static_cast<int>(gen() % 4);
    const long long k = static_cast<long long>(gen() % 2000001) - 1000000;
    const int s = static_cast<int>(gen() % 6) - 2;
    const int tenths = 10 + static_cast<int>(gen() % 91);
    const double a = static_cast<double>(k) / std::pow(10.0, d);
    const double want = oracle::exact_decimal_round(k, d, s, tenths);
    ASSERT_EQ(round_value(a, {RoundingMode::decimal, s, tenths, 0}), want)
        << "a=" << a << " s=" << s << " t=" << tenths / 10.0;
  }
}

TEST(Rounding, RefinementEndpointsAndIdempotence) {
  std::mt19937_64 gen(21);
  std::lognormal_distribution<double> ln(0.0, 3.0);
  for (int rep = 0; rep < 10000; ++rep) {
    const double a = (gen() % 2 ? 1 : -1) * ln(gen);
    const int s = static_cast<int>(gen() % 9) - 4;
    ASSERT_EQ(round_value(a, decimal(s, 1.0)), round_value(a, decimal(s)));
    ASSERT_EQ(round_value(a, decimal(s, 10.0)), round_value(a, decimal(s + 1)));
    const int sd = 1 + static_cast<int>(gen() % 5);
    ASSERT_EQ(round_value(a, sigdigit(sd, 10.0)), round_value(a, sigdigit(sd + 1)));
    const auto sc = decimal(s, 1.0 + static_cast<double>(gen() % 91) / 10);
    const double once = round_value(a, sc);
    ASSERT_EQ(round_value(once, sc), once);
  }
}

TEST(Rounding, MonotoneInValue) {
  std::vector<double> y;
  for (int i = -3000; i <= 3000; ++i) y.push_back(i * 0.0137);
  for (const auto& sc : {decimal(1, 4.3), decimal(-1, 2.7), sigdigit(2, 6.6)}) {
    const auto r = round_all(y, sc);
    for (std::size_t i = 1; i < y.size(); ++i) ASSERT_LE(r[i - 1], r[i]);
  }
}

TEST(ChooseRounding, UniformTargetWithinOnePercent) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> y(1000);
  for (auto& v : y) v = u(gen);
  for (auto mode : {RoundingMode::decimal, RoundingMode::sigdigit}) {
    const auto c = choose_rounding(y, 100, mode);
    EXPECT_LE(std::abs(static_cast<double>(c.scheme.achieved) - 100.0), 1.0) << to_string(mode);
    EXPECT_EQ(count_distinct(c.y_r), c.scheme.achieved);
    EXPECT_FALSE(c.off_target);
  }
}

TEST(ChooseRounding, ExactBracketKeepsUnitRefinement) {
  std::vector<double> y;
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 3; ++j) y.push_back(i + 0.1 * j + 0.01);
  // Integers give 50 distinct values; one decimal gives 150.
  const auto c = choose_rounding(y, 50, RoundingMode::decimal);
  EXPECT_EQ(c.scheme.s, 0);
  EXPECT_EQ(c.scheme.tenths, 10);
  EXPECT_EQ(c.scheme.achieved, 50u);
}

// Grids 1/t for different t are not nested, so the count is only nearly
// monotone in t: {0.45, 0.55} gives 2 values at t = 1 and 1 value at t = 1.5.
// On dense data the dips are a handful of sparse tail values.
TEST(ChooseRounding, DistinctCountNearlyGrowsWithRefinement) {
  const std::vector<double> pair = {0.45, 0.55};
  EXPECT_EQ(count_distinct(round_all(pair, decimal(0, 1.0))), 2u);
  EXPECT_EQ(count_distinct(round_all(pair, decimal(0, 1.5))), 1u);

  std::mt19937_64 gen(5);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> y(5000);
  for (auto& v : y) v = 3.0 * z(gen);
  std::size_t running_max = 0;
  for (int tenths = 10; tenths <= 100; ++tenths) {
    const std::size_t m = count_distinct(round_all(y, {RoundingMode::decimal, 0, tenths, 0}));
    EXPECT_GE(static_cast<double>(m), 0.98 * static_cast<double>(running_max)) << tenths;
    running_max = std::max(running_max, m);
  }
  EXPECT_GT(running_max, 150u);
}

TEST(ChooseRounding, RejectsUnreachableTargets) {
  const std::vector<double> y = {1.0, 2.0, 3.0};
  EXPECT_THROW(choose_rounding(y, 3, RoundingMode::decimal), std::invalid_argument);
  EXPECT_THROW(choose_rounding(y, 1, RoundingMode::decimal), std::invalid_argument);
}

TEST(RoundingReport, RegionsAndTotal) {
  const std::vector<double> y = {12.3, 45.6, 45.6, 150.2, 151.0, 2500.7, 3100.1};
  const auto same = rounding_report(y, y, std::vector<double>{100, 1000});
  ASSERT_EQ(same.size(), 4u);
  EXPECT_EQ(same[0].observations, 3u);
  EXPECT_EQ(same[0].distinct_before, 2u);
  EXPECT_EQ(same[1].observations, 2u);
  EXPECT_EQ(same[2].observations, 2u);
  for (const auto& r : same) EXPECT_EQ(r.distinct_before, r.distinct_after);
  EXPECT_EQ(same[3].observations, 7u);
  EXPECT_EQ(same[3].distinct_before, 6u);

  const auto r = round_all(y, sigdigit(1));
  const auto rep = rounding_report(y, r, std::vector<double>{100, 1000, 2000, 2100});
  EXPECT_EQ(rep[1].distinct_after, 1u);  // 150.2 and 151.0 both become 200
  EXPECT_EQ(rep[3].observations, 0u);
  EXPECT_EQ(rep[3].distinct_before, 0u);
}

TEST(BinningFit, FullResolutionReproducesWholeDataFit) {
  const auto prob = oracle::random_problem(300, 300, 3, 44);
  Dataset d;
  d.y = prob.y;
  d.X = prob.X;
  Rng rng(1);
  Dataset binned = d;
  binned.y = bin_equal_quantile(d.y, d.y.size(), rng).y_b;
  const auto a = fit_cpm(d, LinkFamily::logit);
  const auto b = fit_cpm(binned, LinkFamily::logit);
  EXPECT_LT((a.beta - b.beta).cwiseAbs().maxCoeff(), 1e-9);
}

}  // namespace
