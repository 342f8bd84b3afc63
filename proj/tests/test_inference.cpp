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

#include "cpmbig/divide_combine.hpp"
#include "cpmbig/fit.hpp"
#include "cpmbig/inference.hpp"
#include "cpmbig/simulate.hpp"

namespace {

using namespace cpmbig;

ConditionalDistribution from_cdf(std::vector<double> grid, std::vector<double> cdf) {
  ConditionalDistribution d;
  d.grid = std::move(grid);
  d.cdf = std::move(cdf);
  double prev = 0.0;
  for (double c : d.cdf) {
    d.pmf.push_back(c - prev);
    prev = c;
  }
  return d;
}

TEST(ConditionalMedian, StraddlePairIsAveraged) {
  EXPECT_DOUBLE_EQ(conditional_median(from_cdf({1, 2, 3}, {0.2, 0.6, 1.0})), 1.5);
}

TEST(ConditionalMedian, ExactHalfReturnsThatValue) {
  EXPECT_DOUBLE_EQ(conditional_median(from_cdf({1, 2, 3}, {0.5, 0.9, 1.0})), 1.0);
  EXPECT_DOUBLE_EQ(conditional_median(from_cdf({1, 2, 3}, {0.1, 0.5, 1.0})), 2.0);
}

TEST(ConditionalMedian, Ends) {
  EXPECT_DOUBLE_EQ(conditional_median(from_cdf({4, 5, 6}, {0.7, 0.9, 1.0})), 4.0);
  EXPECT_DOUBLE_EQ(conditional_median(from_cdf({4, 5, 6}, {0.1, 0.2, 1.0})), 5.5);
}

TEST(ConditionalMean, SimpleDistributions) {
  EXPECT_DOUBLE_EQ(conditional_mean(from_cdf({7.5}, {1.0})), 7.5);
  EXPECT_DOUBLE_EQ(conditional_mean(from_cdf({1, 2, 3}, {1.0 / 3, 2.0 / 3, 1.0})), 2.0);
}

TEST(ConditionalDistribution, NoCovariateFitIsEmpiricalCdf) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> z(0.0, 2.0);
  Dataset d;
  for (int i = 0; i < 200; ++i) d.y.push_back(std::round(z(gen) * 10) / 10);
  d.X.resize(200, 0);
  const CpmFit fit = fit_cpm(d, LinkFamily::probit);
  const auto dist = conditional_distribution(fit, Eigen::VectorXd(0));
  std::vector<double> sorted = d.y;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t j = 0; j < dist.grid.size(); ++j) {
    const auto below = std::upper_bound(sorted.begin(), sorted.end(), dist.grid[j]) - sorted.begin();
    EXPECT_NEAR(dist.cdf[j], static_cast<double>(below) / 200.0, 1e-10);
  }
  const double mean = std::accumulate(d.y.begin(), d.y.end(), 0.0) / 200.0;
  EXPECT_NEAR(conditional_mean(dist), mean, 1e-12);
}

TEST(ConditionalDistribution, PmfSumsToOneAndCdfEndsAtOne) {
  ScenarioSpec spec;
  spec.N = 400;
  spec.p = 4;
  const Simulated sim = simulate_dataset(spec);
  const CpmFit fit = fit_cpm(sim.data, LinkFamily::logit);
  std::mt19937_64 gen(1);
  std::normal_distribution<double> z(0.0, 3.0);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd x0(4);
    for (int k = 0; k < 4; ++k) x0(k) = z(gen);
    const auto dist = conditional_distribution(fit, x0);
    double total = 0.0;
    for (double q : dist.pmf) {
      EXPECT_GE(q, 0.0);
      total += q;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_EQ(dist.cdf.back(), 1.0);
  }
  EXPECT_THROW(conditional_distribution(fit, Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

// Independent truth: empirical cdf of 1e5 draws of beta'x0 + logistic noise.
TEST(ConditionalDistribution, CloseToTrueCdf) {
  ScenarioSpec spec;
  spec.N = 500;
  spec.p = 4;
  spec.seed = 12;
  const Simulated sim = simulate_dataset(spec);
  const CpmFit fit = fit_cpm(sim.data, LinkFamily::logit);
  // A typical covariate row: the sample means.
  const Eigen::VectorXd x0 = sim.data.X.colwise().mean().transpose();
  const auto dist = conditional_distribution(fit, x0);
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> draws(100000);
  const double eta = sim.beta.dot(x0);
  for (auto& v : draws) {
    double w;
    do w = u(gen);
    while (w <= 0.0);
    v = eta + std::log(w / (1.0 - w));
  }
  std::sort(draws.begin(), draws.end());
  double sup = 0.0;
  for (std::size_t j = 0; j < dist.grid.size(); ++j) {
    const double emp =
        static_cast<double>(std::upper_bound(draws.begin(), draws.end(), dist.grid[j]) - draws.begin()) /
        1e5;
    sup = std::max(sup, std::abs(emp - dist.cdf[j]));
  }
  EXPECT_LT(sup, 0.08);
}

TEST(ConditionalMedian, NondecreasingAlongPositiveCoefficient) {
  ScenarioSpec spec;
  spec.N = 600;
  spec.p = 4;
  spec.seed = 4;
  const Simulated sim = simulate_dataset(spec);
  const CpmFit fit = fit_cpm(sim.data, LinkFamily::logit);
  Eigen::Index k = 0;
  fit.beta.maxCoeff(&k);
  ASSERT_GT(fit.beta(k), 0.0);
  Eigen::VectorXd x0 = Eigen::VectorXd::Constant(4, 0.5);
  double prev = -std::numeric_limits<double>::infinity();
  for (double v = -3.0; v <= 3.0; v += 0.1) {
    x0(k) = v;
    const double med = conditional_median(conditional_distribution(fit, x0));
    EXPECT_GE(med, prev);
    prev = med;
  }
}

TEST(ConditionalDistribution, AcceptsCombinedFits) {
  ScenarioSpec spec;
  spec.N = 800;
  spec.p = 2;
  const Simulated sim = simulate_dataset(spec);
  DivideCombineOptions opts;
  opts.K = 4;
  const CombinedFit c = fit_divide_combine(sim.data, LinkFamily::logit, opts);
  const auto dist = conditional_distribution(c, Eigen::VectorXd::Zero(2));
  EXPECT_EQ(dist.grid.size(), c.distinct.size());
  for (std::size_t j = 1; j < dist.cdf.size(); ++j) EXPECT_GE(dist.cdf[j], dist.cdf[j - 1]);
}

}  // namespace
