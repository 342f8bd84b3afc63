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

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "cpmbig/link.hpp"
#include "oracles/oracles.hpp"

namespace {

using cpmbig::LinkFamily;
using cpmbig::link_eval;

constexpr LinkFamily kAll[] = {LinkFamily::logit, LinkFamily::probit, LinkFamily::loglog,
                               LinkFamily::cloglog};

TEST(Link, LogitAtZero) {
  const auto v = link_eval(LinkFamily::logit, 0.0);
  EXPECT_DOUBLE_EQ(v.cdf, 0.5);
  EXPECT_DOUBLE_EQ(v.pdf, 0.25);
  EXPECT_DOUBLE_EQ(v.pdf_deriv, 0.0);
}

TEST(Link, LoglogAtZero) {
  EXPECT_NEAR(link_eval(LinkFamily::loglog, 0.0).cdf, std::exp(-1.0), 1e-15);
  EXPECT_NEAR(link_eval(LinkFamily::loglog, 0.0).cdf, 0.367879, 1e-6);
}

TEST(Link, ProbitAgainstSeriesErf) {
  const double u = 1.959964;
  const double expected = 0.5 * (1.0 + oracle::erf_series(u / std::sqrt(2.0)));
  const auto v = link_eval(LinkFamily::probit, u);
  EXPECT_NEAR(v.cdf, expected, 1e-13);
  EXPECT_NEAR(v.cdf, 0.975, 1e-6);
  for (double x = -3.0; x <= 3.0; x += 0.25) {
    const double ref = 0.5 * (1.0 + oracle::erf_series(x / std::sqrt(2.0)));
    EXPECT_LE(std::abs(link_eval(LinkFamily::probit, x).cdf - ref), 1e-12 * ref) << x;
  }
}

TEST(Link, NonFiniteArgumentIsDomainError) {
  EXPECT_THROW(link_eval(LinkFamily::logit, std::numeric_limits<double>::infinity()),
               std::domain_error);
  EXPECT_THROW(link_eval(LinkFamily::probit, std::numeric_limits<double>::quiet_NaN()),
               std::domain_error);
}

TEST(Link, ParseNames) {
  EXPECT_EQ(cpmbig::parse_link("cloglog"), LinkFamily::cloglog);
  EXPECT_EQ(cpmbig::to_string(LinkFamily::loglog), "loglog");
  EXPECT_THROW(cpmbig::parse_link("gumbel"), std::invalid_argument);
}

// Central differences of the tail that is not close to 1 (the cdf below the
// median, the complementary cdf above it). Points where the density has
// underflowed are not representable and are skipped.
TEST(Link, DensityMatchesFiniteDifferenceOfCdf) {
  const double h = 1e-5;
  for (LinkFamily link : kAll) {
    for (double u = -10.0; u <= 10.0 + 1e-12; u += 0.05) {
      const auto v = link_eval(link, u);
      if (v.clamped || v.pdf < 1e-290) continue;
      const auto p = link_eval(link, u + h);
      const auto m = link_eval(link, u - h);
      const double fd = v.cdf < 0.5 ? (p.cdf - m.cdf) / (2 * h) : (m.ccdf - p.ccdf) / (2 * h);
      EXPECT_LT(std::abs(fd - v.pdf) / v.pdf, 1e-6) << to_string(link) << " u=" << u;
    }
  }
}

TEST(Link, DensityDerivativeMatchesFiniteDifference) {
  const double h = 1e-5;
  for (LinkFamily link : kAll) {
    for (double u = -10.0; u <= 10.0 + 1e-12; u += 0.05) {
      const auto v = link_eval(link, u);
      if (v.clamped || v.pdf < 1e-290) continue;
      const double fd = (link_eval(link, u + h).pdf - link_eval(link, u - h).pdf) / (2 * h);
      const double scale = std::max(std::abs(v.pdf_deriv), v.pdf);
      EXPECT_LT(std::abs(fd - v.pdf_deriv) / scale, 1e-6) << to_string(link) << " u=" << u;
    }
  }
}

TEST(Link, CdfStrictlyIncreasingAndOpen) {
  for (LinkFamily link : kAll) {
    double prev = -1.0;
    double prev_ccdf = 2.0;
    for (double u = -35.0; u <= 35.0; u += 0.01) {
      const auto v = link_eval(link, u);
      EXPECT_GT(v.cdf, 0.0);
      EXPECT_LT(v.cdf, 1.0);
      EXPECT_GT(v.pdf, 0.0);
      // One of the two tails always carries the increase, except where the
      // Gumbel tails underflow and the values are clamped.
      if (!v.clamped) {
        EXPECT_TRUE(v.cdf > prev || v.ccdf < prev_ccdf) << to_string(link) << " u=" << u;
      }
      EXPECT_GE(v.cdf, prev);
      prev = v.cdf;
      prev_ccdf = v.ccdf;
    }
  }
}

TEST(Link, TailsKeepRelativePrecision) {
  // Lower tail of logit at -35 and upper tail of probit at 8 must not be 0.
  EXPECT_NEAR(link_eval(LinkFamily::logit, -35.0).cdf / std::exp(-35.0), 1.0, 1e-12);
  EXPECT_NEAR(link_eval(LinkFamily::logit, 35.0).ccdf / std::exp(-35.0), 1.0, 1e-12);
  EXPECT_GT(link_eval(LinkFamily::probit, 8.0).ccdf, 6e-16);
  EXPECT_TRUE(link_eval(LinkFamily::loglog, -800.0).clamped);
  EXPECT_GT(link_eval(LinkFamily::loglog, -800.0).cdf, 0.0);
}

TEST(Link, QuantileInvertsCdf) {
  for (LinkFamily link : kAll) {
    for (double p : {1e-12, 1e-6, 0.01, 0.1, 0.3, 0.5, 0.77, 0.99, 1 - 1e-9}) {
      const double u = cpmbig::link_quantile(link, p);
      const auto v = link_eval(link, u);
      const double back = p < 0.5 ? v.cdf : 1.0 - v.ccdf;
      EXPECT_NEAR(back / p, 1.0, 1e-12) << to_string(link) << " p=" << p;
    }
  }
  EXPECT_THROW(cpmbig::link_quantile(LinkFamily::logit, 0.0), std::domain_error);
}

}  // namespace
