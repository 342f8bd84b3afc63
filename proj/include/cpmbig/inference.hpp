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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpmbig/link.hpp"

namespace cpmbig {

/// Fitted distribution of Y given x0 on the fit's outcome grid.
struct ConditionalDistribution {
  std::vector<double> grid;
  std::vector<double> cdf;
  std::vector<double> pmf;
};

/// Works for any fit exposing alpha, beta, distinct and link (whole-data,
/// combined, binned or rounded).
template <class Fit>
ConditionalDistribution conditional_distribution(const Fit& fit, const Eigen::VectorXd& x0) {
  if (x0.size() != fit.beta.size()) {
    throw std::invalid_argument("covariate vector has length " + std::to_string(x0.size()) +
                                ", model has " + std::to_string(fit.beta.size()) + " predictors");
  }
  const std::size_t m = fit.distinct.size();
  if (static_cast<std::size_t>(fit.alpha.size()) + 1 != m) {
    throw std::invalid_argument("fit alpha does not match its outcome grid");
  }
  const double eta = fit.beta.dot(x0);
  ConditionalDistribution d;
  d.grid = fit.distinct;
  d.cdf.resize(m);
  d.pmf.resize(m);
  double prev = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double u = j + 1 < m ? fit.alpha(static_cast<Eigen::Index>(j)) - eta : 0.0;
    double c = j + 1 < m ? link_eval(fit.link, u).cdf : 1.0;
    if (c < prev) c = prev;  // end-repaired alphas can tie
    d.cdf[j] = c;
    d.pmf[j] = c - prev;
    prev = c;
  }
  return d;
}

inline double conditional_mean(const ConditionalDistribution& d) {
  double s = 0.0;
  for (std::size_t j = 0; j < d.grid.size(); ++j) s += d.pmf[j] * d.grid[j];
  return s;
}

/// Average of the adjacent grid values whose cdf straddles 0.5. A cdf value
/// of exactly 0.5 returns that grid value; a first cdf above 0.5 returns the
/// smallest value.
inline double conditional_median(const ConditionalDistribution& d) {
  const std::size_t m = d.grid.size();
  if (m == 0) throw std::invalid_argument("empty distribution");
  if (d.cdf[0] > 0.5) return d.grid[0];
  for (std::size_t j = 0; j < m; ++j) {
    if (d.cdf[j] == 0.5) return d.grid[j];
    if (j + 1 < m && d.cdf[j] < 0.5 && d.cdf[j + 1] > 0.5) {
      return 0.5 * (d.grid[j] + d.grid[j + 1]);
    }
  }
  return d.grid[m - 1];
}

}  // namespace cpmbig
