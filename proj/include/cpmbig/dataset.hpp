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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpmbig/errors.hpp"

namespace cpmbig {

/// Outcome vector plus a dense N x p predictor matrix.
struct Dataset {
  std::vector<double> y;
  Eigen::MatrixXd X;
  std::vector<std::string> names;  // optional predictor names, size p when set

  std::size_t size() const { return y.size(); }
  std::size_t predictors() const { return static_cast<std::size_t>(X.cols()); }

  std::string predictor_name(std::size_t j) const {
    return j < names.size() ? names[j] : "x" + std::to_string(j + 1);
  }
};

/// Throws InvalidDataError unless shapes agree and every entry is finite.
inline void validate(const Dataset& data) {
  if (static_cast<Eigen::Index>(data.y.size()) != data.X.rows()) {
    throw InvalidDataError("outcome length " + std::to_string(data.y.size()) +
                           " does not match predictor rows " + std::to_string(data.X.rows()));
  }
  if (data.y.size() < 2) throw InvalidDataError("need at least 2 observations");
  for (std::size_t i = 0; i < data.y.size(); ++i) {
    if (!std::isfinite(data.y[i]))
      throw InvalidDataError("non-finite outcome at row " + std::to_string(i));
  }
  if (!data.X.allFinite()) throw InvalidDataError("non-finite predictor value");
}

/// Rows of `data` selected by `rows`, in that order.
inline Dataset subset(const Dataset& data, std::span<const std::size_t> rows) {
  Dataset out;
  out.names = data.names;
  out.y.reserve(rows.size());
  out.X.resize(static_cast<Eigen::Index>(rows.size()), data.X.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.y.push_back(data.y[rows[r]]);
    out.X.row(static_cast<Eigen::Index>(r)) = data.X.row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

/// Ordinal view of an outcome: the sorted distinct values and, for every
/// observation, the 0-based position of its value in that list. Ties are
/// exact floating-point equality.
struct OutcomeIndex {
  std::vector<double> distinct;
  std::vector<int> rank;

  std::size_t categories() const { return distinct.size(); }

  /// Observations per category.
  std::vector<std::size_t> counts() const {
    std::vector<std::size_t> n(distinct.size(), 0);
    for (int r : rank) ++n[static_cast<std::size_t>(r)];
    return n;
  }
};

inline OutcomeIndex index_outcomes(std::span<const double> y) {
  if (y.size() < 2) throw InvalidDataError("need at least 2 outcome values");
  OutcomeIndex idx;
  idx.distinct.assign(y.begin(), y.end());
  std::sort(idx.distinct.begin(), idx.distinct.end());
  idx.distinct.erase(std::unique(idx.distinct.begin(), idx.distinct.end()), idx.distinct.end());
  if (idx.distinct.size() < 2) {
    throw DegenerateOutcomeError("outcome has a single distinct value; nothing to order");
  }
  idx.rank.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    auto it = std::lower_bound(idx.distinct.begin(), idx.distinct.end(), y[i]);
    idx.rank[i] = static_cast<int>(it - idx.distinct.begin());
  }
  return idx;
}

inline std::size_t count_distinct(std::span<const double> y) {
  std::vector<double> v(y.begin(), y.end());
  std::sort(v.begin(), v.end());
  return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

}  // namespace cpmbig
