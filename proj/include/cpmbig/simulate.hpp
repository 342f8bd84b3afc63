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

// Simulated data from y = H(beta' x + e): half binary predictors, half
// normal, three transforms H and two residual laws.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpmbig/dataset.hpp"
#include "cpmbig/link.hpp"
#include "cpmbig/random.hpp"

namespace cpmbig {

enum class Transform { identity, exp, log_shift };
enum class Residual { logistic, gumbel };

inline std::string to_string(Transform t) {
  switch (t) {
    case Transform::identity: return "identity";
    case Transform::exp: return "exp";
    case Transform::log_shift: return "log-shift";
  }
  return "";
}
inline std::string to_string(Residual r) { return r == Residual::logistic ? "logistic" : "gumbel"; }

inline Transform parse_transform(const std::string& s) {
  if (s == "identity") return Transform::identity;
  if (s == "exp") return Transform::exp;
  if (s == "log-shift") return Transform::log_shift;
  throw std::invalid_argument("unknown transform '" + s + "' (identity, exp, log-shift)");
}
inline Residual parse_residual(const std::string& s) {
  if (s == "logistic") return Residual::logistic;
  if (s == "gumbel") return Residual::gumbel;
  throw std::invalid_argument("unknown residual '" + s + "' (logistic, gumbel)");
}

/// The link whose F is the residual law: logistic -> logit, Gumbel
/// exp(-e^{-u}) -> loglog.
inline LinkFamily matching_link(Residual r) {
  return r == Residual::logistic ? LinkFamily::logit : LinkFamily::loglog;
}

struct ScenarioSpec {
  std::size_t N = 10000;
  std::size_t p = 50;
  Transform transform = Transform::identity;
  Residual residual = Residual::logistic;
  Eigen::VectorXd beta;  // empty: default_beta(p)
  std::uint64_t seed = 1;
};

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return v;
}

/// Every other predictor (0, 2, 4, ...) gets a nonzero coefficient with
/// magnitudes evenly spaced in [0.1, 1] and alternating sign; the rest are 0.
inline Eigen::VectorXd default_beta(std::size_t p) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  const std::size_t active = (p + 1) / 2;
  const auto mags = linspace(0.1, 1.0, active);
  for (std::size_t i = 0; i < active; ++i) {
    beta(static_cast<Eigen::Index>(2 * i)) = (i % 2 == 0 ? -1.0 : 1.0) * (active == 1 ? 1.0 : mags[i]);
  }
  return beta;
}

struct Simulated {
  Dataset data;
  Eigen::VectorXd beta;
  Transform transform = Transform::identity;
  Residual residual = Residual::logistic;
  double shift = 0.0;  // y*_0, log-shift only
  std::size_t binary = 0;  // leading binary predictor count

  double H(double ystar) const {
    switch (transform) {
      case Transform::identity: return ystar;
      case Transform::exp: return std::exp(ystar);
      case Transform::log_shift: return std::log(ystar + shift);
    }
    return ystar;
  }
  /// True alpha(y) = H^{-1}(y).
  double alpha_truth(double y) const {
    switch (transform) {
      case Transform::identity: return y;
      case Transform::exp: return std::log(y);
      case Transform::log_shift: return std::exp(y) - shift;
    }
    return y;
  }
};

inline Simulated simulate_dataset(const ScenarioSpec& spec) {
  if (spec.N < 2) throw std::invalid_argument("simulate: N must be at least 2");
  const std::size_t p = spec.p;
  Simulated out;
  out.beta = spec.beta.size() == 0 ? default_beta(p) : spec.beta;
  if (static_cast<std::size_t>(out.beta.size()) != p) {
    throw std::invalid_argument("simulate: beta has length " + std::to_string(out.beta.size()) +
                                ", expected p=" + std::to_string(p));
  }
  out.transform = spec.transform;
  out.residual = spec.residual;
  out.binary = p / 2;
  const auto probs = linspace(0.05, 0.5, out.binary);
  const auto means = linspace(0.0, 2.4, p - out.binary);

  Rng xr = make_stream(spec.seed, Stream::simulate_predictors);
  Rng er = make_stream(spec.seed, Stream::simulate_residuals);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset& d = out.data;
  d.X.resize(static_cast<Eigen::Index>(spec.N), static_cast<Eigen::Index>(p));
  d.y.resize(spec.N);
  for (std::size_t j = 0; j < p; ++j) d.names.push_back("x" + std::to_string(j + 1));
  std::vector<double> ystar(spec.N);
  const LinkFamily link = matching_link(spec.residual);
  for (std::size_t i = 0; i < spec.N; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < p; ++j) {
      const auto col = static_cast<Eigen::Index>(j);
      d.X(row, col) = j < out.binary ? (u(xr) < probs[j] ? 1.0 : 0.0) : means[j - out.binary] + z(xr);
    }
    ystar[i] = d.X.row(row).dot(out.beta) + sample_residual(link, er);
  }
  if (spec.transform == Transform::log_shift) {
    out.shift = std::ceil(-*std::min_element(ystar.begin(), ystar.end())) + 1.0;
  }
  for (std::size_t i = 0; i < spec.N; ++i) d.y[i] = out.H(ystar[i]);
  return out;
}

struct ConditionalTruth {
  double mean = 0.0;
  double median = 0.0;
  std::size_t invalid_draws = 0;  // log-shift draws with y* + y*_0 <= 0
};

/// Monte Carlo mean and median of H(beta' x0 + e) using n_mc residual
/// draws from their own stream.
inline ConditionalTruth true_conditional(const Simulated& sim, const Eigen::VectorXd& x0,
                                         std::size_t n_mc = 10000, std::uint64_t seed = 1) {
  if (n_mc < 1000) throw std::invalid_argument("true_conditional: n_mc must be >= 1000");
  if (x0.size() != sim.beta.size()) throw std::invalid_argument("true_conditional: x0 length mismatch");
  Rng rng = make_stream(seed, Stream::monte_carlo);
  const double eta = sim.beta.dot(x0);
  const LinkFamily link = matching_link(sim.residual);
  std::vector<double> draws(n_mc);
  ConditionalTruth t;
  for (auto& v : draws) {
    const double ystar = eta + sample_residual(link, rng);
    if (sim.transform == Transform::log_shift && ystar + sim.shift <= 0.0) {
      v = -std::numeric_limits<double>::infinity();
      ++t.invalid_draws;
    } else {
      v = sim.H(ystar);
    }
  }
  double sum = 0.0;
  for (double v : draws) sum += v;
  t.mean = sum / static_cast<double>(n_mc);
  std::sort(draws.begin(), draws.end());
  t.median = n_mc % 2 == 1 ? draws[n_mc / 2] : 0.5 * (draws[n_mc / 2 - 1] + draws[n_mc / 2]);
  return t;
}

}  // namespace cpmbig
