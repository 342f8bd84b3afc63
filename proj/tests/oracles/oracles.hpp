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

// Reference computations used only by tests. None of these call into the
// library's numerical code; they exist to check it from the outside.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// erf by its Maclaurin series in long double. Good to ~1e-16 for |x| < 3.
inline double erf_series(double x) {
  const long double z = x;
  long double term = z;  // z^(2n+1) (-1)^n / n!
  long double sum = z;
  for (int n = 1; n < 200; ++n) {
    term *= -z * z / n;
    const long double add = term / (2 * n + 1);
    sum += add;
    if (std::fabs(static_cast<double>(add)) < 1e-22) break;
  }
  return static_cast<double>(2.0L / std::sqrt(3.14159265358979323846264338327950288L) * sum);
}

/// Plain textbook CDFs (no tail care). Index: 0 logit, 1 probit, 2 loglog,
/// 3 cloglog.
inline double naive_cdf(int family, double u) {
  switch (family) {
    case 0: return 1.0 / (1.0 + std::exp(-u));
    case 1: return 0.5 * (1.0 + std::erf(u / std::sqrt(2.0)));
    case 2: return std::exp(-std::exp(-u));
    default: return -std::expm1(-std::exp(u));
  }
}

/// 1 - naive_cdf computed without cancellation.
inline double naive_ccdf(int family, double u) {
  switch (family) {
    case 0: return 1.0 / (1.0 + std::exp(u));
    case 1: return 0.5 * std::erfc(u / std::sqrt(2.0));
    case 2: return -std::expm1(-std::exp(-u));
    default: return std::exp(-std::exp(u));
  }
}

/// Multinomial log-likelihood summed category by category from cumulative
/// probabilities. `rank` is the 0-based category of each row.
inline double naive_loglik(int family, const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                           const Eigen::MatrixXd& X, const std::vector<int>& rank) {
  const int m = static_cast<int>(alpha.size()) + 1;
  double ll = 0.0;
  for (int i = 0; i < X.rows(); ++i) {
    double eta = 0.0;
    for (int k = 0; k < X.cols(); ++k) eta += beta(k) * X(i, k);
    const int c = rank[static_cast<std::size_t>(i)];
    // Sum of masses above the category minus mass above the next one.
    const double above_lower = c == 0 ? 1.0 : naive_ccdf(family, alpha(c - 1) - eta);
    const double above_upper = c == m - 1 ? 0.0 : naive_ccdf(family, alpha(c) - eta);
    const double below_upper = c == m - 1 ? 1.0 : naive_cdf(family, alpha(c) - eta);
    const double below_lower = c == 0 ? 0.0 : naive_cdf(family, alpha(c - 1) - eta);
    const double prob = below_upper < 0.5 ? below_upper - below_lower : above_lower - above_upper;
    ll += std::log(prob);
  }
  return ll;
}

/// Central-difference gradient of f at x.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    g(j) = (f(xp) - f(xm)) / (2 * h);
  }
  return g;
}

/// Central-difference Jacobian of a vector function.
inline Eigen::MatrixXd fd_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
    double h) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd J(f0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    J.col(j) = (f(xp) - f(xm)) / (2 * h);
  }
  return J;
}

struct LogisticFit {
  Eigen::VectorXd coef;  // intercept first
  Eigen::VectorXd se;
};

/// Logistic regression of z on [1, X] by iteratively reweighted least squares.
inline LogisticFit irls_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& z) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd D(n, X.cols() + 1);
  D.col(0).setOnes();
  D.rightCols(X.cols()) = X;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(D.cols());
  Eigen::MatrixXd info;
  for (int it = 0; it < 200; ++it) {
    const Eigen::VectorXd eta = D * b;
    Eigen::VectorXd mu(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu(i) = 1.0 / (1.0 + std::exp(-eta(i)));
      w(i) = mu(i) * (1.0 - mu(i));
    }
    info = D.transpose() * w.asDiagonal() * D;
    const Eigen::VectorXd step = info.ldlt().solve(D.transpose() * (z - mu));
    b += step;
    if (step.cwiseAbs().maxCoeff() < 1e-14) break;
  }
  const Eigen::VectorXd eta = D * b;
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = 1.0 / (1.0 + std::exp(-eta(i)));
    w(i) = mu * (1.0 - mu);
  }
  info = D.transpose() * w.asDiagonal() * D;
  const Eigen::MatrixXd cov = info.inverse();
  return {b, cov.diagonal().cwiseSqrt()};
}

/// Relative error with unit floor: |a - b| / max(1, |b|).
inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

inline double max_rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) m = std::max(m, rel_err(a(i), b(i)));
  return m;
}

inline double max_rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) m = std::max(m, rel_err(a(i, j), b(i, j)));
  return m;
}

/// Small random problem: N rows, p standard-normal predictors, outcomes
/// drawn from m labelled categories (every category occupied).
struct RandomProblem {
  std::vector<double> y;
  Eigen::MatrixXd X;
};

inline RandomProblem random_problem(int n, int m, int p, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> norm(0.0, 1.0);
  RandomProblem out;
  out.X.resize(n, p);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < p; ++k) out.X(i, k) = norm(rng);
  out.y.resize(static_cast<std::size_t>(n));
  std::uniform_int_distribution<int> cat(0, m - 1);
  for (int i = 0; i < n; ++i) {
    // Tie the category loosely to the predictors so beta is not zero.
    double eta = 0.0;
    for (int k = 0; k < p; ++k) eta += 0.5 * out.X(i, k);
    const int c = i < m ? i : std::clamp(cat(rng) + static_cast<int>(std::lround(eta)), 0, m - 1);
    out.y[static_cast<std::size_t>(i)] = 1.5 * c + 0.25;
  }
  return out;
}

// Decimal rounding in exact integer arithmetic. The input is the decimal
// k / 10^d; the result ⌊t a⌉_s / t for t = tenths / 10 is returned as the
// double nearest the exact rational, computed by one correctly rounded
// division. Valid while the intermediate integers stay below 2^53.
inline double exact_decimal_round(long long k, int d, int s, int tenths) {
  auto p10 = [](int e) {
    long long v = 1;
    for (int i = 0; i < e; ++i) v *= 10;
    return v;
  };
  // t a 10^s = tenths k 10^s / 10^(d+1)
  long long num = tenths * (k < 0 ? -k : k);
  long long den = p10(d + 1);
  if (s >= 0) {
    num *= p10(s);
  } else {
    den *= p10(-s);
  }
  long long n = num / den;
  if (2 * (num % den) >= den) ++n;
  // result = n / (t 10^s) = 10 n / (tenths 10^s)
  double out = s >= 0 ? static_cast<double>(10 * n) / static_cast<double>(tenths * p10(s))
                      : static_cast<double>(10 * n * p10(-s)) / static_cast<double>(tenths);
  return k < 0 ? -out : out;
}

}  // namespace oracle
