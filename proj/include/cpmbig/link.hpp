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

// Residual distributions F of the latent model alpha(Y) = beta'X + eps.
// The link G of the cumulative model is the inverse of F, so everything the
// likelihood needs is F and its first two derivatives.
//
// Name mapping:
//   logit    F(u) = 1 / (1 + exp(-u))
//   probit   F(u) = Phi(u)
//   loglog   F(u) = exp(-exp(-u))        (maximum Gumbel, right skewed)
//   cloglog  F(u) = 1 - exp(-exp(u))     (minimum Gumbel, proportional hazards)

#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cpmbig {

enum class LinkFamily { logit, probit, loglog, cloglog };

inline std::string_view to_string(LinkFamily link) {
  switch (link) {
    case LinkFamily::logit: return "logit";
    case LinkFamily::probit: return "probit";
    case LinkFamily::loglog: return "loglog";
    case LinkFamily::cloglog: return "cloglog";
  }
  return "unknown";
}

inline LinkFamily parse_link(std::string_view name) {
  if (name == "logit") return LinkFamily::logit;
  if (name == "probit") return LinkFamily::probit;
  if (name == "loglog") return LinkFamily::loglog;
  if (name == "cloglog") return LinkFamily::cloglog;
  throw std::invalid_argument("unknown link family '" + std::string(name) +
                              "' (expected logit, probit, loglog, cloglog)");
}

/// F(u), 1 - F(u), F'(u) and F''(u) at one point. `cdf` and `ccdf` are each
/// evaluated directly so that either tail keeps full relative precision.
struct LinkValues {
  double cdf = 0.0;
  double ccdf = 0.0;
  double pdf = 0.0;
  double pdf_deriv = 0.0;
  bool clamped = false;
};

namespace detail {

inline constexpr double kTiny = std::numeric_limits<double>::min();
inline constexpr double kBelowOne = 1.0 - std::numeric_limits<double>::epsilon() / 2;

// Keeps probabilities inside the open unit interval.
inline void clamp_open(LinkValues& v) {
  auto fix = [&v](double& x) {
    if (!(x >= kTiny)) {
      x = kTiny;
      v.clamped = true;
    } else if (x > kBelowOne) {
      x = kBelowOne;
      v.clamped = true;
    }
  };
  fix(v.cdf);
  fix(v.ccdf);
  if (!(v.pdf >= kTiny)) {
    v.pdf = kTiny;
    v.clamped = true;
  }
  if (!std::isfinite(v.pdf_deriv)) v.pdf_deriv = 0.0;
}

inline LinkValues eval_logit(double u) {
  LinkValues v;
  const double e = std::exp(-std::abs(u));  // in (0, 1]
  const double small = e / (1.0 + e);       // the tail-side probability
  const double large = 1.0 / (1.0 + e);
  v.cdf = u >= 0 ? large : small;
  v.ccdf = u >= 0 ? small : large;
  v.pdf = small * large;
  v.pdf_deriv = v.pdf * (v.ccdf - v.cdf);
  return v;
}

inline LinkValues eval_probit(double u) {
  LinkValues v;
  v.cdf = 0.5 * std::erfc(-u / std::numbers::sqrt2);
  v.ccdf = 0.5 * std::erfc(u / std::numbers::sqrt2);
  v.pdf = std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
  v.pdf_deriv = -u * v.pdf;
  return v;
}

inline LinkValues eval_loglog(double u) {
  LinkValues v;
  const double w = std::exp(-u);
  v.cdf = std::exp(-w);
  v.ccdf = -std::expm1(-w);
  v.pdf = std::exp(-u - w);
  v.pdf_deriv = v.pdf * (w - 1.0);
  return v;
}

inline LinkValues eval_cloglog(double u) {
  LinkValues v;
  const double w = std::exp(u);
  v.cdf = -std::expm1(-w);
  v.ccdf = std::exp(-w);
  v.pdf = std::exp(u - w);
  v.pdf_deriv = v.pdf * (1.0 - w);
  return v;
}

// Acklam's rational approximation, polished by one Halley step on erfc.
inline double normal_quantile(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement against the lower tail when x < 0, upper tail otherwise.
  double e;
  if (x < 0) {
    e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  } else {
    e = (1.0 - p) - 0.5 * std::erfc(x / std::numbers::sqrt2);
  }
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

}  // namespace detail

/// Evaluates F, 1 - F, F' and F'' of the residual distribution at `u`.
/// Probabilities are kept strictly inside (0, 1); `clamped` reports when
/// underflow forced a value to the nearest representable interior point.
inline LinkValues link_eval(LinkFamily link, double u) {
  if (!std::isfinite(u)) throw std::domain_error("link_eval: non-finite argument");
  LinkValues v;
  switch (link) {
    case LinkFamily::logit: v = detail::eval_logit(u); break;
    case LinkFamily::probit: v = detail::eval_probit(u); break;
    case LinkFamily::loglog: v = detail::eval_loglog(u); break;
    case LinkFamily::cloglog: v = detail::eval_cloglog(u); break;
  }
  detail::clamp_open(v);
  return v;
}

/// G(p) = F^{-1}(p) for p in (0, 1).
inline double link_quantile(LinkFamily link, double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("link_quantile: p outside (0, 1)");
  switch (link) {
    case LinkFamily::logit: return std::log(p) - std::log1p(-p);
    case LinkFamily::probit: return detail::normal_quantile(p);
    case LinkFamily::loglog: return -std::log(-std::log(p));
    case LinkFamily::cloglog: return std::log(-std::log1p(-p));
  }
  return 0.0;
}

/// Draws one residual from F by inversion.
template <class Rng>
double sample_residual(LinkFamily link, Rng& rng) {
  double p;
  do {
    p = std::generate_canonical<double, std::numeric_limits<double>::digits>(rng);
  } while (p <= 0.0 || p >= 1.0);
  return link_quantile(link, p);
}

}  // namespace cpmbig
