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

// Outcome discretization. Both maps are non-decreasing in y, so a CPM fitted
// to the discretized outcome estimates the same beta.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpmbig/dataset.hpp"

namespace cpmbig {

struct BinningResult {
  std::vector<double> y_b;
  std::vector<std::size_t> bin_edges;  // rank where each bin starts, plus N
  std::size_t M_b = 0;
  std::size_t achieved = 0;

  std::size_t bin_size(std::size_t b) const { return bin_edges[b + 1] - bin_edges[b]; }
};

/// Equal-quantile binning. With N = M_b q + r, a random arrangement of
/// (M_b - r) bins of size q and r bins of size q + 1 is laid over the
/// outcomes in sorted order; each observation takes its bin's median.
template <class UniformRandomBitGenerator>
BinningResult bin_equal_quantile(std::span<const double> y, std::size_t M_b,
                                 UniformRandomBitGenerator& rng) {
  const std::size_t n = y.size();
  if (M_b < 2 || M_b > n) {
    throw std::invalid_argument("bin count must be in [2, N] (got " + std::to_string(M_b) +
                                ", N=" + std::to_string(n) + ")");
  }
  const std::size_t q = n / M_b;
  const std::size_t r = n % M_b;
  std::vector<std::size_t> sizes(M_b, q);
  std::fill(sizes.end() - static_cast<std::ptrdiff_t>(r), sizes.end(), q + 1);
  std::shuffle(sizes.begin(), sizes.end(), rng);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });

  BinningResult out;
  out.M_b = M_b;
  out.y_b.resize(n);
  out.bin_edges.reserve(M_b + 1);
  std::size_t start = 0;
  for (std::size_t b = 0; b < M_b; ++b) {
    out.bin_edges.push_back(start);
    const std::size_t len = sizes[b];
    const std::size_t mid = start + len / 2;
    const double median =
        len % 2 == 1 ? y[order[mid]] : 0.5 * (y[order[mid - 1]] + y[order[mid]]);
    for (std::size_t j = start; j < start + len; ++j) out.y_b[order[j]] = median;
    start += len;
  }
  out.bin_edges.push_back(n);
  out.achieved = count_distinct(out.y_b);
  return out;
}

enum class RoundingMode { decimal, sigdigit };

inline std::string to_string(RoundingMode m) {
  return m == RoundingMode::decimal ? "decimal" : "sigdigit";
}

/// Rounding to place s (decimal) or to s significant digits (sigdigit) at
/// refinement level t = tenths / 10, t in [1, 10].
struct RoundingScheme {
  RoundingMode mode = RoundingMode::decimal;
  int s = 0;
  int tenths = 10;
  std::size_t achieved = 0;

  double t() const { return tenths / 10.0; }
};

namespace detail {

inline double pow10_exact(int e) {
  static constexpr double table[] = {1e0,  1e1,  1e2,  1e3,  1e4,  1e5,  1e6,  1e7,
                                     1e8,  1e9,  1e10, 1e11, 1e12, 1e13, 1e14, 1e15,
                                     1e16, 1e17, 1e18, 1e19, 1e20, 1e21, 1e22};
  if (e >= 0 && e <= 22) return table[e];
  return std::pow(10.0, e);
}

/// Rounds a to the nearest multiple of 1 / (m * 10^e), halves away from
/// zero. Values within a few ulps of a half are treated as exact halves, so
/// decimal inputs such as 0.125 or 2.675 round as written.
inline double round_to_grid(double a, std::int64_t m, int e) {
  if (a == 0.0 || !std::isfinite(a)) return a;
  const long double mag = std::fabs(static_cast<long double>(a));
  const long double x = e >= 0 ? mag * m * static_cast<long double>(pow10_exact(e))
                               : mag * m / static_cast<long double>(pow10_exact(-e));
  long double whole = std::floor(x);
  const long double frac = x - whole;
  const long double tol = 8.0L * std::numeric_limits<double>::epsilon() * x;
  if (frac > 0.5L + tol || std::fabs(frac - 0.5L) <= tol) whole += 1.0L;
  const double n = static_cast<double>(whole);
  double out;
  if (e >= 0) {
    out = n / (static_cast<double>(m) * pow10_exact(e));
  } else {
    out = n * pow10_exact(-e) / static_cast<double>(m);
  }
  return std::signbit(a) ? -out : out;
}

/// Place of the leading significant digit, floor(log10 |a|), guarded
/// against log10 landing on the wrong side of a power of ten.
inline int leading_place(double a) {
  const double mag = std::fabs(a);
  int p = static_cast<int>(std::floor(std::log10(mag)));
  if (pow10_exact(p) > mag) --p;
  if (pow10_exact(p + 1) <= mag) ++p;
  return p;
}

/// ⌊a⌉_{place, tenths/10}. The multiplier tenths * 10^(place-1) is reduced
/// to m * 10^e with m not divisible by ten, so (s, 10) and (s + 1, 1) run
/// identical arithmetic.
inline double round_place(double a, int place, int tenths) {
  std::int64_t m = tenths;
  int e = place - 1;
  while (m % 10 == 0) {
    m /= 10;
    ++e;
  }
  return round_to_grid(a, m, e);
}

}  // namespace detail

/// Applies a rounding scheme to one value. In sigdigit mode 0 stays 0 and a
/// negative value is rounded by magnitude.
inline double round_value(double a, const RoundingScheme& scheme) {
  if (scheme.tenths < 10 || scheme.tenths > 100) {
    throw std::invalid_argument("refinement level must lie in [1, 10]");
  }
  if (scheme.mode == RoundingMode::decimal) return detail::round_place(a, scheme.s, scheme.tenths);
  if (scheme.s < 1) throw std::invalid_argument("significant digits must be >= 1");
  if (a == 0.0) return 0.0;
  return detail::round_place(a, scheme.s - 1 - detail::leading_place(a), scheme.tenths);
}

inline std::vector<double> round_all(std::span<const double> y, const RoundingScheme& scheme) {
  std::vector<double> out(y.size());
  std::transform(y.begin(), y.end(), out.begin(), [&](double v) { return round_value(v, scheme); });
  return out;
}

struct RoundingChoice {
  RoundingScheme scheme;
  std::vector<double> y_r;
  bool off_target = false;  // achieved count more than 1% away from M_r
  std::string message;
};

/// Picks s bracketing M_r at t = 1 (m(s,1) <= M_r < m(s+1,1)), then the t on
/// the 0.1 grid in [1, 10] closest to M_r on the log scale, ties to the
/// smaller t.
inline RoundingChoice choose_rounding(std::span<const double> y, std::size_t M_r,
                                      RoundingMode mode) {
  const std::size_t distinct = count_distinct(y);
  if (M_r < 2 || M_r >= distinct) {
    throw std::invalid_argument("target count must be in [2, " + std::to_string(distinct) +
                                ") (got " + std::to_string(M_r) + ")");
  }
  auto count = [&](int s, int tenths) {
    RoundingScheme sc{mode, s, tenths, 0};
    return count_distinct(round_all(y, sc));
  };

  // Scan s; the first and last admissible places bound the search.
  double max_abs = 0.0;
  for (double v : y) {
    if (!std::isfinite(v)) throw InvalidDataError("outcome contains a non-finite value");
    max_abs = std::max(max_abs, std::fabs(v));
  }
  constexpr int kMaxSteps = 40;
  int s = mode == RoundingMode::decimal ? -detail::leading_place(max_abs) - 1 : 1;
  const int s_min = mode == RoundingMode::decimal ? s - kMaxSteps : 1;
  std::size_t m_s = count(s, 10);
  while (m_s > M_r && s > s_min) m_s = count(--s, 10);
  bool below_floor = m_s > M_r;
  std::size_t m_next = count(s + 1, 10);
  for (int step = 0; !below_floor && m_next <= M_r; ++step) {
    if (step == kMaxSteps) throw std::runtime_error("choose_rounding: place search did not terminate");
    m_s = m_next;
    m_next = count(++s + 1, 10);
  }

  RoundingChoice out;
  out.scheme = {mode, s, 10, m_s};
  if (m_s != M_r) {
    double best = std::numeric_limits<double>::infinity();
    const double target = std::log(static_cast<double>(M_r));
    for (int tenths = 10; tenths <= 100; ++tenths) {
      const std::size_t m = count(s, tenths);
      const double gap = std::fabs(std::log(static_cast<double>(m)) - target);
      if (gap < best) {
        best = gap;
        out.scheme.tenths = tenths;
        out.scheme.achieved = m;
      }
    }
  }
  out.y_r = round_all(y, out.scheme);
  const double dev = std::fabs(static_cast<double>(out.scheme.achieved) - static_cast<double>(M_r)) /
                     static_cast<double>(M_r);
  if (dev > 0.01) {
    out.off_target = true;
    out.message = "achieved " + std::to_string(out.scheme.achieved) + " distinct values for target " +
                  std::to_string(M_r) + " (" + std::to_string(dev * 100.0) + "% off)";
  }
  return out;
}

struct RegionRow {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  std::size_t observations = 0;
  std::size_t distinct_before = 0;
  std::size_t distinct_after = 0;
};

/// Per-region counts for regions [edge_{i-1}, edge_i) split on the original
/// outcome, followed by a total row over all observations.
inline std::vector<RegionRow> rounding_report(std::span<const double> y, std::span<const double> y_r,
                                              std::span<const double> edges) {
  if (y.size() != y_r.size()) throw std::invalid_argument("y and y_r differ in length");
  if (!std::is_sorted(edges.begin(), edges.end())) throw std::invalid_argument("edges must be sorted");
  std::vector<RegionRow> rows(edges.size() + 1);
  std::vector<std::vector<double>> before(rows.size()), after(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) rows[i].lower = edges[i - 1];
    if (i < edges.size()) rows[i].upper = edges[i];
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto region =
        static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), y[i]) - edges.begin());
    before[region].push_back(y[i]);
    after[region].push_back(y_r[i]);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].observations = before[i].size();
    rows[i].distinct_before = count_distinct(before[i]);
    rows[i].distinct_after = count_distinct(after[i]);
  }
  rows.push_back({-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                  y.size(), count_distinct(y), count_distinct(y_r)});
  return rows;
}

}  // namespace cpmbig
