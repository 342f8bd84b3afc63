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

// Time and peak-memory benchmarks of single fits over an (N, M, p) grid,
// and log-log scaling fits of the results.
//
// On Linux each cell runs in a forked child. The child builds the data,
// does one discarded warm-up fit, returns freed memory to the kernel, resets
// the resident high-water mark through /proc/self/clear_refs and then times
// one fit. Peak memory is VmHWM after the fit; the fit's own footprint is
// VmHWM minus the resident size just before it.

#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#if defined(__linux__)
#include <malloc.h>
#include <sys/wait.h>
#include <unistd.h>
#endif

#include "cpmbig/discretize.hpp"
#include "cpmbig/fit.hpp"
#include "cpmbig/random.hpp"

namespace cpmbig {

struct BenchRecord {
  std::size_t N = 0;
  std::size_t M = 0;  // requested distinct outcomes
  std::size_t p = 0;
  std::size_t achieved_M = 0;
  double time = 0.0;                 // seconds, timed fit only
  std::uint64_t peak_mem = 0;        // bytes, process high-water mark during the fit
  std::uint64_t baseline_mem = 0;    // bytes resident just before the fit
  int iterations = 0;
  bool fit_converged = false;
  bool ok = false;
  std::string error;

  /// Memory attributable to the fit.
  std::uint64_t fit_mem() const { return peak_mem > baseline_mem ? peak_mem - baseline_mem : 0; }
};

struct BenchOptions {
  std::uint64_t seed = 1;
  bool isolate = true;  // fork per cell where supported
  LinkFamily link = LinkFamily::logit;
  std::function<void(const BenchRecord&)> on_record;
};

/// Continuous predictors, logistic outcome, then equal-quantile binning to M
/// distinct values when M < N.
inline Dataset bench_dataset(std::size_t N, std::size_t M, std::size_t p, std::uint64_t seed) {
  Rng xr = make_stream(seed, Stream::bench, 2 * static_cast<std::uint32_t>(N * 131 + M * 7 + p));
  Rng br = make_stream(seed, Stream::bench, 2 * static_cast<std::uint32_t>(N * 131 + M * 7 + p) + 1);
  std::normal_distribution<double> z(0.0, 1.0);
  Dataset d;
  d.X.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(p));
  d.y.resize(N);
  Eigen::VectorXd beta(static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p; ++j) beta(static_cast<Eigen::Index>(j)) = (j % 2 == 0 ? 0.5 : -0.5) / std::sqrt(static_cast<double>(p));
  for (std::size_t i = 0; i < N; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < p; ++j) d.X(r, static_cast<Eigen::Index>(j)) = z(xr);
    d.y[i] = d.X.row(r).dot(beta) + sample_residual(LinkFamily::logit, xr);
  }
  if (M < N) d.y = bin_equal_quantile(d.y, M, br).y_b;
  return d;
}

namespace detail {

/// VmHWM / VmRSS from /proc/self/status in bytes; 0 when unavailable.
inline std::uint64_t proc_status_kb(const char* key) {
  std::ifstream in("/proc/self/status");
  std::string line;
  const std::size_t len = std::strlen(key);
  while (std::getline(in, line)) {
    if (line.compare(0, len, key) == 0 && line.size() > len && line[len] == ':') {
      return std::stoull(line.substr(len + 1)) * 1024;
    }
  }
  return 0;
}

inline bool reset_peak_rss() {
  std::ofstream out("/proc/self/clear_refs");
  if (!out) return false;
  out << "5";
  out.flush();
  return static_cast<bool>(out);
}

inline BenchRecord measure_cell(std::size_t N, std::size_t M, std::size_t p, const BenchOptions& opts) {
  BenchRecord rec;
  rec.N = N;
  rec.M = M;
  rec.p = p;
  try {
    const Dataset data = bench_dataset(N, M, p, opts.seed);
    const OutcomeIndex index = index_outcomes(data.y);
    rec.achieved_M = index.categories();
    { const CpmFit warm = fit_cpm(data, index, opts.link, {}); }
#if defined(__linux__)
    malloc_trim(0);
#endif
    rec.baseline_mem = proc_status_kb("VmRSS");
    reset_peak_rss();
    const auto t0 = std::chrono::steady_clock::now();
    const CpmFit fit = fit_cpm(data, index, opts.link, {});
    const auto t1 = std::chrono::steady_clock::now();
    rec.peak_mem = proc_status_kb("VmHWM");
    rec.time = std::chrono::duration<double>(t1 - t0).count();
    rec.iterations = fit.iterations;
    rec.fit_converged = fit.converged;
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

#if defined(__linux__)
struct WireRecord {
  std::uint64_t achieved_M, peak_mem, baseline_mem;
  double time;
  std::int32_t iterations;
  std::uint8_t converged, ok;
  char error[256];
};

inline bool write_all(int fd, const void* buf, std::size_t n) {
  const char* p = static_cast<const char*>(buf);
  while (n > 0) {
    const ssize_t w = ::write(fd, p, n);
    if (w <= 0) return false;
    p += w;
    n -= static_cast<std::size_t>(w);
  }
  return true;
}

inline bool read_all(int fd, void* buf, std::size_t n) {
  char* p = static_cast<char*>(buf);
  while (n > 0) {
    const ssize_t r = ::read(fd, p, n);
    if (r <= 0) return false;
    p += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

inline BenchRecord measure_cell_isolated(std::size_t N, std::size_t M, std::size_t p,
                                         const BenchOptions& opts) {
  int fds[2];
  if (::pipe(fds) != 0) throw std::runtime_error("bench: pipe failed");
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    throw std::runtime_error("bench: fork failed");
  }
  if (pid == 0) {
    ::close(fds[0]);
    // Fixed threshold so large blocks are always mmapped and really freed.
    mallopt(M_MMAP_THRESHOLD, 128 * 1024);
    const BenchRecord r = measure_cell(N, M, p, opts);
    WireRecord w{};
    w.achieved_M = r.achieved_M;
    w.peak_mem = r.peak_mem;
    w.baseline_mem = r.baseline_mem;
    w.time = r.time;
    w.iterations = r.iterations;
    w.converged = r.fit_converged;
    w.ok = r.ok;
    std::strncpy(w.error, r.error.c_str(), sizeof(w.error) - 1);
    const bool sent = write_all(fds[1], &w, sizeof w);
    ::close(fds[1]);
    ::_exit(sent ? 0 : 1);
  }
  ::close(fds[1]);
  WireRecord w{};
  const bool got = read_all(fds[0], &w, sizeof w);
  ::close(fds[0]);
  int status = 0;
  ::waitpid(pid, &status, 0);
  BenchRecord rec;
  rec.N = N;
  rec.M = M;
  rec.p = p;
  if (!got) {
    rec.error = WIFSIGNALED(status) ? "child killed by signal " + std::to_string(WTERMSIG(status))
                                    : "child exited without a result";
    return rec;
  }
  rec.achieved_M = w.achieved_M;
  rec.peak_mem = w.peak_mem;
  rec.baseline_mem = w.baseline_mem;
  rec.time = w.time;
  rec.iterations = w.iterations;
  rec.fit_converged = w.converged != 0;
  rec.ok = w.ok != 0;
  rec.error = w.error;
  return rec;
}
#endif

}  // namespace detail

struct GridCell {
  std::size_t N, M, p;
};

/// Feasible cells (M <= N), ordered by p, then N, then M.
inline std::vector<GridCell> grid_cells(std::span<const std::size_t> Ns, std::span<const std::size_t> Ms,
                                        std::span<const std::size_t> ps) {
  std::vector<GridCell> cells;
  for (std::size_t p : ps) {
    for (std::size_t N : Ns) {
      for (std::size_t M : Ms) {
        if (M <= N && M >= 2) cells.push_back({N, M, p});
      }
    }
  }
  return cells;
}

/// One record per feasible cell, run strictly one after another.
inline std::vector<BenchRecord> run_grid(std::span<const std::size_t> Ns, std::span<const std::size_t> Ms,
                                         std::span<const std::size_t> ps, const BenchOptions& opts = {}) {
  std::vector<BenchRecord> out;
  for (const GridCell& c : grid_cells(Ns, Ms, ps)) {
#if defined(__linux__)
    BenchRecord r = opts.isolate ? detail::measure_cell_isolated(c.N, c.M, c.p, opts)
                                 : detail::measure_cell(c.N, c.M, c.p, opts);
#else
    BenchRecord r = detail::measure_cell(c.N, c.M, c.p, opts);
#endif
    if (opts.on_record) opts.on_record(r);
    out.push_back(std::move(r));
  }
  return out;
}

enum class BenchResponse { time, memory };
enum class BenchPredictor { N, M, p, M_minus_1_plus_p };

inline std::string to_string(BenchPredictor v) {
  switch (v) {
    case BenchPredictor::N: return "N";
    case BenchPredictor::M: return "M";
    case BenchPredictor::p: return "p";
    case BenchPredictor::M_minus_1_plus_p: return "M-1+p";
  }
  return "";
}

struct LogLogFit {
  double constant = 0.0;  // 10^intercept
  std::vector<double> exponents;
  double r2 = 0.0;
  std::size_t records = 0;
};

/// OLS of log10(response) on log10 of the chosen predictors. Memory uses
/// the fit's own footprint. Records with M < min_M, failed fits or
/// non-positive responses are dropped.
inline LogLogFit fit_loglog_model(std::span<const BenchRecord> records, BenchResponse response,
                                  std::span<const BenchPredictor> predictors, std::size_t min_M = 0) {
  std::vector<const BenchRecord*> use;
  for (const auto& r : records) {
    if (!r.ok || r.M < min_M) continue;
    const double v = response == BenchResponse::time ? r.time : static_cast<double>(r.fit_mem());
    if (v > 0.0) use.push_back(&r);
  }
  if (use.size() < 5) throw std::invalid_argument("log-log fit needs at least 5 usable records");
  const auto n = static_cast<Eigen::Index>(use.size());
  const auto k = static_cast<Eigen::Index>(predictors.size());
  Eigen::MatrixXd A(n, k + 1);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const BenchRecord& r = *use[static_cast<std::size_t>(i)];
    A(i, 0) = 1.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      double x = 0.0;
      switch (predictors[static_cast<std::size_t>(j)]) {
        case BenchPredictor::N: x = static_cast<double>(r.N); break;
        case BenchPredictor::M: x = static_cast<double>(r.M); break;
        case BenchPredictor::p: x = static_cast<double>(r.p); break;
        case BenchPredictor::M_minus_1_plus_p: x = static_cast<double>(r.M - 1 + r.p); break;
      }
      A(i, j + 1) = std::log10(x);
    }
    b(i) = std::log10(response == BenchResponse::time ? r.time : static_cast<double>(r.fit_mem()));
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < k + 1) throw std::invalid_argument("log-log design is rank deficient");
  const Eigen::VectorXd coef = qr.solve(b);
  const Eigen::VectorXd resid = b - A * coef;
  const double ss_tot = (b.array() - b.mean()).square().sum();
  LogLogFit out;
  out.constant = std::pow(10.0, coef(0));
  for (Eigen::Index j = 0; j < k; ++j) out.exponents.push_back(coef(j + 1));
  out.r2 = ss_tot > 0.0 ? 1.0 - resid.squaredNorm() / ss_tot : 1.0;
  out.records = use.size();
  return out;
}

}  // namespace cpmbig
