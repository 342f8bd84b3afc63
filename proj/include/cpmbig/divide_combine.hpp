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

// Divide-and-combine estimation: fit independent models on K random
// subsets and average them. Subsets see different outcome grids, so every
// combined parameter carries a K-vector naming, for each subset, the 1-based
// position of the matching estimate in that subset's (alpha, beta) vector,
// with 0 meaning "this subset does not contribute".

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "cpmbig/dataset.hpp"
#include "cpmbig/errors.hpp"
#include "cpmbig/fit.hpp"
#include "cpmbig/random.hpp"

namespace cpmbig {

struct PartitionPlan {
  std::size_t K = 0;
  std::vector<std::size_t> assignment;  // 0-based subset of each observation
  std::vector<std::size_t> sizes;

  /// Row indices of each subset, ascending.
  std::vector<std::vector<std::size_t>> members() const {
    std::vector<std::vector<std::size_t>> out(K);
    for (std::size_t k = 0; k < K; ++k) out[k].reserve(sizes[k]);
    for (std::size_t i = 0; i < assignment.size(); ++i) out[assignment[i]].push_back(i);
    return out;
  }
};

/// Random partition into K subsets whose sizes differ by at most one. The K
/// smallest and the K largest outcomes are each spread one per subset, so
/// every subset spans [y_(K), y_(N-K+1)].
template <class UniformRandomBitGenerator>
PartitionPlan partition(std::span<const double> y, std::size_t K, UniformRandomBitGenerator& rng) {
  const std::size_t n = y.size();
  if (K < 2 || 2 * K > n) {
    throw std::invalid_argument("partition: need 2 <= K <= N/2 (K=" + std::to_string(K) +
                                ", N=" + std::to_string(n) + ")");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });

  PartitionPlan plan;
  plan.K = K;
  plan.sizes.assign(K, n / K);
  std::vector<std::size_t> labels(K);
  std::iota(labels.begin(), labels.end(), std::size_t{0});
  std::shuffle(labels.begin(), labels.end(), rng);
  for (std::size_t r = 0; r < n % K; ++r) ++plan.sizes[labels[r]];

  plan.assignment.assign(n, 0);
  std::shuffle(labels.begin(), labels.end(), rng);
  for (std::size_t j = 0; j < K; ++j) plan.assignment[order[j]] = labels[j];
  std::shuffle(labels.begin(), labels.end(), rng);
  for (std::size_t j = 0; j < K; ++j) plan.assignment[order[n - K + j]] = labels[j];

  std::vector<std::size_t> pool;
  pool.reserve(n - 2 * K);
  for (std::size_t k = 0; k < K; ++k) pool.insert(pool.end(), plan.sizes[k] - 2, k);
  std::shuffle(pool.begin(), pool.end(), rng);
  for (std::size_t j = K; j < n - K; ++j) plan.assignment[order[j]] = pool[j - K];
  return plan;
}

/// One K-vector per combined parameter, rows ordered (alpha_1..alpha_{M-1},
/// beta_1..beta_p). Entries are 1-based; 0 marks a missing contribution.
class KVectorTable {
 public:
  KVectorTable() = default;
  KVectorTable(std::size_t K, std::size_t alphas, std::size_t betas)
      : K_(K), alphas_(alphas), betas_(betas), entries_((alphas + betas) * K, 0) {}

  std::size_t K() const { return K_; }
  std::size_t alphas() const { return alphas_; }
  std::size_t betas() const { return betas_; }
  std::size_t rows() const { return alphas_ + betas_; }

  std::span<std::uint32_t> row(std::size_t r) { return {entries_.data() + r * K_, K_}; }
  std::span<const std::uint32_t> row(std::size_t r) const {
    return {entries_.data() + r * K_, K_};
  }

  std::size_t contributors(std::size_t r) const {
    const auto v = row(r);
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](auto a) { return a > 0; }));
  }

 private:
  std::size_t K_ = 0;
  std::size_t alphas_ = 0;
  std::size_t betas_ = 0;
  std::vector<std::uint32_t> entries_;
};

/// Aligns subset alpha grids to the global grid. For global cut j (the
/// alpha at global value g_j), subset k contributes its alpha i when
/// d_i <= g_j < d_{i+1} on its own sorted values d, and 0 when g_j lies
/// below its minimum or at/above its maximum. Beta_j maps to m_k - 1 + j.
inline KVectorTable build_kvectors(std::span<const double> global_distinct,
                                   const std::vector<std::vector<double>>& subset_distinct,
                                   std::size_t betas) {
  const std::size_t K = subset_distinct.size();
  const std::size_t alphas = global_distinct.size() - 1;
  KVectorTable table(K, alphas, betas);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& d = subset_distinct[k];
    for (double v : d) {
      if (!std::binary_search(global_distinct.begin(), global_distinct.end(), v)) {
        throw ConsistencyError("subset " + std::to_string(k + 1) + " value " + std::to_string(v) +
                               " is missing from the global outcome grid");
      }
    }
    const std::size_t m = d.size();
    std::size_t below = 0;  // number of subset values <= current global value
    for (std::size_t j = 0; j < alphas; ++j) {
      while (below < m && d[below] <= global_distinct[j]) ++below;
      table.row(j)[k] = (below == 0 || below == m) ? 0u : static_cast<std::uint32_t>(below);
    }
    for (std::size_t b = 0; b < betas; ++b) {
      table.row(alphas + b)[k] = static_cast<std::uint32_t>(m - 1 + b + 1);
    }
  }
  return table;
}

/// Repairs the ends of a combined alpha. Backward over 1-based i = K-1..1,
/// alpha_i = min(alpha_i, alpha_{i+1}); then forward over i = M-K+1..M-1,
/// alpha_i = max(alpha_i, alpha_{i-1}). Indices K..M-K are not touched.
inline Eigen::VectorXd enforce_monotonicity(Eigen::VectorXd alpha, std::size_t K) {
  const auto n = static_cast<std::ptrdiff_t>(alpha.size());  // M - 1
  const auto k = static_cast<std::ptrdiff_t>(K);
  for (std::ptrdiff_t i = std::min(k - 2, n - 2); i >= 0; --i) {
    alpha(i) = std::min(alpha(i), alpha(i + 1));
  }
  for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(n + 1 - k, 1); i < n; ++i) {
    alpha(i) = std::max(alpha(i), alpha(i - 1));
  }
  return alpha;
}

struct SubsetDiagnostics {
  std::size_t size = 0;
  std::size_t distinct = 0;
  int iterations = 0;
  bool converged = false;
  double loglik = 0.0;
  double max_score = 0.0;
};

struct CombinedFit {
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
  Eigen::VectorXd alpha_var;
  Eigen::MatrixXd beta_cov;
  KVectorTable kvectors;
  std::vector<double> distinct;
  LinkFamily link = LinkFamily::logit;
  std::vector<SubsetDiagnostics> subsets;
  std::vector<std::string> warnings;

  Eigen::VectorXd alpha_se() const { return alpha_var.cwiseMax(0.0).cwiseSqrt(); }
  Eigen::VectorXd beta_se() const { return beta_cov.diagonal().cwiseMax(0.0).cwiseSqrt(); }
};

/// Averages subset estimates row by row through the K-vectors and combines
/// variances as sum_k v_k / (#contributors)^2. The beta covariance uses
/// sum_k V_k[a_k, b_k] / (#a * #b). Alpha is then end-repaired.
inline CombinedFit combine(const std::vector<CpmFit>& fits, const KVectorTable& table,
                           std::span<const double> global_distinct) {
  const std::size_t K = fits.size();
  if (K == 0 || table.K() != K) throw ConsistencyError("K-vector table does not match the fits");
  for (std::size_t k = 0; k < K; ++k) {
    if (!fits[k].converged) {
      throw UnconvergedSubsetError(k + 1, "subset " + std::to_string(k + 1) +
                                              " did not converge: " + fits[k].message);
    }
    if (fits[k].link != fits[0].link) throw ConsistencyError("subset fits use different links");
    if (static_cast<std::size_t>(fits[k].beta.size()) != table.betas())
      throw ConsistencyError("subset " + std::to_string(k + 1) + " has the wrong beta length");
  }
  const std::size_t na = table.alphas();
  const std::size_t nb = table.betas();

  auto estimate = [&](std::size_t k, std::uint32_t a) {
    const auto i = static_cast<Eigen::Index>(a - 1);
    const Eigen::Index m1 = fits[k].alpha.size();
    return i < m1 ? fits[k].alpha(i) : fits[k].beta(i - m1);
  };
  auto variance_of = [&](std::size_t k, std::uint32_t a) {
    const auto i = static_cast<Eigen::Index>(a - 1);
    const Eigen::Index m1 = fits[k].alpha.size();
    return i < m1 ? fits[k].alpha_var(i) : fits[k].beta_cov(i - m1, i - m1);
  };

  CombinedFit out;
  out.kvectors = table;
  out.distinct.assign(global_distinct.begin(), global_distinct.end());
  out.link = fits[0].link;
  Eigen::VectorXd values(static_cast<Eigen::Index>(na + nb));
  Eigen::VectorXd vars(static_cast<Eigen::Index>(na + nb));
  for (std::size_t r = 0; r < na + nb; ++r) {
    const auto a = table.row(r);
    double sum = 0.0;
    double vsum = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < K; ++k) {
      if (a[k] == 0) continue;
      sum += estimate(k, a[k]);
      vsum += variance_of(k, a[k]);
      ++count;
    }
    if (count == 0) {
      throw ConsistencyError("combined parameter " + std::to_string(r + 1) +
                             " has no contributing subset");
    }
    values(static_cast<Eigen::Index>(r)) = sum / static_cast<double>(count);
    vars(static_cast<Eigen::Index>(r)) =
        vsum / (static_cast<double>(count) * static_cast<double>(count));
  }
  out.alpha = enforce_monotonicity(values.head(static_cast<Eigen::Index>(na)), K);
  out.alpha_var = vars.head(static_cast<Eigen::Index>(na));
  out.beta = values.tail(static_cast<Eigen::Index>(nb));

  out.beta_cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nb), static_cast<Eigen::Index>(nb));
  for (std::size_t i = 0; i < nb; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      const auto ra = table.row(na + i);
      const auto rb = table.row(na + j);
      double sum = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        if (ra[k] == 0 || rb[k] == 0) continue;
        const Eigen::Index m1 = fits[k].alpha.size();
        sum += fits[k].beta_cov(static_cast<Eigen::Index>(ra[k] - 1) - m1,
                                static_cast<Eigen::Index>(rb[k] - 1) - m1);
      }
      out.beta_cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          sum / static_cast<double>(table.contributors(na + i) * table.contributors(na + j));
    }
  }
  return out;
}

/// Columns whose minority count (rows not equal to the column's most common
/// value) is below K; such a column is likely constant in some subset.
inline std::vector<std::size_t> screen_predictors(const Dataset& data, std::size_t K) {
  std::vector<std::size_t> flagged;
  const auto n = static_cast<std::size_t>(data.X.rows());
  for (Eigen::Index c = 0; c < data.X.cols(); ++c) {
    std::vector<double> col(data.X.col(c).data(), data.X.col(c).data() + n);
    std::sort(col.begin(), col.end());
    std::size_t best = 0;
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j < n && col[j] == col[i]) ++j;
      best = std::max(best, j - i);
      i = j;
    }
    if (n - best < K) flagged.push_back(static_cast<std::size_t>(c));
  }
  return flagged;
}

struct DivideCombineOptions {
  std::size_t K = 10;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  FitOptions fit;
};

/// Partition, fit every subset (up to `workers` at a time), and combine in
/// subset order.
inline CombinedFit fit_divide_combine(const Dataset& data, LinkFamily link,
                                      const DivideCombineOptions& opts) {
  validate(data);
  const OutcomeIndex global = index_outcomes(data.y);
  Rng rng = make_stream(opts.seed, Stream::partition);
  const PartitionPlan plan = partition(data.y, opts.K, rng);
  const auto members = plan.members();

  std::vector<std::string> warnings;
  for (std::size_t c : screen_predictors(data, opts.K)) {
    warnings.push_back("predictor '" + data.predictor_name(c) +
                       "' has fewer than K observations off its most common value");
  }

  std::vector<Dataset> parts(opts.K);
  for (std::size_t k = 0; k < opts.K; ++k) {
    parts[k] = subset(data, members[k]);
    for (Eigen::Index c = 0; c < parts[k].X.cols(); ++c) {
      const auto col = parts[k].X.col(c);
      if (col.maxCoeff() == col.minCoeff()) {
        throw InestimableCoefficientError(
            static_cast<std::size_t>(c),
            "predictor '" + data.predictor_name(static_cast<std::size_t>(c)) +
                "' is constant in subset " + std::to_string(k + 1) +
                "; its coefficient cannot be estimated there");
      }
    }
  }

  std::vector<std::optional<CpmFit>> results(opts.K);
  std::vector<std::exception_ptr> errors(opts.K);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < opts.K; k = next++) {
      try {
        results[k] = fit_cpm(parts[k], link, opts.fit);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t nthreads = std::clamp<std::size_t>(opts.workers, 1, opts.K);
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  }
  for (std::size_t k = 0; k < opts.K; ++k) {
    if (errors[k]) std::rethrow_exception(errors[k]);
  }

  std::vector<CpmFit> fits;
  std::vector<std::vector<double>> grids;
  fits.reserve(opts.K);
  for (auto& r : results) {
    grids.push_back(r->distinct);
    fits.push_back(std::move(*r));
  }
  const KVectorTable table = build_kvectors(global.distinct, grids, data.predictors());
  CombinedFit out = combine(fits, table, global.distinct);
  out.warnings = std::move(warnings);
  for (std::size_t k = 0; k < opts.K; ++k) {
    out.subsets.push_back({plan.sizes[k], fits[k].distinct.size(), fits[k].iterations,
                           fits[k].converged, fits[k].loglik, fits[k].max_score});
  }
  return out;
}

}  // namespace cpmbig
