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
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpmbig/dataset.hpp"
#include "cpmbig/errors.hpp"
#include "cpmbig/likelihood.hpp"
#include "cpmbig/link.hpp"
#include "cpmbig/tridiagonal.hpp"

namespace cpmbig {

struct FitOptions {
  double score_tol = 1e-8;  // max |score| for convergence
  double ll_tol = 1e-10;    // relative log-likelihood change for convergence
  int max_iter = 100;
  double bound = 500.0;     // |parameter| beyond this is reported as separation
  int max_halvings = 30;
  /// Called with (iteration, negative log-likelihood) at the start and after
  /// every accepted step.
  std::function<void(int, double)> on_iteration;
};

/// A fitted cumulative probability model. `alpha[j]` is the latent-scale
/// transformation at outcome `distinct[j]` (it applies on the interval
/// [distinct[j], distinct[j+1])).
struct CpmFit {
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
  Eigen::VectorXd alpha_var;
  Eigen::MatrixXd beta_cov;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  double max_score = 0.0;
  std::string message;
  std::vector<double> distinct;
  LinkFamily link = LinkFamily::logit;
  std::size_t observations = 0;

  Eigen::VectorXd alpha_se() const { return alpha_var.cwiseMax(0.0).cwiseSqrt(); }
  Eigen::VectorXd beta_se() const { return beta_cov.diagonal().cwiseMax(0.0).cwiseSqrt(); }
};

struct Variance {
  Eigen::VectorXd alpha_var;
  Eigen::MatrixXd beta_cov;
};

/// Factorization of the information matrix J = -H in its block structure:
/// banded Cholesky of the alpha block A, then the p x p Schur complement
/// S = D - B' A^{-1} B. Memory is O(Mp); the dense matrix is never formed.
class InformationSolver {
 public:
  explicit InformationSolver(const StructuredHessian& h) {
    const Eigen::Index na = h.alphas();
    std::vector<double> diag(static_cast<std::size_t>(na));
    std::vector<double> off(static_cast<std::size_t>(std::max<Eigen::Index>(na - 1, 0)));
    for (Eigen::Index j = 0; j < na; ++j) diag[static_cast<std::size_t>(j)] = -h.alpha_diag(j);
    for (Eigen::Index j = 0; j + 1 < na; ++j)
      off[static_cast<std::size_t>(j)] = -h.alpha_offdiag(j);
    if (!alpha_.factor(diag, off)) {
      throw SingularHessianError(
          "alpha", "alpha block of the information matrix is not positive definite (pivot " +
                       std::to_string(alpha_.failed_pivot()) + ")");
    }
    cross_ = -h.cross;
    solved_cross_ = cross_;
    alpha_.solve_in_place(solved_cross_);
    const Eigen::MatrixXd schur = -h.beta_block - cross_.transpose() * solved_cross_;
    schur_.compute(schur);
    if (schur.size() > 0 && schur_.info() != Eigen::Success) {
      throw SingularHessianError("beta",
                                 "beta Schur complement of the information matrix is not "
                                 "positive definite");
    }
  }

  /// J^{-1} rhs, with rhs ordered (alpha, beta).
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    const Eigen::Index na = cross_.rows();
    const Eigen::Index nb = cross_.cols();
    Eigen::VectorXd t = rhs.head(na);
    alpha_.solve_in_place(std::span<double>(t.data(), static_cast<std::size_t>(na)));
    Eigen::VectorXd out(na + nb);
    if (nb > 0) {
      const Eigen::VectorXd db = schur_.solve(rhs.tail(nb) - cross_.transpose() * t);
      out.tail(nb) = db;
      out.head(na) = t - solved_cross_ * db;
    } else {
      out = t;
    }
    return out;
  }

  /// Diagonal of the alpha block of J^{-1} and the full beta block:
  ///   beta_cov  = S^{-1}
  ///   alpha_var = diag(A^{-1}) + rowwise |W L_S^{-T}|^2,   W = A^{-1} B
  Variance variance() const {
    const Eigen::Index na = cross_.rows();
    const Eigen::Index nb = cross_.cols();
    Variance v;
    const std::vector<double> inv_diag = alpha_.inverse_diagonal();
    v.alpha_var = Eigen::Map<const Eigen::VectorXd>(inv_diag.data(), na);
    if (nb > 0) {
      v.beta_cov = schur_.solve(Eigen::MatrixXd::Identity(nb, nb));
      v.beta_cov = 0.5 * (v.beta_cov + v.beta_cov.transpose()).eval();
      // Rows of W times L_S^{-T}: solve L_S Z = W'.
      const Eigen::MatrixXd z = schur_.matrixL().solve(solved_cross_.transpose());
      v.alpha_var += z.colwise().squaredNorm().transpose();
    } else {
      v.beta_cov.resize(0, 0);
    }
    return v;
  }

 private:
  TridiagonalCholesky alpha_;
  Eigen::MatrixXd cross_;         // B = -H_ab
  Eigen::MatrixXd solved_cross_;  // A^{-1} B
  Eigen::LLT<Eigen::MatrixXd> schur_;
};

/// Newton direction J^{-1} score from the structured Hessian.
inline Eigen::VectorXd newton_direction(const StructuredHessian& h, const Eigen::VectorXd& score) {
  return InformationSolver(h).solve(score);
}

/// Alpha variances and beta covariance from the inverse information.
inline Variance variance(const StructuredHessian& h) { return InformationSolver(h).variance(); }

/// Exact no-covariate MLE: alpha_j = G(fraction of observations <= y_(j)).
inline Eigen::VectorXd initial_alpha(const OutcomeIndex& index, LinkFamily link) {
  const std::vector<std::size_t> counts = index.counts();
  const double n = static_cast<double>(index.rank.size());
  Eigen::VectorXd alpha(static_cast<Eigen::Index>(counts.size()) - 1);
  std::size_t cum = 0;
  for (Eigen::Index j = 0; j < alpha.size(); ++j) {
    cum += counts[static_cast<std::size_t>(j)];
    alpha(j) = link_quantile(link, static_cast<double>(cum) / n);
  }
  return alpha;
}

/// Nonparametric maximum likelihood fit by Newton's method with
/// step-halving. Each step costs O(Np^2 + Mp^2) and O(Mp) memory.
inline CpmFit fit_cpm(const Dataset& data, const OutcomeIndex& index, LinkFamily link,
                      const FitOptions& opts = {}) {
  validate(data);
  if (index.rank.size() != data.size())
    throw std::invalid_argument("outcome index does not match the dataset");
  if (index.categories() < 2)
    throw DegenerateOutcomeError("outcome has a single distinct value; nothing to order");

  const Eigen::Index na = static_cast<Eigen::Index>(index.categories()) - 1;
  const Eigen::Index nb = data.X.cols();

  CpmFit fit;
  fit.link = link;
  fit.distinct = index.distinct;
  fit.observations = data.size();

  Eigen::VectorXd alpha = initial_alpha(index, link);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(nb);
  Derivatives d = derivatives(alpha, beta, data, index, link);
  if (!std::isfinite(d.loglik)) throw Error("initial parameters have zero likelihood");

  Eigen::VectorXd theta(na + nb);
  int iter = 0;
  if (opts.on_iteration) opts.on_iteration(0, -d.loglik);
  for (;; ++iter) {
    fit.max_score = d.score.size() > 0 ? d.score.cwiseAbs().maxCoeff() : 0.0;
    if (fit.max_score < opts.score_tol) {
      fit.converged = true;
      break;
    }
    if (iter >= opts.max_iter) {
      fit.message = "iteration limit reached";
      break;
    }

    theta << alpha, beta;
    const Eigen::VectorXd delta = newton_direction(d.hessian, d.score);
    const double nll_old = -d.loglik;
    const double slack = 1e-12 * std::max(1.0, std::abs(nll_old));

    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd trial;
    for (int h = 0; h <= opts.max_halvings; ++h, step *= 0.5) {
      trial = theta + step * delta;
      const double nll = detail::neg_loglik_unchecked(trial.head(na), trial.tail(nb), data,
                                                      index, link);
      if (std::isfinite(nll) && nll <= nll_old + slack) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      fit.message = "step-halving failed to decrease the negative log-likelihood";
      break;
    }
    if (trial.size() > 0 && trial.cwiseAbs().maxCoeff() > opts.bound) {
      Eigen::Index where = 0;
      trial.cwiseAbs().maxCoeff(&where);
      throw SeparationError(
          "parameter " + std::string(where < na ? "alpha[" : "beta[") +
          std::to_string(where < na ? where : where - na) + "] exceeded bound " +
          std::to_string(opts.bound) + "; the data may be separated");
    }
    alpha = trial.head(na);
    beta = trial.tail(nb);
    const double ll_old = d.loglik;
    d = derivatives(alpha, beta, data, index, link);
    if (opts.on_iteration) opts.on_iteration(iter + 1, -d.loglik);
    const double rel = std::abs(d.loglik - ll_old) / std::max(1.0, std::abs(ll_old));
    if (step == 1.0 && rel < opts.ll_tol) {
      fit.max_score = d.score.size() > 0 ? d.score.cwiseAbs().maxCoeff() : 0.0;
      fit.converged = true;
      ++iter;
      break;
    }
  }

  fit.iterations = iter;
  fit.alpha = std::move(alpha);
  fit.beta = std::move(beta);
  fit.loglik = d.loglik;
  try {
    Variance v = variance(d.hessian);
    fit.alpha_var = std::move(v.alpha_var);
    fit.beta_cov = std::move(v.beta_cov);
  } catch (const SingularHessianError&) {
    if (fit.converged) throw;
    fit.alpha_var = Eigen::VectorXd::Constant(na, std::numeric_limits<double>::quiet_NaN());
    fit.beta_cov = Eigen::MatrixXd::Constant(nb, nb, std::numeric_limits<double>::quiet_NaN());
  }
  return fit;
}

inline CpmFit fit_cpm(const Dataset& data, LinkFamily link, const FitOptions& opts = {}) {
  validate(data);
  return fit_cpm(data, index_outcomes(data.y), link, opts);
}

}  // namespace cpmbig
