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

// Multinomial likelihood of the cumulative probability model. Observation i
// in category c contributes
//
//   P_i = F(alpha_c - eta_i) - F(alpha_{c-1} - eta_i),   eta_i = beta' x_i,
//
// with alpha_{-1} = -inf and alpha_{M-1} = +inf. Each P_i touches at most two
// adjacent alphas, which makes the alpha-alpha Hessian block tridiagonal.

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "cpmbig/dataset.hpp"
#include "cpmbig/link.hpp"

namespace cpmbig {

/// Hessian of the log-likelihood over (alpha, beta), kept in blocks:
///
///   [ tridiag(alpha_diag, alpha_offdiag)   cross      ]
///   [ cross'                               beta_block ]
struct StructuredHessian {
  Eigen::VectorXd alpha_diag;     // M-1
  Eigen::VectorXd alpha_offdiag;  // M-2
  Eigen::MatrixXd cross;          // (M-1) x p
  Eigen::MatrixXd beta_block;     // p x p

  Eigen::Index alphas() const { return alpha_diag.size(); }
  Eigen::Index betas() const { return beta_block.rows(); }
  Eigen::Index dimension() const { return alphas() + betas(); }

  /// Dense (M-1+p)^2 copy. Meant for checks on small problems only.
  Eigen::MatrixXd to_dense() const {
    const Eigen::Index na = alphas();
    const Eigen::Index nb = betas();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(na + nb, na + nb);
    for (Eigen::Index j = 0; j < na; ++j) H(j, j) = alpha_diag(j);
    for (Eigen::Index j = 0; j + 1 < na; ++j) {
      H(j, j + 1) = alpha_offdiag(j);
      H(j + 1, j) = alpha_offdiag(j);
    }
    H.topRightCorner(na, nb) = cross;
    H.bottomLeftCorner(nb, na) = cross.transpose();
    H.bottomRightCorner(nb, nb) = beta_block;
    return H;
  }
};

struct Derivatives {
  double loglik = 0.0;
  Eigen::VectorXd score;  // alpha entries first, then beta
  StructuredHessian hessian;
};

namespace detail {

inline constexpr double kInfeasible = std::numeric_limits<double>::infinity();

// Probability of one observation's category and the pieces of its
// derivatives: upper = F'(alpha_c - eta), lower = F'(alpha_{c-1} - eta) and
// their derivatives. Missing ends contribute zeros.
struct CategoryTerm {
  double prob = 0.0;
  double upper = 0.0;
  double lower = 0.0;
  double upper_d = 0.0;
  double lower_d = 0.0;
};

inline CategoryTerm category_term(LinkFamily link, const Eigen::VectorXd& alpha, int c,
                                  double eta) {
  const Eigen::Index last = alpha.size();  // index of the top category
  CategoryTerm t;
  if (c == 0) {
    const LinkValues hi = link_eval(link, alpha(0) - eta);
    t.prob = hi.cdf;
    t.upper = hi.pdf;
    t.upper_d = hi.pdf_deriv;
  } else if (c == last) {
    const LinkValues lo = link_eval(link, alpha(last - 1) - eta);
    t.prob = lo.ccdf;
    t.lower = lo.pdf;
    t.lower_d = lo.pdf_deriv;
  } else {
    const double u_hi = alpha(c) - eta;
    const double u_lo = alpha(c - 1) - eta;
    if (!(u_hi > u_lo)) {
      t.prob = 0.0;
      return t;
    }
    const LinkValues hi = link_eval(link, u_hi);
    const LinkValues lo = link_eval(link, u_lo);
    // Subtract on whichever side keeps the most significant digits.
    t.prob = u_lo > 0.0 ? lo.ccdf - hi.ccdf : hi.cdf - lo.cdf;
    t.upper = hi.pdf;
    t.lower = lo.pdf;
    t.upper_d = hi.pdf_deriv;
    t.lower_d = lo.pdf_deriv;
  }
  return t;
}

/// Negative log-likelihood without precondition checks; +inf when any
/// category probability is not positive.
inline double neg_loglik_unchecked(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                                   const Dataset& data, const OutcomeIndex& index,
                                   LinkFamily link) {
  const Eigen::VectorXd eta = data.X * beta;
  double total = 0.0;
  for (std::size_t i = 0; i < index.rank.size(); ++i) {
    const CategoryTerm t =
        category_term(link, alpha, index.rank[i], eta(static_cast<Eigen::Index>(i)));
    if (!(t.prob > 0.0)) return kInfeasible;
    total -= std::log(t.prob);
  }
  return total;
}

inline void check_parameters(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                             const Dataset& data, const OutcomeIndex& index) {
  const auto m = static_cast<Eigen::Index>(index.categories());
  if (alpha.size() != m - 1) {
    throw std::invalid_argument("alpha has length " + std::to_string(alpha.size()) +
                                ", expected " + std::to_string(m - 1));
  }
  if (beta.size() != data.X.cols()) {
    throw std::invalid_argument("beta has length " + std::to_string(beta.size()) +
                                ", expected " + std::to_string(data.X.cols()));
  }
  if (index.rank.size() != data.size()) {
    throw std::invalid_argument("outcome index does not match the dataset");
  }
  for (Eigen::Index j = 0; j + 1 < alpha.size(); ++j) {
    if (!(alpha(j) < alpha(j + 1))) {
      throw std::invalid_argument("alpha must be strictly increasing (violated at " +
                                  std::to_string(j) + ")");
    }
  }
}

}  // namespace detail

/// Negative log-likelihood. Requires a strictly increasing alpha of length
/// M-1; returns +inf if some observation has no probability mass.
inline double neg_loglik(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                         const Dataset& data, const OutcomeIndex& index, LinkFamily link) {
  detail::check_parameters(alpha, beta, data, index);
  return detail::neg_loglik_unchecked(alpha, beta, data, index, link);
}

/// Log-likelihood, score and structured Hessian at (alpha, beta). The
/// parameters must be feasible (finite likelihood); otherwise loglik is -inf
/// and the other members are left empty.
inline Derivatives derivatives(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                               const Dataset& data, const OutcomeIndex& index,
                               LinkFamily link) {
  const Eigen::Index na = alpha.size();
  const Eigen::Index nb = beta.size();
  const auto n = static_cast<Eigen::Index>(data.size());

  Derivatives out;
  const Eigen::VectorXd eta = data.X * beta;

  Eigen::VectorXd g_alpha = Eigen::VectorXd::Zero(na);
  Eigen::VectorXd h_diag = Eigen::VectorXd::Zero(na);
  Eigen::VectorXd h_off = Eigen::VectorXd::Zero(na > 0 ? na - 1 : 0);
  // Per-observation coefficients feeding the beta parts.
  Eigen::VectorXd w_score(n), w_upper(n), w_lower(n), w_beta(n);

  double loglik = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = index.rank[static_cast<std::size_t>(i)];
    const detail::CategoryTerm t = detail::category_term(link, alpha, c, eta(i));
    if (!(t.prob > 0.0)) {
      out.loglik = -detail::kInfeasible;
      return out;
    }
    loglik += std::log(t.prob);
    const double inv = 1.0 / t.prob;
    const double a = t.upper * inv;
    const double b = t.lower * inv;
    const double ad = t.upper_d * inv;
    const double bd = t.lower_d * inv;
    const double diff = a - b;
    if (c < na) {
      g_alpha(c) += a;
      h_diag(c) += ad - a * a;
    }
    if (c > 0) {
      g_alpha(c - 1) -= b;
      h_diag(c - 1) += -bd - b * b;
    }
    if (c > 0 && c < na) h_off(c - 1) += a * b;
    w_score(i) = -diff;
    w_upper(i) = -ad + a * diff;
    w_lower(i) = bd - b * diff;
    w_beta(i) = (ad - bd) - diff * diff;
  }

  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(na, nb);
  for (Eigen::Index k = 0; k < nb; ++k) {
    auto col = cross.col(k);
    const auto x = data.X.col(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = index.rank[static_cast<std::size_t>(i)];
      if (c < na) col(c) += w_upper(i) * x(i);
      if (c > 0) col(c - 1) += w_lower(i) * x(i);
    }
  }

  out.loglik = loglik;
  out.score.resize(na + nb);
  out.score.head(na) = g_alpha;
  out.score.tail(nb) = data.X.transpose() * w_score;
  out.hessian.alpha_diag = std::move(h_diag);
  out.hessian.alpha_offdiag = std::move(h_off);
  out.hessian.cross = std::move(cross);
  out.hessian.beta_block = data.X.transpose() * w_beta.asDiagonal() * data.X;
  return out;
}

}  // namespace cpmbig
