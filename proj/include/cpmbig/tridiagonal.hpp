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

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace cpmbig {

/// Cholesky factor A = L L' of a symmetric positive definite tridiagonal
/// matrix. L is lower bidiagonal, so storage and every operation are O(n).
class TridiagonalCholesky {
 public:
  TridiagonalCholesky() = default;

  /// Factors the matrix with main diagonal `diag` (n) and off-diagonal
  /// `off` (n - 1). Returns false when a pivot is not strictly positive;
  /// `failed_pivot()` then names its 0-based row.
  bool factor(std::span<const double> diag, std::span<const double> off) {
    const std::size_t n = diag.size();
    assert(n == 0 || off.size() + 1 == n);
    l_.assign(n, 0.0);
    m_.assign(n > 0 ? n - 1 : 0, 0.0);
    failed_ = -1;
    double carry = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double pivot = diag[i] - carry;
      if (!(pivot > 0.0) || !std::isfinite(pivot)) {
        failed_ = static_cast<long>(i);
        return false;
      }
      l_[i] = std::sqrt(pivot);
      if (i + 1 < n) {
        m_[i] = off[i] / l_[i];
        carry = m_[i] * m_[i];
      }
    }
    return true;
  }

  std::size_t size() const { return l_.size(); }
  long failed_pivot() const { return failed_; }

  /// Overwrites b with A^{-1} b.
  void solve_in_place(std::span<double> b) const {
    const std::size_t n = l_.size();
    assert(b.size() == n);
    if (n == 0) return;
    b[0] /= l_[0];
    for (std::size_t i = 1; i < n; ++i) b[i] = (b[i] - m_[i - 1] * b[i - 1]) / l_[i];
    b[n - 1] /= l_[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) b[i] = (b[i] - m_[i] * b[i + 1]) / l_[i];
  }

  /// Solves every column of `B` in place.
  void solve_in_place(Eigen::MatrixXd& B) const {
    assert(static_cast<std::size_t>(B.rows()) == l_.size());
    for (Eigen::Index c = 0; c < B.cols(); ++c) {
      solve_in_place(std::span<double>(B.col(c).data(), static_cast<std::size_t>(B.rows())));
    }
  }

  /// Diagonal of A^{-1} by the backward recursion on L'
  ///   S(n,n)   = 1 / l_n^2
  ///   S(i,i+1) = -(m_i / l_i) S(i+1,i+1)
  ///   S(i,i)   = 1 / l_i^2 - (m_i / l_i) S(i+1,i)
  std::vector<double> inverse_diagonal() const {
    const std::size_t n = l_.size();
    std::vector<double> s(n, 0.0);
    if (n == 0) return s;
    s[n - 1] = 1.0 / (l_[n - 1] * l_[n - 1]);
    for (std::size_t i = n - 1; i-- > 0;) {
      const double ratio = m_[i] / l_[i];
      const double upper = -ratio * s[i + 1];
      s[i] = 1.0 / (l_[i] * l_[i]) - ratio * upper;
    }
    return s;
  }

 private:
  std::vector<double> l_;  // diagonal of L
  std::vector<double> m_;  // sub-diagonal of L
  long failed_ = -1;
};

}  // namespace cpmbig
