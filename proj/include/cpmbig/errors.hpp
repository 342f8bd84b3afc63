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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cpmbig {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data violates a structural requirement (non-finite values, shape).
class InvalidDataError : public Error {
 public:
  using Error::Error;
};

/// The outcome has a single distinct value; no ordinal model exists.
class DegenerateOutcomeError : public Error {
 public:
  using Error::Error;
};

/// A parameter estimate drifted past the configured magnitude bound.
class SeparationError : public Error {
 public:
  using Error::Error;
};

/// Cholesky factorization of a Hessian block failed.
class SingularHessianError : public Error {
 public:
  SingularHessianError(std::string block, const std::string& what)
      : Error(what), block_(std::move(block)) {}
  const std::string& block() const noexcept { return block_; }

 private:
  std::string block_;
};

/// Subset alpha grids do not line up with the global outcome grid.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// A subset fit did not converge; the combine step refuses to proceed.
class UnconvergedSubsetError : public Error {
 public:
  UnconvergedSubsetError(std::size_t subset, const std::string& what)
      : Error(what), subset_(subset) {}
  std::size_t subset() const noexcept { return subset_; }

 private:
  std::size_t subset_;
};

/// A predictor is constant within some subset, so its coefficient has no
/// estimate there.
class InestimableCoefficientError : public Error {
 public:
  InestimableCoefficientError(std::size_t column, const std::string& what)
      : Error(what), column_(column) {}
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

/// CSV ingestion failures (missing file, missing column, no usable rows).
class IngestError : public Error {
 public:
  using Error::Error;
};

}  // namespace cpmbig
