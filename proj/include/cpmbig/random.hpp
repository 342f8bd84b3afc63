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

#include <cstdint>
#include <random>

namespace cpmbig {

using Rng = std::mt19937_64;

/// Named sub-streams of one master seed, so that e.g. partitioning and
/// binning never share draws.
enum class Stream : std::uint32_t {
  partition = 1,
  binning = 2,
  simulate_predictors = 3,
  simulate_residuals = 4,
  monte_carlo = 5,
  bench = 6,
};

inline Rng make_stream(std::uint64_t master, Stream stream, std::uint32_t replicate = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(master & 0xffffffffu),
                    static_cast<std::uint32_t>(master >> 32), static_cast<std::uint32_t>(stream),
                    replicate};
  return Rng(seq);
}

}  // namespace cpmbig
