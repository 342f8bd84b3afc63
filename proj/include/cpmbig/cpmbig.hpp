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


// Everything in one include.

#pragma once

#include "cpmbig/bench.hpp"
#include "cpmbig/csv.hpp"
#include "cpmbig/dataset.hpp"
#include "cpmbig/discretize.hpp"
#include "cpmbig/divide_combine.hpp"
#include "cpmbig/errors.hpp"
#include "cpmbig/fit.hpp"
#include "cpmbig/inference.hpp"
#include "cpmbig/likelihood.hpp"
#include "cpmbig/link.hpp"
#include "cpmbig/random.hpp"
#include "cpmbig/run.hpp"
#include "cpmbig/simulate.hpp"
#include "cpmbig/tridiagonal.hpp"
