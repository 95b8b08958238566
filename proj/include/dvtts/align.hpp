// Copyright 2026 The dvtts Authors
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

#include <vector>

#include "dvtts/tensor.hpp"

namespace dvtts {

struct AlignmentResult {
  std::vector<int> assignment;  // phoneme index per frame
  std::vector<int> durations;   // frames per phoneme
  double log_likelihood = 0;
};

// Best monotonic, surjective frame -> phoneme assignment under a P x F
// log-prior, by dynamic programming. On ties the path stays on the current
// phoneme rather than advancing (scanning frames forward).
AlignmentResult mas(const Tensor& log_prior);

// Exhaustive search with the same objective and tie-break. P <= 6, F <= 10.
AlignmentResult brute_force_align(const Tensor& log_prior);

// entry[p, f] = -0.5 * ||target[f] - mu[p]||^2
Tensor gaussian_log_prior(const Tensor& mu, const Tensor& target);

// Throws InvalidTargetError unless every duration is >= 1.
void validate_durations(const std::vector<int>& durations, std::size_t phonemes);

}  // namespace dvtts
