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

#include <cstdint>
#include <vector>

#include "dvtts/nn.hpp"

namespace dvtts {

// Adam with bias correction. Parameters and moments are rounded to f32
// after every update, so a checkpoint written as f32 resumes bit-exactly.
class Adam {
 public:
  struct Options {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam(std::vector<Parameter*> params, Options opt);

  // Applies the accumulated gradients scaled by `grad_scale`, then zeroes them.
  void step(double grad_scale = 1.0);

  std::uint64_t steps() const { return steps_; }
  void set_steps(std::uint64_t n) { steps_ = n; }
  std::vector<Tensor>& first_moments() { return m_; }
  std::vector<Tensor>& second_moments() { return v_; }
  const std::vector<Parameter*>& params() const { return params_; }

 private:
  std::vector<Parameter*> params_;
  Options opt_;
  std::vector<Tensor> m_, v_;
  std::uint64_t steps_ = 0;
};

// Rounds every entry to the nearest f32.
void round_to_f32(Tensor& t);

}  // namespace dvtts
