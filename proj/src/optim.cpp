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

#include "dvtts/optim.hpp"

#include <cmath>

#include "dvtts/errors.hpp"

namespace dvtts {

void round_to_f32(Tensor& t) {
  for (Scalar& v : t.storage()) v = static_cast<Scalar>(static_cast<float>(v));
}

Adam::Adam(std::vector<Parameter*> params, Options opt) : params_(std::move(params)), opt_(opt) {
  if (!(opt_.lr > 0)) throw ConfigError("learning rate must be > 0");
  for (Parameter* p : params_) {
    round_to_f32(p->value);
    m_.emplace_back(p->value.shape(), 0);
    v_.emplace_back(p->value.shape(), 0);
  }
}

void Adam::step(double grad_scale) {
  ++steps_;
  const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    if (!p.grad.same_shape(p.value)) p.zero_grad();
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j] * grad_scale;
      m[j] = static_cast<float>(opt_.beta1 * m[j] + (1 - opt_.beta1) * g);
      v[j] = static_cast<float>(opt_.beta2 * v[j] + (1 - opt_.beta2) * g * g);
      const double update = opt_.lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + opt_.eps);
      p.value[j] = static_cast<float>(p.value[j] - update);
    }
    ensure_finite(p.value, p.name.c_str());
    p.zero_grad();
  }
}

}  // namespace dvtts
