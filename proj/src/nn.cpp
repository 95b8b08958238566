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

#include "dvtts/nn.hpp"

#include <cmath>

#include "dvtts/errors.hpp"

namespace dvtts {

Parameter& ParamStore::add(std::string name, Tensor init) {
  if (index_.count(name)) throw ConfigError("duplicate parameter name " + name);
  index_.emplace(name, params_.size());
  params_.emplace_back(std::move(name), std::move(init));
  return params_.back();
}

Parameter& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter " + name);
  return params_[it->second];
}

const Parameter& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter " + name);
  return params_[it->second];
}

std::vector<Parameter*> ParamStore::all() {
  std::vector<Parameter*> out;
  for (Parameter& p : params_) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> ParamStore::all() const {
  std::vector<const Parameter*> out;
  for (const Parameter& p : params_) out.push_back(&p);
  return out;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += p.value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (Parameter& p : params_) p.zero_grad();
}

Tensor normal_tensor(std::mt19937_64& rng, std::vector<std::size_t> shape, double stddev) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> n(0.0, stddev);
  for (Scalar& v : t.storage()) v = n(rng);
  return t;
}

Linear::Linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, std::mt19937_64& rng)
    : w(&store.add(name + ".w", normal_tensor(rng, {in, out}, 1.0 / std::sqrt(static_cast<double>(in))))),
      b(&store.add(name + ".b", Tensor::matrix(1, out))) {}

Var Linear::operator()(Tape& tape, const Var& x) const {
  return ops::add_row(ops::matmul(x, tape.param(*w)), tape.param(*b));
}

Conv1d::Conv1d(ParamStore& store, const std::string& name, std::size_t kernel, std::size_t in, std::size_t out,
               std::mt19937_64& rng)
    : w(&store.add(name + ".w",
                   normal_tensor(rng, {kernel, in, out}, 1.0 / std::sqrt(static_cast<double>(kernel * in))))),
      b(&store.add(name + ".b", Tensor::matrix(1, out))) {}

Var Conv1d::operator()(Tape& tape, const Var& x) const {
  return ops::conv1d(x, tape.param(*w), tape.param(*b));
}

LayerNorm::LayerNorm(ParamStore& store, const std::string& name, std::size_t dim)
    : gamma(&store.add(name + ".gamma", Tensor::matrix(1, dim, 1.0))),
      beta(&store.add(name + ".beta", Tensor::matrix(1, dim))) {}

Var LayerNorm::operator()(Tape& tape, const Var& x) const {
  return ops::layer_norm(x, tape.param(*gamma), tape.param(*beta));
}

std::vector<std::uint8_t> prefix_mask(std::size_t real, std::size_t length) {
  std::vector<std::uint8_t> m(length, 0);
  for (std::size_t i = 0; i < real && i < length; ++i) m[i] = 1;
  return m;
}

std::vector<std::uint8_t> key_mask(std::span<const std::uint8_t> keys, std::size_t rows) {
  std::vector<std::uint8_t> m;
  m.reserve(rows * keys.size());
  for (std::size_t r = 0; r < rows; ++r) m.insert(m.end(), keys.begin(), keys.end());
  return m;
}

}  // namespace dvtts
