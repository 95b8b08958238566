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
#include <deque>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dvtts/autodiff.hpp"

namespace dvtts {

// Owns every learnable tensor of a model. Element addresses are stable, so
// layers keep raw Parameter pointers.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;

  Parameter& add(std::string name, Tensor init);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  // Creation order.
  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  void zero_grad();

 private:
  std::deque<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

Tensor normal_tensor(std::mt19937_64& rng, std::vector<std::size_t> shape, double stddev);

struct Linear {
  Parameter* w = nullptr;  // in x out
  Parameter* b = nullptr;  // 1 x out

  Linear() = default;
  Linear(ParamStore& store, const std::string& name, std::size_t in, std::size_t out, std::mt19937_64& rng);
  Var operator()(Tape& tape, const Var& x) const;
  std::size_t in() const { return w->value.rows(); }
  std::size_t out() const { return w->value.cols(); }
};

struct Conv1d {
  Parameter* w = nullptr;  // K x Cin x Cout
  Parameter* b = nullptr;  // 1 x Cout

  Conv1d() = default;
  Conv1d(ParamStore& store, const std::string& name, std::size_t kernel, std::size_t in, std::size_t out,
         std::mt19937_64& rng);
  Var operator()(Tape& tape, const Var& x) const;
};

struct LayerNorm {
  Parameter* gamma = nullptr;
  Parameter* beta = nullptr;

  LayerNorm() = default;
  LayerNorm(ParamStore& store, const std::string& name, std::size_t dim);
  Var operator()(Tape& tape, const Var& x) const;
};

// Row mask for a sequence of `length` rows where the first `real` are kept.
std::vector<std::uint8_t> prefix_mask(std::size_t real, std::size_t length);
// rows x cols softmax mask that excludes columns whose key_mask entry is 0.
std::vector<std::uint8_t> key_mask(std::span<const std::uint8_t> keys, std::size_t rows);

}  // namespace dvtts
