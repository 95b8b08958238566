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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dvtts/tensor.hpp"

namespace dvtts {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
// owning tape is alive.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  // Gradient accumulated by Tape::backward. Empty tensor when the node was
  // never reached or does not require a gradient.
  const Tensor& grad() const;
  bool requires_grad() const;

  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode recorder. Every op appends one node holding its forward value
// and, when any input needs a gradient, a closure that pushes the output
// gradient back to its inputs. backward() replays the closures in reverse
// creation order, then adds the leaf gradients into the bound Parameters.
class Tape {
 public:
  // Receives the node's own forward value and its accumulated gradient.
  using Backward = std::function<void(Tape&, const Tensor& out, const Tensor& out_grad)>;

  Tape() = default;
  // With tracking off, parameters are bound as constants and no backward
  // closures are kept; used for inference.
  explicit Tape(bool track_gradients) : track_(track_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var input(Tensor value);
  // Binds a parameter as a differentiable leaf. Binding the same parameter
  // twice returns the same Var.
  Var param(Parameter& p);

  Var record(Tensor value, std::span<const Var> parents, Backward fn);
  Var record(Tensor value, std::initializer_list<Var> parents, Backward fn) {
    return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()), std::move(fn));
  }

  void accumulate(const Var& v, const Tensor& g);
  void backward(const Var& root);

  const Tensor& value(const Var& v) const { return nodes_[v.id()].value; }
  const Tensor& grad(const Var& v) const { return nodes_[v.id()].grad; }
  bool requires_grad(const Var& v) const { return nodes_[v.id()].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Backward backward;
    Parameter* param = nullptr;
  };

  void check(const Var& v) const;

  bool track_ = true;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> bound_;
};

// Sum whose result does not depend on the order of the inputs: the values
// are sorted before accumulation.
Scalar order_independent_sum(std::vector<Scalar> values);

namespace ops {

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, Scalar s);
// x[m x n] + row[1 x n] broadcast over rows.
Var add_row(const Var& x, const Var& row);
// Multiplies row r by keep[r] (0 or 1).
Var mask_rows(const Var& x, std::span<const std::uint8_t> keep);

// Row-wise softmax with max subtraction. `mask` is either empty or rows*cols
// flags where 0 marks an excluded entry; excluded entries come out exactly 0.
Var softmax_rows(const Var& x, std::span<const std::uint8_t> mask = {});
// Per-row layer normalisation followed by gamma/beta ([1 x n] each).
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, Scalar eps = 1e-5);
// Same-padded 1-D convolution over rows. x: [T x Cin], w: [K x Cin x Cout]
// with K odd, bias: [1 x Cout].
Var conv1d(const Var& x, const Var& w, const Var& bias);

Var relu(const Var& x);
Var silu(const Var& x);
Var tanh(const Var& x);
Var exp(const Var& x);
Var square(const Var& x);

Var transpose(const Var& x);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(const Var& x, std::size_t begin, std::size_t end);
Var slice_rows(const Var& x, std::size_t begin, std::size_t end);
// Appends zero rows so the result has `rows` rows.
Var pad_rows(const Var& x, std::size_t rows);
Var gather_rows(const Var& table, std::span<const std::size_t> index);
// Average of adjacent row pairs; row count must be even.
Var avg_pool2(const Var& x);
// Each row repeated twice.
Var upsample2(const Var& x);

Var sum(const Var& x);
Var mean(const Var& x);
Var mse(const Var& a, const Var& b);
Var l2_normalize_rows(const Var& x);
// [1 x 2n]: per-column mean followed by per-column sqrt(variance + eps),
// accumulated order-independently so row permutations give identical bits.
Var column_moments(const Var& x, Scalar eps = 1e-5);

}  // namespace ops

using TapeFunction = std::function<Var(Tape&, std::span<const Var>)>;

// Max over all input entries of |analytic - central difference| /
// max(1, |analytic|) for the summed output of `fn`.
Scalar grad_check(const TapeFunction& fn, const std::vector<Tensor>& inputs, Scalar epsilon);

// Same check with respect to the entries of `params`. `fn` must bind the
// parameters through Tape::param.
Scalar grad_check_parameters(const std::function<Var(Tape&)>& fn, std::span<Parameter* const> params,
                             Scalar epsilon);

}  // namespace dvtts
