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
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace dvtts {

using Scalar = double;

// Dense row-major array. Model code only uses rank 1-3; a rank-2 tensor is
// a rows x cols matrix, and for higher ranks cols() flattens the trailing
// dimensions.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, Scalar fill = 0);
  Tensor(std::vector<std::size_t> shape, std::vector<Scalar> data);

  static Tensor matrix(std::size_t rows, std::size_t cols, Scalar fill = 0);
  static Tensor row(std::vector<Scalar> values);
  static Tensor from_rows(std::initializer_list<std::initializer_list<Scalar>> rows);
  static Tensor identity(std::size_t n);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const { return cols_; }

  Scalar& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Scalar& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  Scalar& operator[](std::size_t i) { return data_[i]; }
  const Scalar& operator[](std::size_t i) const { return data_[i]; }

  std::span<Scalar> data() { return data_; }
  std::span<const Scalar> data() const { return data_; }
  std::vector<Scalar>& storage() { return data_; }
  const std::vector<Scalar>& storage() const { return data_; }

  std::span<const Scalar> row_span(std::size_t r) const {
    return std::span<const Scalar>(data_).subspan(r * cols_, cols_);
  }
  std::span<Scalar> row_span(std::size_t r) {
    return std::span<Scalar>(data_).subspan(r * cols_, cols_);
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  // Bitwise equality of shape and data.
  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<Scalar> data_;
  std::size_t cols_ = 0;
};

std::string shape_string(const std::vector<std::size_t>& shape);

// Throws NumericError naming `where` if any entry is NaN or infinite.
void ensure_finite(const Tensor& t, const char* where);

// Plain (untracked) kernels shared by the tape ops and by inference code.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // a^T b
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a b^T
Tensor transpose(const Tensor& a);
void add_inplace(Tensor& dst, const Tensor& src);
void axpy_inplace(Tensor& dst, Scalar alpha, const Tensor& src);
Scalar max_abs_diff(const Tensor& a, const Tensor& b);
Scalar mean_squared_error(const Tensor& a, const Tensor& b);

// Learnable tensor with its accumulated gradient.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value);

  std::string name;
  Tensor value;
  Tensor grad;

  void zero_grad();
};

}  // namespace dvtts
