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

#include "dvtts/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <utility>

#include "dvtts/errors.hpp"

namespace dvtts {

namespace {

std::size_t checked_volume(const std::vector<std::size_t>& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must have rank >= 1");
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_string(shape));
    n *= d;
  }
  return n;
}

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got shape " + shape_string(t.shape()));
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, Scalar fill)
    : shape_(std::move(shape)), data_(checked_volume(shape_), fill), cols_(data_.size() / shape_[0]) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<Scalar> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (checked_volume(shape_) != data_.size()) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_string(shape_));
  }
  cols_ = data_.size() / shape_[0];
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, Scalar fill) {
  return Tensor({rows, cols}, fill);
}

Tensor Tensor::row(std::vector<Scalar> values) {
  const std::size_t n = values.size();
  return Tensor({1, n}, std::move(values));
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<Scalar>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<Scalar> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t = matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1;
  return t;
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](Scalar v) { return std::isfinite(v); });
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

void ensure_finite(const Tensor& t, const char* where) {
  if (!t.all_finite()) throw NumericError(std::string(where) + ": non-finite value");
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  Tensor out = Tensor::matrix(m, n);
  const Scalar* pa = a.data().data();
  const Scalar* pb = b.data().data();
  Scalar* po = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    Scalar* orow = po + i * n;
    const Scalar* arow = pa + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const Scalar av = arow[p];
      const Scalar* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_tn");
  require_matrix(b, "matmul_tn");
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  if (b.rows() != k) throw DimensionError("matmul_tn: row counts differ");
  Tensor out = Tensor::matrix(m, n);
  const Scalar* pa = a.data().data();
  const Scalar* pb = b.data().data();
  Scalar* po = out.data().data();
  for (std::size_t p = 0; p < k; ++p) {
    const Scalar* arow = pa + p * m;
    const Scalar* brow = pb + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const Scalar av = arow[i];
      Scalar* orow = po + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_nt");
  require_matrix(b, "matmul_nt");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k) throw DimensionError("matmul_nt: column counts differ");
  Tensor out = Tensor::matrix(m, n);
  const Scalar* pa = a.data().data();
  const Scalar* pb = b.data().data();
  Scalar* po = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    const Scalar* arow = pa + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const Scalar* brow = pb + j * k;
      Scalar acc = 0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      po[i * n + j] = acc;
    }
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  require_matrix(a, "transpose");
  Tensor out = Tensor::matrix(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

void add_inplace(Tensor& dst, const Tensor& src) {
  if (dst.size() != src.size()) throw DimensionError("add_inplace: size mismatch");
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

void axpy_inplace(Tensor& dst, Scalar alpha, const Tensor& src) {
  if (dst.size() != src.size()) throw DimensionError("axpy_inplace: size mismatch");
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += alpha * s[i];
}

Scalar max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) throw DimensionError("max_abs_diff: size mismatch");
  Scalar m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Scalar mean_squared_error(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("mean_squared_error: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  Scalar acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Scalar d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<Scalar>(a.size());
}

Parameter::Parameter(std::string n, Tensor v)
    : name(std::move(n)), value(std::move(v)), grad(value.shape(), 0) {}

void Parameter::zero_grad() {
  if (!grad.same_shape(value)) grad = Tensor(value.shape(), 0);
  std::fill(grad.storage().begin(), grad.storage().end(), 0);
}

}  // namespace dvtts
