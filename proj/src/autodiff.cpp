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

#include "dvtts/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "dvtts/errors.hpp"

namespace dvtts {

const Tensor& Var::value() const { return tape_->value(*this); }
const Tensor& Var::grad() const { return tape_->grad(*this); }
bool Var::requires_grad() const { return tape_->requires_grad(*this); }

void Tape::check(const Var& v) const {
  if (v.tape() != this || v.id() >= nodes_.size()) throw Error("Var does not belong to this tape");
}

Var Tape::constant(Tensor value) {
  ensure_finite(value, "constant");
  nodes_.push_back(Node{std::move(value), {}, false, {}, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::input(Tensor value) {
  ensure_finite(value, "input");
  nodes_.push_back(Node{std::move(value), {}, true, {}, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
  if (auto it = bound_.find(&p); it != bound_.end()) return Var(this, it->second);
  ensure_finite(p.value, p.name.c_str());
  nodes_.push_back(Node{p.value, {}, track_, {}, track_ ? &p : nullptr});
  bound_.emplace(&p, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::span<const Var> parents, Backward fn) {
  bool needs = false;
  for (const Var& p : parents) {
    check(p);
    needs = needs || nodes_[p.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(fn) : Backward{}, nullptr});
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(const Var& v, const Tensor& g) {
  Node& n = nodes_[v.id()];
  if (!n.requires_grad) return;
  if (n.grad.empty()) {
    n.grad = g;
    if (!n.grad.same_shape(n.value)) throw DimensionError("accumulate: gradient shape mismatch");
    return;
  }
  add_inplace(n.grad, g);
}

void Tape::backward(const Var& root) {
  check(root);
  if (nodes_[root.id()].value.size() != 1) throw DimensionError("backward: root must be a scalar");
  if (!nodes_[root.id()].requires_grad) return;
  accumulate(root, Tensor(nodes_[root.id()].value.shape(), 1));
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty() || !n.backward) continue;
    // Closures only touch earlier nodes, so `n` is not invalidated.
    n.backward(*this, n.value, n.grad);
  }
  for (Node& n : nodes_) {
    if (n.param == nullptr || n.grad.empty()) continue;
    if (!n.param->grad.same_shape(n.param->value)) n.param->zero_grad();
    add_inplace(n.param->grad, n.grad);
  }
}

Scalar order_independent_sum(std::vector<Scalar> values) {
  std::sort(values.begin(), values.end());
  Scalar acc = 0;
  for (Scalar v : values) acc += v;
  return acc;
}

namespace ops {

namespace {

Tape& tape_of(const Var& v) {
  if (!v.valid()) throw Error("operation on an unbound Var");
  return *v.tape();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
  }
}

Var finish(Tape& tape, Tensor value, std::initializer_list<Var> parents, Tape::Backward fn, const char* op) {
  ensure_finite(value, op);
  return tape.record(std::move(value), parents, std::move(fn));
}

Tensor negated(Tensor t) {
  for (Scalar& v : t.storage()) v = -v;
  return t;
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  Tensor out = dvtts::matmul(a.value(), b.value());
  return finish(t, std::move(out), {a, b},
                [a, b](Tape& tp, const Tensor&, const Tensor& g) {
                  if (a.requires_grad()) tp.accumulate(a, matmul_nt(g, b.value()));
                  if (b.requires_grad()) tp.accumulate(b, matmul_tn(a.value(), g));
                },
                "matmul");
}

Var add(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  add_inplace(out, b.value());
  return finish(t, std::move(out), {a, b},
                [a, b](Tape& tp, const Tensor&, const Tensor& g) {
                  tp.accumulate(a, g);
                  tp.accumulate(b, g);
                },
                "add");
}

Var sub(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  axpy_inplace(out, -1, b.value());
  return finish(t, std::move(out), {a, b},
                [a, b](Tape& tp, const Tensor&, const Tensor& g) {
                  tp.accumulate(a, g);
                  if (b.requires_grad()) tp.accumulate(b, negated(g));
                },
                "sub");
}

Var mul(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return finish(t, std::move(out), {a, b},
                [a, b](Tape& tp, const Tensor&, const Tensor& g) {
                  if (a.requires_grad()) {
                    Tensor ga = g;
                    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= b.value()[i];
                    tp.accumulate(a, ga);
                  }
                  if (b.requires_grad()) {
                    Tensor gb = g;
                    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] *= a.value()[i];
                    tp.accumulate(b, gb);
                  }
                },
                "mul");
}

Var scale(const Var& a, Scalar s) {
  Tape& t = tape_of(a);
  Tensor out = a.value();
  for (Scalar& v : out.storage()) v *= s;
  return finish(t, std::move(out), {a},
                [a, s](Tape& tp, const Tensor&, const Tensor& g) {
                  Tensor ga = g;
                  for (Scalar& v : ga.storage()) v *= s;
                  tp.accumulate(a, ga);
                },
                "scale");
}

Var add_row(const Var& x, const Var& row) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  const Tensor& rv = row.value();
  require_matrix(xv, "add_row");
  if (rv.size() != xv.cols()) {
    throw DimensionError("add_row: row of " + shape_string(rv.shape()) + " for " + shape_string(xv.shape()));
  }
  Tensor out = xv;
  const std::size_t n = xv.cols();
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t c = 0; c < n; ++c) out(r, c) += rv[c];
  return finish(t, std::move(out), {x, row},
                [x, row, n](Tape& tp, const Tensor&, const Tensor& g) {
                  tp.accumulate(x, g);
                  if (row.requires_grad()) {
                    Tensor gr(row.value().shape(), 0);
                    for (std::size_t r = 0; r < g.rows(); ++r)
                      for (std::size_t c = 0; c < n; ++c) gr[c] += g(r, c);
                    tp.accumulate(row, gr);
                  }
                },
                "add_row");
}

Var mask_rows(const Var& x, std::span<const std::uint8_t> keep) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  if (keep.size() != xv.rows()) throw DimensionError("mask_rows: mask length differs from row count");
  std::vector<std::uint8_t> k(keep.begin(), keep.end());
  Tensor out = xv;
  const std::size_t n = xv.cols();
  for (std::size_t r = 0; r < xv.rows(); ++r)
    if (!k[r])
      for (std::size_t c = 0; c < n; ++c) out(r, c) = 0;
  return finish(t, std::move(out), {x},
                [x, k = std::move(k), n](Tape& tp, const Tensor&, const Tensor& g) {
                  Tensor gx = g;
                  for (std::size_t r = 0; r < gx.rows(); ++r)
                    if (!k[r])
                      for (std::size_t c = 0; c < n; ++c) gx(r, c) = 0;
                  tp.accumulate(x, gx);
                },
                "mask_rows");
}

Var softmax_rows(const Var& x, std::span<const std::uint8_t> mask) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  require_matrix(xv, "softmax_rows");
  const std::size_t m = xv.rows(), n = xv.cols();
  if (!mask.empty() && mask.size() != m * n) throw DimensionError("softmax_rows: mask size mismatch");
  Tensor y = Tensor::matrix(m, n);
  for (std::size_t r = 0; r < m; ++r) {
    Scalar mx = -std::numeric_limits<Scalar>::infinity();
    for (std::size_t c = 0; c < n; ++c)
      if (mask.empty() || mask[r * n + c]) mx = std::max(mx, xv(r, c));
    if (mx == -std::numeric_limits<Scalar>::infinity()) {
      throw DegenerateRowError("softmax_rows: row " + std::to_string(r) + " is fully masked");
    }
    Scalar z = 0;
    for (std::size_t c = 0; c < n; ++c) {
      if (!mask.empty() && !mask[r * n + c]) continue;
      y(r, c) = std::exp(xv(r, c) - mx);
      z += y(r, c);
    }
    for (std::size_t c = 0; c < n; ++c) y(r, c) /= z;
  }
  return finish(t, std::move(y), {x},
                [x, m, n](Tape& tp, const Tensor& y, const Tensor& g) {
                  Tensor gx = Tensor::matrix(m, n);
                  for (std::size_t r = 0; r < m; ++r) {
                    Scalar dot = 0;
                    for (std::size_t c = 0; c < n; ++c) dot += g(r, c) * y(r, c);
                    for (std::size_t c = 0; c < n; ++c) gx(r, c) = y(r, c) * (g(r, c) - dot);
                  }
                  tp.accumulate(x, gx);
                },
                "softmax_rows");
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, Scalar eps) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  require_matrix(xv, "layer_norm");
  const std::size_t m = xv.rows(), n = xv.cols();
  if (gamma.value().size() != n || beta.value().size() != n) {
    throw DimensionError("layer_norm: affine parameters must have " + std::to_string(n) + " entries");
  }
  Tensor xhat = Tensor::matrix(m, n);
  std::vector<Scalar> inv_std(m);
  for (std::size_t r = 0; r < m; ++r) {
    Scalar mu = 0;
    for (std::size_t c = 0; c < n; ++c) mu += xv(r, c);
    mu /= static_cast<Scalar>(n);
    Scalar var = 0;
    for (std::size_t c = 0; c < n; ++c) var += (xv(r, c) - mu) * (xv(r, c) - mu);
    var /= static_cast<Scalar>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < n; ++c) xhat(r, c) = (xv(r, c) - mu) * inv_std[r];
  }
  Tensor out = xhat;
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out(r, c) = gv[c] * xhat(r, c) + bv[c];
  return finish(t, std::move(out), {x, gamma, beta},
                [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std), m, n](
                    Tape& tp, const Tensor&, const Tensor& g) {
                  const Tensor& gv = gamma.value();
                  if (gamma.requires_grad() || beta.requires_grad()) {
                    Tensor gg(gamma.value().shape(), 0);
                    Tensor gb(beta.value().shape(), 0);
                    for (std::size_t r = 0; r < m; ++r)
                      for (std::size_t c = 0; c < n; ++c) {
                        gg[c] += g(r, c) * xhat(r, c);
                        gb[c] += g(r, c);
                      }
                    tp.accumulate(gamma, gg);
                    tp.accumulate(beta, gb);
                  }
                  if (!x.requires_grad()) return;
                  Tensor gx = Tensor::matrix(m, n);
                  const Scalar inv_n = 1.0 / static_cast<Scalar>(n);
                  for (std::size_t r = 0; r < m; ++r) {
                    Scalar mean_d = 0, mean_dx = 0;
                    for (std::size_t c = 0; c < n; ++c) {
                      const Scalar d = g(r, c) * gv[c];
                      mean_d += d;
                      mean_dx += d * xhat(r, c);
                    }
                    mean_d *= inv_n;
                    mean_dx *= inv_n;
                    for (std::size_t c = 0; c < n; ++c) {
                      const Scalar d = g(r, c) * gv[c];
                      gx(r, c) = inv_std[r] * (d - mean_d - xhat(r, c) * mean_dx);
                    }
                  }
                  tp.accumulate(x, gx);
                },
                "layer_norm");
}

Var conv1d(const Var& x, const Var& w, const Var& bias) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  require_matrix(xv, "conv1d");
  if (wv.rank() != 3) throw DimensionError("conv1d: weight must be [K x Cin x Cout]");
  const std::size_t k = wv.shape()[0], cin = wv.shape()[1], cout = wv.shape()[2];
  const std::size_t frames = xv.rows();
  if (k % 2 == 0) throw DimensionError("conv1d: kernel size must be odd");
  if (xv.cols() != cin) {
    throw DimensionError("conv1d: input has " + std::to_string(xv.cols()) + " channels, kernel expects " +
                         std::to_string(cin));
  }
  if (bias.value().size() != cout) throw DimensionError("conv1d: bias size mismatch");
  const std::size_t half = k / 2;

  // im2col: column block j holds the input shifted by j - half frames.
  Tensor cols = Tensor::matrix(frames, k * cin);
  for (std::size_t f = 0; f < frames; ++f)
    for (std::size_t j = 0; j < k; ++j) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(f + j) - static_cast<std::ptrdiff_t>(half);
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(frames)) continue;
      std::copy_n(&xv(static_cast<std::size_t>(src), 0), cin, &cols(f, j * cin));
    }
  const Tensor wmat({k * cin, cout}, wv.storage());
  Tensor out = dvtts::matmul(cols, wmat);
  const Tensor& bv = bias.value();
  for (std::size_t f = 0; f < frames; ++f)
    for (std::size_t c = 0; c < cout; ++c) out(f, c) += bv[c];

  return finish(t, std::move(out), {x, w, bias},
                [x, w, bias, cols = std::move(cols), k, cin, cout, frames, half](Tape& tp, const Tensor&,
                                                                                  const Tensor& g) {
                  if (w.requires_grad()) {
                    Tensor gw = matmul_tn(cols, g);
                    tp.accumulate(w, Tensor(w.value().shape(), std::move(gw.storage())));
                  }
                  if (bias.requires_grad()) {
                    Tensor gb(bias.value().shape(), 0);
                    for (std::size_t f = 0; f < frames; ++f)
                      for (std::size_t c = 0; c < cout; ++c) gb[c] += g(f, c);
                    tp.accumulate(bias, gb);
                  }
                  if (!x.requires_grad()) return;
                  const Tensor wmat({k * cin, cout}, w.value().storage());
                  Tensor gcols = matmul_nt(g, wmat);
                  Tensor gx = Tensor::matrix(frames, cin);
                  for (std::size_t f = 0; f < frames; ++f)
                    for (std::size_t j = 0; j < k; ++j) {
                      const std::ptrdiff_t src =
                          static_cast<std::ptrdiff_t>(f + j) - static_cast<std::ptrdiff_t>(half);
                      if (src < 0 || src >= static_cast<std::ptrdiff_t>(frames)) continue;
                      Scalar* dst = &gx(static_cast<std::size_t>(src), 0);
                      const Scalar* from = &gcols(f, j * cin);
                      for (std::size_t c = 0; c < cin; ++c) dst[c] += from[c];
                    }
                  tp.accumulate(x, gx);
                },
                "conv1d");
}

namespace {

// Elementwise op whose derivative is a function of the input and output.
template <typename Fwd, typename Deriv>
Var elementwise(const Var& x, const char* name, Fwd fwd, Deriv deriv) {
  Tape& t = tape_of(x);
  Tensor out = x.value();
  for (Scalar& v : out.storage()) v = fwd(v);
  return finish(t, std::move(out), {x},
                [x, deriv](Tape& tp, const Tensor& y, const Tensor& g) {
                  Tensor gx = g;
                  const Tensor& xv = x.value();
                  for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= deriv(xv[i], y[i]);
                  tp.accumulate(x, gx);
                },
                name);
}

Scalar sigmoid(Scalar v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

Var relu(const Var& x) {
  return elementwise(
      x, "relu", [](Scalar v) { return v > 0 ? v : 0.0; }, [](Scalar v, Scalar) { return v > 0 ? 1.0 : 0.0; });
}

Var silu(const Var& x) {
  return elementwise(
      x, "silu", [](Scalar v) { return v * sigmoid(v); },
      [](Scalar v, Scalar) {
        const Scalar s = sigmoid(v);
        return s * (1 + v * (1 - s));
      });
}

Var tanh(const Var& x) {
  return elementwise(
      x, "tanh", [](Scalar v) { return std::tanh(v); }, [](Scalar, Scalar y) { return 1 - y * y; });
}

Var exp(const Var& x) {
  return elementwise(
      x, "exp", [](Scalar v) { return std::exp(v); }, [](Scalar, Scalar y) { return y; });
}

Var square(const Var& x) {
  return elementwise(
      x, "square", [](Scalar v) { return v * v; }, [](Scalar v, Scalar) { return 2 * v; });
}

Var transpose(const Var& x) {
  Tape& t = tape_of(x);
  return finish(t, dvtts::transpose(x.value()), {x},
                [x](Tape& tp, const Tensor&, const Tensor& g) { tp.accumulate(x, dvtts::transpose(g)); },
                "transpose");
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  Tape& t = tape_of(parts[0]);
  const std::size_t m = parts[0].value().rows();
  std::size_t total = 0;
  for (const Var& p : parts) {
    require_matrix(p.value(), "concat_cols");
    if (p.value().rows() != m) throw DimensionError("concat_cols: row counts differ");
    total += p.value().cols();
  }
  Tensor out = Tensor::matrix(m, total);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t r = 0; r < m; ++r) std::copy_n(&v(r, 0), v.cols(), &out(r, offset));
    offset += v.cols();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  ensure_finite(out, "concat_cols");
  return t.record(std::move(out), parts,
                  [ps, m](Tape& tp, const Tensor&, const Tensor& g) {
                    std::size_t off = 0;
                    for (const Var& p : ps) {
                      const std::size_t c = p.value().cols();
                      if (p.requires_grad()) {
                        Tensor gp = Tensor::matrix(m, c);
                        for (std::size_t r = 0; r < m; ++r) std::copy_n(&g(r, off), c, &gp(r, 0));
                        tp.accumulate(p, gp);
                      }
                      off += c;
                    }
                  });
}
Var slice_cols(const Var& x, std::size_t begin, std::size_t end) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  require_matrix(xv, "slice_cols");
  if (begin >= end || end > xv.cols()) throw DimensionError("slice_cols: bad range");
  const std::size_t m = xv.rows(), w = end - begin;
  Tensor out = Tensor::matrix(m, w);
  for (std::size_t r = 0; r < m; ++r) std::copy_n(&xv(r, begin), w, &out(r, 0));
  return finish(t, std::move(out), {x},
                [x, begin, w, m](Tape& tp, const Tensor&, const Tensor& g) {
                  Tensor gx(x.value().shape(), 0);
                  for (std::size_t r = 0; r < m; ++r) std::copy_n(&g(r, 0), w, &gx(r, begin));
                  tp.accumulate(x, gx);
                },
                "slice_cols");
}

Var slice_rows(const Var& x, std::size_t begin, std::size_t end) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  require_matrix(xv, "slice_rows");
  if (begin >= end || end > xv.rows()) throw DimensionError("slice_rows: bad range");
  const std::size_t n = xv.cols();
  Tensor out({end - begin, n}, std::vector<Scalar>(xv.storage().begin() + static_cast<std::ptrdiff_t>(begin * n),
                                                    xv.storage().begin() + static_cast<std::ptrdiff_t>(end * n)));
  return finish(t, std::move(out), {x},
                [x, begin, n](Tape& tp, const Tensor&, const Tensor& g) {
                  Tensor gx(x.value().shape(), 0);
                  std::copy(g.storage().begin(), g.storage().end(), gx.storage().begin() + static_cast<std::ptrdiff_t>(begin * n));
                  tp.accumulate(x, gx);
                },
                "slice_rows");
}

Var pad_rows(const Var& x, std::size_t rows) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  require_matrix(xv, "pad_rows");
  if (rows < xv.rows()) throw DimensionError("pad_rows: target smaller than input");
  if (rows == xv.rows()) return x;
  Tensor out = Tensor::matrix(rows, xv.cols());
  std::copy(xv.storage().begin(), xv.storage().end(), out.storage().begin());
  return finish(t, std::move(out), {x},
                [x](Tape& tp, const Tensor&, const Tensor& g) {
                  const Tensor& xv = x.value();
                  Tensor gx(xv.shape(), std::vector<Scalar>(g.storage().begin(), g.storage().begin() + static_cast<std::ptrdiff_t>(xv.size())));
                  tp.accumulate(x, gx);
                },
                "pad_rows");
}

Var gather_rows(const Var& table, std::span<const std::size_t> index) {
  Tape& t = tape_of(table);
  const Tensor& tv = table.value();
  require_matrix(tv, "gather_rows");
  if (index.empty()) throw DimensionError("gather_rows: empty index");
  const std::size_t n = tv.cols();
  Tensor out = Tensor::matrix(index.size(), n);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= tv.rows()) throw DimensionError("gather_rows: index out of range");
    std::copy_n(&tv(index[i], 0), n, &out(i, 0));
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return finish(t, std::move(out), {table},
                [table, idx = std::move(idx), n](Tape& tp, const Tensor&, const Tensor& g) {
                  Tensor gt(table.value().shape(), 0);
                  for (std::size_t i = 0; i < idx.size(); ++i)
                    for (std::size_t c = 0; c < n; ++c) gt(idx[i], c) += g(i, c);
                  tp.accumulate(table, gt);
                },
                "gather_rows");
}

Var avg_pool2(const Var& x) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  require_matrix(xv, "avg_pool2");
  if (xv.rows() % 2 != 0) throw DimensionError("avg_pool2: row count must be even");
  const std::size_t m = xv.rows() / 2, n = xv.cols();
  Tensor out = Tensor::matrix(m, n);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out(r, c) = 0.5 * (xv(2 * r, c) + xv(2 * r + 1, c));
  return finish(t, std::move(out), {x},
                [x, m, n](Tape& tp, const Tensor&, const Tensor& g) {
                  Tensor gx(x.value().shape(), 0);
                  for (std::size_t r = 0; r < m; ++r)
                    for (std::size_t c = 0; c < n; ++c) gx(2 * r, c) = gx(2 * r + 1, c) = 0.5 * g(r, c);
                  tp.accumulate(x, gx);
                },
                "avg_pool2");
}

Var upsample2(const Var& x) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  require_matrix(xv, "upsample2");
  const std::size_t m = xv.rows(), n = xv.cols();
  Tensor out = Tensor::matrix(2 * m, n);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out(2 * r, c) = out(2 * r + 1, c) = xv(r, c);
  return finish(t, std::move(out), {x},
                [x, m, n](Tape& tp, const Tensor&, const Tensor& g) {
                  Tensor gx(x.value().shape(), 0);
                  for (std::size_t r = 0; r < m; ++r)
                    for (std::size_t c = 0; c < n; ++c) gx(r, c) = g(2 * r, c) + g(2 * r + 1, c);
                  tp.accumulate(x, gx);
                },
                "upsample2");
}

Var sum(const Var& x) {
  Tape& t = tape_of(x);
  Scalar acc = 0;
  for (Scalar v : x.value().storage()) acc += v;
  return finish(t, Tensor::matrix(1, 1, acc), {x},
                [x](Tape& tp, const Tensor&, const Tensor& g) { tp.accumulate(x, Tensor(x.value().shape(), g[0])); },
                "sum");
}

Var mean(const Var& x) { return scale(sum(x), 1.0 / static_cast<Scalar>(x.value().size())); }

Var mse(const Var& a, const Var& b) { return mean(square(sub(a, b))); }

Var l2_normalize_rows(const Var& x) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  require_matrix(xv, "l2_normalize_rows");
  const std::size_t m = xv.rows(), n = xv.cols();
  std::vector<Scalar> norms(m);
  Tensor out = xv;
  for (std::size_t r = 0; r < m; ++r) {
    Scalar ss = 0;
    for (std::size_t c = 0; c < n; ++c) ss += xv(r, c) * xv(r, c);
    norms[r] = std::sqrt(ss);
    if (!(norms[r] > 0)) throw NumericError("l2_normalize_rows: zero-norm row");
    for (std::size_t c = 0; c < n; ++c) out(r, c) /= norms[r];
  }
  return finish(t, std::move(out), {x},
                [x, norms = std::move(norms), m, n](Tape& tp, const Tensor& y, const Tensor& g) {
                  Tensor gx = Tensor::matrix(m, n);
                  for (std::size_t r = 0; r < m; ++r) {
                    Scalar dot = 0;
                    for (std::size_t c = 0; c < n; ++c) dot += y(r, c) * g(r, c);
                    for (std::size_t c = 0; c < n; ++c) gx(r, c) = (g(r, c) - y(r, c) * dot) / norms[r];
                  }
                  tp.accumulate(x, gx);
                },
                "l2_normalize_rows");
}

Var column_moments(const Var& x, Scalar eps) {
  Tape& t = tape_of(x);
  const Tensor& xv = x.value();
  require_matrix(xv, "column_moments");
  const std::size_t m = xv.rows(), n = xv.cols();
  const Scalar inv_m = 1.0 / static_cast<Scalar>(m);
  std::vector<Scalar> means(n), stds(n), column(m);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < m; ++r) column[r] = xv(r, c);
    means[c] = order_independent_sum(column) * inv_m;
    for (std::size_t r = 0; r < m; ++r) column[r] = (xv(r, c) - means[c]) * (xv(r, c) - means[c]);
    stds[c] = std::sqrt(order_independent_sum(column) * inv_m + eps);
  }
  Tensor out = Tensor::matrix(1, 2 * n);
  for (std::size_t c = 0; c < n; ++c) {
    out[c] = means[c];
    out[n + c] = stds[c];
  }
  return finish(t, std::move(out), {x},
                [x, means = std::move(means), stds = std::move(stds), m, n, inv_m](Tape& tp, const Tensor&,
                                                                                  const Tensor& g) {
                  const Tensor& xv = x.value();
                  Tensor gx = Tensor::matrix(m, n);
                  for (std::size_t r = 0; r < m; ++r)
                    for (std::size_t c = 0; c < n; ++c)
                      gx(r, c) = g[c] * inv_m + g[n + c] * (xv(r, c) - means[c]) * inv_m / stds[c];
                  tp.accumulate(x, gx);
                },
                "column_moments");
}

}  // namespace ops

namespace {

void check_epsilon(Scalar epsilon) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-3)) throw RangeError("grad_check: epsilon must lie in [1e-7, 1e-3]");
}

Scalar relative_error(Scalar analytic, Scalar numeric) {
  if (!std::isfinite(analytic) || !std::isfinite(numeric)) throw NumericError("grad_check: non-finite gradient");
  return std::abs(analytic - numeric) / std::max<Scalar>(1, std::abs(analytic));
}

}  // namespace

Scalar grad_check(const TapeFunction& fn, const std::vector<Tensor>& inputs, Scalar epsilon) {
  check_epsilon(epsilon);
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& in : inputs) vars.push_back(tape.input(in));
    Var total = ops::sum(fn(tape, vars));
    tape.backward(total);
    for (const Var& v : vars) analytic.push_back(v.grad().empty() ? Tensor(v.value().shape(), 0) : v.grad());
  }
  auto evaluate = [&](const std::vector<Tensor>& xs) {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& in : xs) vars.push_back(tape.constant(in));
    return ops::sum(fn(tape, vars)).value()[0];
  };
  Scalar worst = 0;
  std::vector<Tensor> probe = inputs;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    for (std::size_t j = 0; j < probe[i].size(); ++j) {
      const Scalar saved = probe[i][j];
      probe[i][j] = saved + epsilon;
      const Scalar up = evaluate(probe);
      probe[i][j] = saved - epsilon;
      const Scalar down = evaluate(probe);
      probe[i][j] = saved;
      worst = std::max(worst, relative_error(analytic[i][j], (up - down) / (2 * epsilon)));
    }
  }
  return worst;
}

Scalar grad_check_parameters(const std::function<Var(Tape&)>& fn, std::span<Parameter* const> params,
                             Scalar epsilon) {
  check_epsilon(epsilon);
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    tape.backward(ops::sum(fn(tape)));
  }
  std::vector<Tensor> analytic;
  for (Parameter* p : params) analytic.push_back(p->grad);
  auto evaluate = [&] {
    Tape tape;
    return ops::sum(fn(tape)).value()[0];
  };
  Scalar worst = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& v = params[i]->value;
    for (std::size_t j = 0; j < v.size(); ++j) {
      const Scalar saved = v[j];
      v[j] = saved + epsilon;
      const Scalar up = evaluate();
      v[j] = saved - epsilon;
      const Scalar down = evaluate();
      v[j] = saved;
      worst = std::max(worst, relative_error(analytic[i][j], (up - down) / (2 * epsilon)));
    }
  }
  return worst;
}

}  // namespace dvtts
