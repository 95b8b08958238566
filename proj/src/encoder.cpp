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

#include "dvtts/encoder.hpp"

#include <cmath>

#include "dvtts/align.hpp"
#include "dvtts/errors.hpp"

namespace dvtts {

SelfAttention::SelfAttention(ParamStore& store, const std::string& name, std::size_t dim, std::size_t h,
                             std::mt19937_64& rng)
    : q(store, name + ".q", dim, dim, rng),
      k(store, name + ".k", dim, dim, rng),
      v(store, name + ".v", dim, dim, rng),
      o(store, name + ".o", dim, dim, rng),
      heads(h) {
  if (h == 0 || dim % h != 0) throw ConfigError("attention heads must divide the model width");
}

Var SelfAttention::operator()(Tape& tape, const Var& x, std::span<const std::uint8_t> mask) const {
  const std::size_t n = x.value().rows(), dim = x.value().cols(), dh = dim / heads;
  const Var qx = q(tape, x), kx = k(tape, x), vx = v(tape, x);
  const std::vector<std::uint8_t> m = key_mask(mask, n);
  std::vector<Var> outs;
  for (std::size_t h = 0; h < heads; ++h) {
    const Var qh = ops::slice_cols(qx, h * dh, (h + 1) * dh);
    const Var kh = ops::slice_cols(kx, h * dh, (h + 1) * dh);
    const Var vh = ops::slice_cols(vx, h * dh, (h + 1) * dh);
    const Var scores = ops::scale(ops::matmul(qh, ops::transpose(kh)), 1.0 / std::sqrt(static_cast<double>(dh)));
    outs.push_back(ops::matmul(ops::softmax_rows(scores, m), vh));
  }
  return o(tape, heads == 1 ? outs[0] : ops::concat_cols(outs));
}

TextEncoder::TextEncoder(ParamStore& store, const ModelConfig& cfg, std::size_t vocab_size, std::mt19937_64& rng) {
  const auto d = static_cast<std::size_t>(cfg.d_model);
  const auto k = static_cast<std::size_t>(cfg.kernel);
  embedding_ = &store.add("enc.embed", normal_tensor(rng, {vocab_size, d}, 1.0));
  for (int i = 0; i < cfg.enc_layers; ++i) {
    const std::string p = "enc.block" + std::to_string(i);
    Block b;
    b.attn = SelfAttention(store, p + ".attn", d, static_cast<std::size_t>(cfg.enc_heads), rng);
    b.norm1 = LayerNorm(store, p + ".norm1", d);
    b.conv1 = Conv1d(store, p + ".conv1", k, d, d, rng);
    b.conv2 = Conv1d(store, p + ".conv2", k, d, d, rng);
    b.norm2 = LayerNorm(store, p + ".norm2", d);
    blocks_.push_back(b);
  }
  mu_head_ = Linear(store, "enc.mu", d, static_cast<std::size_t>(cfg.n_mels), rng);
}

TextEncoder::Output TextEncoder::forward(Tape& tape, const PhonemeSequence& seq) const {
  if (seq.ids.empty() || seq.ids.size() != seq.mask.size()) throw DimensionError("encoder: malformed sequence");
  if (seq.real_length() == 0) throw RangeError("encoder: sequence has no real tokens");
  std::vector<std::size_t> index;
  for (int id : seq.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size()) {
      throw RangeError("encoder: token id " + std::to_string(id) + " outside vocabulary of " +
                       std::to_string(vocab_size()));
    }
    index.push_back(static_cast<std::size_t>(id));
  }
  const std::span<const std::uint8_t> mask = seq.mask;
  Var h = ops::mask_rows(ops::gather_rows(tape.param(*embedding_), index), mask);
  for (const Block& b : blocks_) {
    h = ops::mask_rows(b.norm1(tape, ops::add(h, b.attn(tape, h, mask))), mask);
    const Var c = b.conv2(tape, ops::mask_rows(ops::relu(b.conv1(tape, h)), mask));
    h = ops::mask_rows(b.norm2(tape, ops::add(h, c)), mask);
  }
  return {h, ops::mask_rows(mu_head_(tape, h), mask)};
}

TextEncoding TextEncoder::encode(const PhonemeSequence& seq) const {
  Tape tape;
  const Output out = forward(tape, seq);
  return {out.embeddings.value(), out.mu.value()};
}

namespace {

std::vector<std::size_t> repeat_index(const std::vector<int>& durations, std::size_t rows) {
  validate_durations(durations, rows);
  std::vector<std::size_t> index;
  for (std::size_t p = 0; p < durations.size(); ++p) index.insert(index.end(), static_cast<std::size_t>(durations[p]), p);
  return index;
}

}  // namespace

Tensor expand_rows(const Tensor& rows, const std::vector<int>& durations) {
  const std::vector<std::size_t> index = repeat_index(durations, rows.rows());
  Tensor out = Tensor::matrix(index.size(), rows.cols());
  for (std::size_t f = 0; f < index.size(); ++f) {
    const auto src = rows.row_span(index[f]);
    std::copy(src.begin(), src.end(), out.row_span(f).begin());
  }
  return out;
}

Var expand_rows(const Var& rows, const std::vector<int>& durations) {
  const std::vector<std::size_t> index = repeat_index(durations, rows.value().rows());
  return ops::gather_rows(rows, index);
}

Tensor expand_mu(const TextEncoding& enc, const std::vector<int>& durations) { return expand_rows(enc.mu, durations); }

}  // namespace dvtts
