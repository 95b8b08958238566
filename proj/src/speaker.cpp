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

#include "dvtts/speaker.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "dvtts/binio.hpp"
#include "dvtts/errors.hpp"

namespace dvtts {

SpeakerEmbedding SpeakerEmbedding::normalized(std::vector<Scalar> values) {
  Scalar ss = 0;
  for (Scalar v : values) {
    if (!std::isfinite(v)) throw NumericError("speaker embedding: non-finite entry");
    ss += v * v;
  }
  if (values.empty() || ss == 0) throw NumericError("speaker embedding: zero vector");
  const Scalar n = std::sqrt(ss);
  for (Scalar& v : values) v /= n;
  SpeakerEmbedding e;
  e.values_ = std::move(values);
  return e;
}

BaselineSpeakerEncoder::BaselineSpeakerEncoder(ParamStore& store, const ModelConfig& cfg, std::mt19937_64& rng)
    : proj_(store, "spk.proj", 2 * static_cast<std::size_t>(cfg.n_mels), static_cast<std::size_t>(cfg.d_spk), rng) {}

namespace {

Tensor moments(const Tensor& mel) {
  if (mel.rank() != 2 || mel.rows() == 0) throw DimensionError("speaker embedding: mel needs at least one frame");
  Tape tape;
  return ops::column_moments(tape.constant(mel)).value();
}

}  // namespace

void BaselineSpeakerEncoder::fit(std::span<const Tensor> corpus_mels) {
  if (corpus_mels.empty()) throw RangeError("speaker encoder fit: empty corpus");
  const std::size_t n = proj_.in();
  std::vector<std::vector<Scalar>> per_dim(n);
  for (const Tensor& mel : corpus_mels) {
    const Tensor m = moments(mel);
    if (m.cols() != n) throw DimensionError("speaker encoder fit: mel width mismatch");
    for (std::size_t i = 0; i < n; ++i) per_dim[i].push_back(m[i]);
  }
  Tensor centre = Tensor::matrix(1, n);
  for (std::size_t i = 0; i < n; ++i)
    centre[i] = order_independent_sum(per_dim[i]) / static_cast<Scalar>(corpus_mels.size());
  const Tensor shift = matmul(centre, proj_.w->value);
  for (std::size_t j = 0; j < shift.size(); ++j) proj_.b->value[j] = -shift[j];
}

SpeakerEmbedding BaselineSpeakerEncoder::embed(const Tensor& mel) const {
  const Tensor m = moments(mel);
  if (m.cols() != proj_.in()) throw DimensionError("speaker embedding: mel width mismatch");
  Tensor y = matmul(m, proj_.w->value);
  add_inplace(y, proj_.b->value);
  return SpeakerEmbedding::normalized(y.storage());
}

void write_embedding(const std::filesystem::path& path, const SpeakerEmbedding& e) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write " + path.string());
  binio::write_magic(os, "SPKEMB01");
  binio::write_u32(os, static_cast<std::uint32_t>(e.dim()));
  for (Scalar v : e.values()) binio::write_f32(os, static_cast<float>(v));
  if (!os) throw FormatError("write failed: " + path.string());
}

SpeakerEmbedding load_external_embedding(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  try {
    binio::expect_magic(is, "SPKEMB01", "speaker embedding");
    const std::uint32_t dim = binio::read_u32(is);
    if (dim == 0 || dim > (1u << 20)) throw FormatError("implausible dimension " + std::to_string(dim));
    std::vector<Scalar> values(dim);
    for (Scalar& v : values) v = binio::read_f32(is);
    return SpeakerEmbedding::normalized(std::move(values));
  } catch (const NumericError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

Scalar sim_o(const SpeakerEmbedding& a, const SpeakerEmbedding& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError("sim_o: dimensions " + std::to_string(a.dim()) + " and " + std::to_string(b.dim()));
  }
  Scalar dot = 0;
  for (std::size_t i = 0; i < a.dim(); ++i) dot += a.values()[i] * b.values()[i];
  return std::clamp(dot, -1.0, 1.0);
}

}  // namespace dvtts
