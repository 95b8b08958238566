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

#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "dvtts/model_config.hpp"
#include "dvtts/nn.hpp"

namespace dvtts {

// Unit-norm speaker vector.
class SpeakerEmbedding {
 public:
  SpeakerEmbedding() = default;
  // L2-normalises `values`; NumericError for zero or non-finite input.
  static SpeakerEmbedding normalized(std::vector<Scalar> values);

  const std::vector<Scalar>& values() const { return values_; }
  std::size_t dim() const { return values_.size(); }
  Tensor as_row() const { return Tensor::row(values_); }

 private:
  std::vector<Scalar> values_;
};

// Per-bin mean and standard deviation over time, a linear map, then L2
// normalisation. The map is fitted once on the training corpus and then
// frozen: random projection rows with the bias set to cancel the corpus
// average statistics.
class BaselineSpeakerEncoder {
 public:
  BaselineSpeakerEncoder() = default;
  BaselineSpeakerEncoder(ParamStore& store, const ModelConfig& cfg, std::mt19937_64& rng);

  void fit(std::span<const Tensor> corpus_mels);
  SpeakerEmbedding embed(const Tensor& mel) const;
  std::size_t dim() const { return proj_.out(); }

 private:
  Linear proj_;
};

// "SPKEMB01", u32 dim, f32 values (little-endian).
void write_embedding(const std::filesystem::path& path, const SpeakerEmbedding& e);
SpeakerEmbedding load_external_embedding(const std::filesystem::path& path);

// Cosine similarity of two unit vectors.
Scalar sim_o(const SpeakerEmbedding& a, const SpeakerEmbedding& b);

}  // namespace dvtts
