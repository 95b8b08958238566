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

#include <random>
#include <vector>

#include "dvtts/model_config.hpp"
#include "dvtts/nn.hpp"
#include "dvtts/text.hpp"

namespace dvtts {

struct TextEncoding {
  Tensor embeddings;  // P x d_model
  Tensor mu;          // P x n_mels
};

// Multi-head scaled dot-product self-attention with a key padding mask.
struct SelfAttention {
  Linear q, k, v, o;
  std::size_t heads = 1;

  SelfAttention() = default;
  SelfAttention(ParamStore& store, const std::string& name, std::size_t dim, std::size_t heads, std::mt19937_64& rng);
  Var operator()(Tape& tape, const Var& x, std::span<const std::uint8_t> mask) const;
};

class TextEncoder {
 public:
  struct Output {
    Var embeddings;
    Var mu;
  };

  TextEncoder() = default;
  TextEncoder(ParamStore& store, const ModelConfig& cfg, std::size_t vocab_size, std::mt19937_64& rng);

  // Embedding lookup, then blocks of (self-attention, add, norm) and
  // (conv-relu-conv, add, norm); padded rows are zeroed after every block.
  Output forward(Tape& tape, const PhonemeSequence& seq) const;
  TextEncoding encode(const PhonemeSequence& seq) const;

  std::size_t vocab_size() const { return embedding_->value.rows(); }
  Parameter& mu_bias() const { return *mu_head_.b; }

 private:
  struct Block {
    SelfAttention attn;
    LayerNorm norm1;
    Conv1d conv1, conv2;
    LayerNorm norm2;
  };

  Parameter* embedding_ = nullptr;
  std::vector<Block> blocks_;
  Linear mu_head_;
};

// Row p of `rows` repeated durations[p] times.
Tensor expand_rows(const Tensor& rows, const std::vector<int>& durations);
Var expand_rows(const Var& rows, const std::vector<int>& durations);
// Frame-level mu (c_c).
Tensor expand_mu(const TextEncoding& enc, const std::vector<int>& durations);

}  // namespace dvtts
