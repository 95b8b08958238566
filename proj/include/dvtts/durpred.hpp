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

#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dvtts/model_config.hpp"
#include "dvtts/nn.hpp"

namespace dvtts {

inline constexpr std::size_t kReferenceFrames = 172;

struct ReferenceCandidate {
  std::string id;
  std::string speaker;
  const Tensor* mel = nullptr;  // frames x n_mels
};

struct ReferenceMel {
  Tensor mel;  // exactly `frames` rows
  std::string source_id;
  std::string speaker;
  std::size_t offset = 0;  // first frame of the window in the (tiled) source
};

struct FrameRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Random window of `frames` rows; shorter sources are tiled first.
ReferenceMel crop_window(const Tensor& mel, std::size_t frames, std::mt19937_64& rng);

// Picks an utterance other than `target_id` uniformly from `pool` and crops a
// random window from it. When the pool holds only the target, the window is
// taken from the target outside `target_region`; without a region, or without
// room outside it, ReferenceUnavailableError is thrown.
ReferenceMel crop_reference(std::span<const ReferenceCandidate> pool, const std::string& target_id,
                            std::mt19937_64& rng, std::size_t frames = kReferenceFrames,
                            std::optional<FrameRange> target_region = std::nullopt);

class DurationPredictor {
 public:
  struct Attention {
    Var output;                // P x d_model
    std::vector<Var> weights;  // one P x F_ref matrix per head
  };

  DurationPredictor() = default;
  DurationPredictor(ParamStore& store, const ModelConfig& cfg, std::mt19937_64& rng);

  // Queries are projected text embeddings, keys and values the projected
  // reference frames. Padded query rows come out zero.
  Attention cross_attend(Tape& tape, const Var& text, const Var& reference,
                         std::span<const std::uint8_t> mask) const;
  // Two conv-relu-norm blocks and a linear head: P x 1 natural-log durations.
  Var predict_log_durations(Tape& tape, const Var& attended, std::span<const std::uint8_t> mask) const;

  Parameter& head_bias() const { return *head_.b; }

 private:
  Linear query_, ref_proj_;
  std::size_t heads_ = 1;
  Conv1d conv1_, conv2_;
  LayerNorm norm1_, norm2_;
  Linear head_;
};

// max(1, round(exp(log_d))) with halves rounded away from zero.
std::vector<int> durations_to_frames(std::span<const Scalar> log_durations);

// Mean over real positions of (log_d_pred - log D)^2. `log_pred` is P x 1.
Var duration_loss(const Var& log_pred, const std::vector<int>& durations, std::span<const std::uint8_t> mask);

}  // namespace dvtts
