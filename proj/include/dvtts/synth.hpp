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
#include <optional>
#include <string>
#include <vector>

#include "dvtts/audio.hpp"
#include "dvtts/config.hpp"
#include "dvtts/model.hpp"
#include "dvtts/speaker.hpp"
#include "dvtts/text.hpp"

namespace dvtts {

struct SynthRequest {
  std::string text;
  Tensor reference_mel;  // frames x n_mels
  // Overrides the embedding computed from the reference window.
  std::optional<SpeakerEmbedding> speaker;
  GuidanceConfig guidance;
  // false runs the conditional score only (no mean-mel branch).
  bool guided = true;
  std::uint64_t seed = 0;
};

struct SynthResult {
  std::vector<std::string> tokens;
  std::vector<int> durations;  // one per token
  Tensor mu_frames;
  Tensor mel;
  std::size_t reference_offset = 0;
};

// Text -> mel. Guided requests need the dataset mean frame in `stats`.
SynthResult synthesize(const TtsModel& model, const Config& cfg, const Vocabulary& vocab,
                       const std::optional<MelStats>& stats, const SynthRequest& req);

// Mel -> waveform with Griffin-Lim seeded from `seed`.
Waveform vocode(const Tensor& mel, const Config& cfg, std::uint64_t seed);

}  // namespace dvtts
