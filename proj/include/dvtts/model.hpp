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
#include <span>
#include <vector>

#include "dvtts/audio.hpp"
#include "dvtts/diffusion.hpp"
#include "dvtts/durpred.hpp"
#include "dvtts/encoder.hpp"
#include "dvtts/model_config.hpp"
#include "dvtts/speaker.hpp"

namespace dvtts {

// Encoder, duration predictor, speaker embedder and score network over one
// parameter store.
class TtsModel {
 public:
  TtsModel(const ModelConfig& cfg, std::size_t vocab_size, std::uint64_t seed);
  TtsModel(const TtsModel&) = delete;
  TtsModel& operator=(const TtsModel&) = delete;

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  // Everything except the frozen speaker embedder.
  std::vector<Parameter*> trainable();

  // Data-dependent start: mu head bias = dataset mean frame, duration head
  // bias = mean log frames-per-token, speaker embedder fitted on the corpus.
  void prepare(const MelStats& stats, std::span<const Tensor> corpus_mels, double mean_log_duration);

  TextEncoder encoder;
  DurationPredictor durations;
  BaselineSpeakerEncoder speaker;
  ScoreNet decoder;
  NoiseSchedule schedule;

 private:
  ModelConfig cfg_;
  ParamStore store_;
};

// Mean over utterances of log(frames / tokens).
double mean_log_duration(std::span<const std::size_t> frames, std::span<const std::size_t> tokens);

}  // namespace dvtts
