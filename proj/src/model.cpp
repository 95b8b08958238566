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

#include "dvtts/model.hpp"

#include <cmath>
#include <random>

#include "dvtts/autodiff.hpp"
#include "dvtts/errors.hpp"
#include "dvtts/optim.hpp"

namespace dvtts {

TtsModel::TtsModel(const ModelConfig& cfg, std::size_t vocab_size, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  if (vocab_size < 3) throw ConfigError("vocabulary must hold at least one symbol");
  std::mt19937_64 rng(seed);
  encoder = TextEncoder(store_, cfg_, vocab_size, rng);
  durations = DurationPredictor(store_, cfg_, rng);
  speaker = BaselineSpeakerEncoder(store_, cfg_, rng);
  decoder = ScoreNet(store_, cfg_, rng);
  schedule = NoiseSchedule{cfg_.beta0, cfg_.beta1};
  schedule.validate();
  for (Parameter* p : store_.all()) round_to_f32(p->value);
}

std::vector<Parameter*> TtsModel::trainable() {
  std::vector<Parameter*> out;
  for (Parameter* p : store_.all())
    if (p->name.rfind("spk.", 0) != 0) out.push_back(p);
  return out;
}

void TtsModel::prepare(const MelStats& stats, std::span<const Tensor> corpus_mels, double mean_log_duration) {
  Parameter& bias = encoder.mu_bias();
  if (stats.n_mels() != bias.value.size()) throw ConfigError("mel stats width does not match the model");
  if (!std::isfinite(mean_log_duration)) throw NumericError("mean log duration is not finite");
  for (std::size_t i = 0; i < stats.n_mels(); ++i) bias.value[i] = stats.mean_frame[i];
  durations.head_bias().value[0] = mean_log_duration;
  speaker.fit(corpus_mels);
  // Checkpoints hold f32, so start from f32-representable values.
  for (Parameter* p : store_.all()) round_to_f32(p->value);
}

double mean_log_duration(std::span<const std::size_t> frames, std::span<const std::size_t> tokens) {
  if (frames.size() != tokens.size() || frames.empty()) throw DimensionError("mean_log_duration: need one token count per utterance");
  std::vector<Scalar> logs;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (tokens[i] == 0 || frames[i] < tokens[i]) throw RangeError("mean_log_duration: fewer frames than tokens");
    logs.push_back(std::log(static_cast<double>(frames[i]) / static_cast<double>(tokens[i])));
  }
  return order_independent_sum(logs) / static_cast<double>(logs.size());
}

}  // namespace dvtts
