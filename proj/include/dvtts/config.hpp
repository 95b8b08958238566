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
#include <filesystem>
#include <string>

#include "dvtts/audio.hpp"
#include "dvtts/diffusion.hpp"
#include "dvtts/model_config.hpp"
#include "dvtts/text.hpp"

namespace dvtts {

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 64;
  int epochs = 200;
  std::uint64_t seed = 0;
  int checkpoint_every = 10;

  bool operator==(const TrainConfig&) const = default;
};

struct Config {
  AnalysisConfig audio;
  ModelConfig model;
  TokenMode token_mode = TokenMode::characters;
  TrainConfig train;
  GuidanceConfig guidance;
  int griffin_lim_iters = 32;

  void validate() const;
  // Covers the audio, model and tokenisation settings, i.e. everything a
  // checkpoint's tensors depend on. Training and guidance settings are free
  // to change between runs.
  std::uint64_t fingerprint() const;
  // Canonical key=value text; parse_config(to_text()) == *this.
  std::string to_text() const;

  bool operator==(const Config&) const = default;
};

// key=value lines; '#' starts a comment. Unknown keys and malformed values
// raise ConfigError naming the line.
Config parse_config(const std::string& text, const std::string& origin = "config");
Config load_config(const std::filesystem::path& path);

}  // namespace dvtts
