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
#include <vector>

#include "dvtts/audio.hpp"

namespace dvtts {

// Toy speech: a harmonic source at the speaker's pitch, shaped per letter by
// two formant bumps; spaces are near silence. A speaker also sets the
// speaking rate and tilts the harmonic spectrum.
struct SyntheticSpeaker {
  std::string name;
  double pitch_hz = 110.0;
  double seconds_per_token = 0.1;
  double tilt = 0.0;  // harmonic k is weighted by k^-tilt
};

struct SyntheticCorpusOptions {
  int speakers = 2;
  int utterances_per_speaker = 4;
  double seconds = 5.0;
  int sample_rate = 22050;
  std::uint64_t seed = 0;
};

struct SyntheticUtterance {
  std::string id;
  std::string speaker;
  std::string text;
  Waveform wav;
  std::vector<std::size_t> token_samples;  // one per character of text
};

inline constexpr const char* kSyntheticAlphabet = "aeiknorstu";

std::vector<SyntheticSpeaker> synthetic_speakers(int count);
// Renders `text` in the given voice; `rng_seed` drives token-length jitter
// and the noise floor. Token lengths in samples go to `token_samples`.
Waveform render_synthetic(const std::string& text, const SyntheticSpeaker& speaker, int sample_rate,
                          std::uint64_t rng_seed, std::vector<std::size_t>* token_samples = nullptr);
std::vector<SyntheticUtterance> make_synthetic_corpus(const SyntheticCorpusOptions& opt);
// <id>.wav, <id>.txt and speakers.tsv.
void write_synthetic_corpus(const std::filesystem::path& dir, const std::vector<SyntheticUtterance>& utts);

}  // namespace dvtts
