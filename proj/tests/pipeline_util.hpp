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
#include <string>
#include <vector>

#include "dvtts/config.hpp"
#include "dvtts/corpus.hpp"
#include "dvtts/synthetic.hpp"
#include "dvtts/text.hpp"

namespace dvtts::testing {

// 8 kHz analysis with a small model; a few seconds of audio trains in well
// under a second per epoch.
inline Config small_pipeline_config() {
  Config c;
  c.audio.sample_rate = 8000;
  c.audio.n_fft = 256;
  c.audio.win_length = 256;
  c.audio.hop_length = 128;
  c.audio.n_mels = 12;
  c.audio.fmax = 4000;
  c.model.n_mels = 12;
  c.model.d_model = 16;
  c.model.enc_layers = 1;
  c.model.enc_heads = 2;
  c.model.dur_heads = 2;
  c.model.d_spk = 6;
  c.model.unet_channels = 8;
  c.model.time_dim = 8;
  c.model.ref_frames = 24;
  c.train.batch_size = 2;
  c.train.learning_rate = 1e-3;
  c.train.seed = 5;
  c.guidance.steps = 6;
  c.griffin_lim_iters = 4;
  c.validate();
  return c;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("dvtts_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Writes a synthetic corpus for `cfg` to a fresh directory.
inline std::filesystem::path write_small_corpus(const std::string& name, const Config& cfg, int speakers = 2,
                                                int utterances = 2, double seconds = 1.2) {
  SyntheticCorpusOptions opt;
  opt.speakers = speakers;
  opt.utterances_per_speaker = utterances;
  opt.seconds = seconds;
  opt.sample_rate = cfg.audio.sample_rate;
  opt.seed = 11;
  const auto dir = scratch_dir(name);
  write_synthetic_corpus(dir, make_synthetic_corpus(opt));
  return dir;
}

inline Vocabulary corpus_vocab(const std::vector<Utterance>& corpus, const Config& cfg) {
  std::vector<std::string> texts;
  for (const Utterance& u : corpus) texts.push_back(u.text);
  return build_vocab(texts, cfg.token_mode);
}

inline std::vector<MelSpectrogram> corpus_mels(const std::vector<Utterance>& corpus) {
  std::vector<MelSpectrogram> out;
  for (const Utterance& u : corpus) out.push_back(u.mel);
  return out;
}

}  // namespace dvtts::testing
