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

#include "dvtts/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>

#include "dvtts/errors.hpp"

namespace dvtts {

std::vector<SyntheticSpeaker> synthetic_speakers(int count) {
  if (count < 1) throw RangeError("synthetic corpus needs at least one speaker");
  std::vector<SyntheticSpeaker> out;
  for (int i = 0; i < count; ++i) {
    SyntheticSpeaker s;
    char name[16];
    std::snprintf(name, sizeof name, "spk%d", i);
    s.name = name;
    s.pitch_hz = 110.0 * (1.0 + 0.35 * i);
    s.seconds_per_token = 0.1;
    s.tilt = 0.3 + 0.5 * (i % 2);
    out.push_back(s);
  }
  return out;
}

namespace {

// Two formants per letter, spread so neighbouring letters differ in both.
void letter_formants(int letter, double& f1, double& f2) {
  f1 = 300.0 + 70.0 * letter;
  f2 = 2600.0 - 170.0 * ((letter * 3) % 10);
}

}  // namespace

Waveform render_synthetic(const std::string& text, const SyntheticSpeaker& speaker, int sample_rate,
                          std::uint64_t rng_seed, std::vector<std::size_t>* token_samples) {
  if (sample_rate <= 0) throw RangeError("sample rate must be positive");
  if (!(speaker.pitch_hz > 0)) throw RangeError("speaker pitch must be positive");
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> jitter(0.8, 1.2);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double top = std::min(4500.0, 0.45 * sample_rate);
  const int harmonics = static_cast<int>(top / speaker.pitch_hz);
  Waveform wav;
  wav.sample_rate = sample_rate;
  std::vector<double> amp(static_cast<std::size_t>(harmonics) + 1);
  const double ramp = 0.01 * sample_rate;
  for (char c : text) {
    const auto n = static_cast<std::size_t>(speaker.seconds_per_token * jitter(rng) * sample_rate);
    if (token_samples != nullptr) token_samples->push_back(n);
    const char* hit = c == 0 ? nullptr : std::strchr(kSyntheticAlphabet, c);
    const int letter = hit != nullptr ? static_cast<int>(hit - kSyntheticAlphabet) : -1;
    if (letter >= 0) {
      double f1 = 0, f2 = 0;
      letter_formants(letter, f1, f2);
      for (int k = 1; k <= harmonics; ++k) {
        const double f = speaker.pitch_hz * k;
        const double env = std::exp(-std::pow((f - f1) / 160.0, 2)) + 0.7 * std::exp(-std::pow((f - f2) / 260.0, 2));
        amp[static_cast<std::size_t>(k)] = 0.2 * std::pow(k, -speaker.tilt) * (0.05 + env);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      // 10 ms raised-cosine ramps at both ends
      const double edge = std::min({static_cast<double>(i) + 0.5, static_cast<double>(n - i) - 0.5, ramp});
      const double gain = 0.5 - 0.5 * std::cos(std::numbers::pi * edge / ramp);
      double v = 1e-3 * noise(rng);
      if (letter >= 0) {
        const double phase = 2 * std::numbers::pi * speaker.pitch_hz * static_cast<double>(i) / sample_rate;
        for (int k = 1; k <= harmonics; ++k) v += amp[static_cast<std::size_t>(k)] * std::sin(k * phase);
      }
      wav.samples.push_back(gain * v);
    }
  }
  return wav;
}

std::vector<SyntheticUtterance> make_synthetic_corpus(const SyntheticCorpusOptions& opt) {
  if (opt.utterances_per_speaker < 1) throw RangeError("need at least one utterance per speaker");
  if (!(opt.seconds > 0)) throw RangeError("utterance length must be positive");
  const auto speakers = synthetic_speakers(opt.speakers);
  std::mt19937_64 rng(opt.seed);
  const int alphabet = static_cast<int>(std::strlen(kSyntheticAlphabet));
  std::uniform_int_distribution<int> letter(0, alphabet - 1);
  std::uniform_int_distribution<int> word_len(2, 5);
  std::vector<SyntheticUtterance> out;
  for (const auto& spk : speakers) {
    for (int u = 0; u < opt.utterances_per_speaker; ++u) {
      const auto tokens = static_cast<std::size_t>(opt.seconds / spk.seconds_per_token);
      std::string text;
      while (text.size() < tokens) {
        if (!text.empty()) text += ' ';
        for (int k = word_len(rng); k > 0; --k) text += kSyntheticAlphabet[letter(rng)];
      }
      while (!text.empty() && (text.size() > tokens || text.back() == ' ')) text.pop_back();
      SyntheticUtterance utt;
      char id[48];
      std::snprintf(id, sizeof id, "%s_%03d", spk.name.c_str(), u);
      utt.id = id;
      utt.speaker = spk.name;
      utt.text = text;
      utt.wav = render_synthetic(text, spk, opt.sample_rate, rng(), &utt.token_samples);
      out.push_back(std::move(utt));
    }
  }
  return out;
}

void write_synthetic_corpus(const std::filesystem::path& dir, const std::vector<SyntheticUtterance>& utts) {
  std::filesystem::create_directories(dir);
  std::ofstream map(dir / "speakers.tsv", std::ios::binary);
  if (!map) throw FormatError("cannot write " + (dir / "speakers.tsv").string());
  for (const auto& u : utts) {
    write_wav(dir / (u.id + ".wav"), u.wav);
    std::ofstream txt(dir / (u.id + ".txt"), std::ios::binary);
    if (!txt) throw FormatError("cannot write " + (dir / (u.id + ".txt")).string());
    txt << u.text << '\n';
    map << u.id << '\t' << u.speaker << '\n';
  }
}

}  // namespace dvtts
