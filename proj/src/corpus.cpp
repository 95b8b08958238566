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

#include "dvtts/corpus.hpp"

#include <fstream>
#include <sstream>

#include "dvtts/errors.hpp"

namespace dvtts {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> read_speaker_map(const std::filesystem::path& dir) {
  const auto path = dir / "speakers.tsv";
  if (!std::filesystem::exists(path)) throw FormatError("corpus " + dir.string() + " has no speakers.tsv");
  std::istringstream is(read_text_file(path));
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size() || line.find('\t', tab + 1) != std::string::npos) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected id<TAB>speaker");
    }
    if (!out.emplace(line.substr(0, tab), line.substr(tab + 1)).second) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": duplicate id " + line.substr(0, tab));
    }
  }
  if (out.empty()) throw FormatError(path.string() + ": no utterances listed");
  return out;
}

std::vector<Utterance> load_corpus(const std::filesystem::path& dir, const AnalysisConfig& cfg) {
  std::vector<Utterance> out;
  for (const auto& [id, speaker] : read_speaker_map(dir)) {
    const auto wav_path = dir / (id + ".wav");
    const auto txt_path = dir / (id + ".txt");
    if (!std::filesystem::exists(txt_path)) throw FormatError("missing transcript " + txt_path.string());
    Waveform wav = load_wav(wav_path);
    if (wav.sample_rate != cfg.sample_rate) wav = resample(wav, cfg.sample_rate);
    Utterance u;
    u.id = id;
    u.speaker = speaker;
    u.text = read_text_file(txt_path);
    try {
      u.mel = wav_to_mel(wav, cfg);
    } catch (const Error& e) {
      throw FormatError(wav_path.string() + ": " + e.what());
    }
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace dvtts
