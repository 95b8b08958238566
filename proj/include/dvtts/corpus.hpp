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
#include <map>
#include <string>
#include <vector>

#include "dvtts/audio.hpp"

namespace dvtts {

struct Utterance {
  std::string id;
  std::string speaker;
  std::string text;
  MelSpectrogram mel;
};

// Flat directory: <id>.wav and <id>.txt per utterance plus speakers.tsv with
// "id<TAB>speaker" lines. Utterances are returned sorted by id; audio is
// resampled to the analysis rate when needed.
std::vector<Utterance> load_corpus(const std::filesystem::path& dir, const AnalysisConfig& cfg);

// speakers.tsv only.
std::map<std::string, std::string> read_speaker_map(const std::filesystem::path& dir);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace dvtts
