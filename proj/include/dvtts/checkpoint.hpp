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
#include <utility>
#include <vector>

#include "dvtts/tensor.hpp"

namespace dvtts {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Resumable training position.
struct TrainState {
  std::uint64_t epoch = 0;     // completed epochs
  std::uint64_t position = 0;  // utterances consumed in the current epoch
  std::uint64_t step = 0;      // optimizer steps
  std::vector<double> partial;  // running loss sums of the current epoch
  bool operator==(const TrainState&) const = default;
};

struct Checkpoint {
  std::uint64_t config_hash = 0;
  std::vector<std::pair<std::string, Tensor>> tensors;
  std::string config_text;
  std::vector<std::string> vocabulary;
  std::string stats_path;
  std::uint64_t stats_hash = 0;
  TrainState state;

  const Tensor* find(const std::string& name) const;
  bool operator==(const Checkpoint&) const = default;
};

// "DVCKPT01", u32 version, u64 config hash, u32 tensor count, then per
// tensor: u32 name length, UTF-8 name, u32 rank, u64 dims, f32 data. A
// "DVMETA01" section follows with the config text, vocabulary, stats
// reference and training position. All integers little-endian. Tensor values
// must be exactly representable in f32 (RangeError otherwise).
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Hash of a mel stats file's contents, stored so a checkpoint can detect a
// swapped statistics file.
std::uint64_t file_hash(const std::filesystem::path& path);

}  // namespace dvtts
