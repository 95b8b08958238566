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
#include <map>
#include <span>
#include <string>
#include <vector>

namespace dvtts {

enum class TokenMode {
  characters,  // one token per code point
  phonemes,    // whitespace-separated symbols
};

TokenMode parse_token_mode(const std::string& name);
std::string token_mode_name(TokenMode mode);

inline constexpr int kPadId = 0;
inline constexpr int kUnknownId = 1;

class Vocabulary {
 public:
  Vocabulary() = default;
  // Symbols must be distinct; they receive ids 2, 3, ... in the given order.
  explicit Vocabulary(std::vector<std::string> symbols);

  // Including the two reserved ids.
  std::size_t size() const { return symbols_.size() + 2; }
  int id(const std::string& symbol) const;  // kUnknownId when absent
  const std::string& symbol(int id) const;
  const std::vector<std::string>& symbols() const { return symbols_; }

  bool operator==(const Vocabulary& other) const { return symbols_ == other.symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::map<std::string, int> ids_;
};

struct PhonemeSequence {
  std::vector<int> ids;
  std::vector<std::uint8_t> mask;  // 1 = real token

  std::size_t size() const { return ids.size(); }
  std::size_t real_length() const;
};

// Symbols of every transcript, deduplicated and sorted bytewise.
Vocabulary build_vocab(std::span<const std::string> transcripts, TokenMode mode);

// NFC, trim, then split according to `mode`.
std::vector<std::string> tokenize(const std::string& text, TokenMode mode);
PhonemeSequence encode_text(const std::string& text, const Vocabulary& vocab, TokenMode mode);
// Real tokens only; phoneme symbols are joined with single spaces.
std::string decode(const PhonemeSequence& seq, const Vocabulary& vocab, TokenMode mode);

// Right-pads every sequence with kPadId to the longest length.
std::vector<PhonemeSequence> pad_batch(std::span<const PhonemeSequence> seqs);

// One "symbol<TAB>id" line per non-reserved symbol. Backslash, tab, CR and LF
// inside symbols are written as \\, \t, \r and \n.
void write_vocab(const std::filesystem::path& path, const Vocabulary& vocab);
Vocabulary read_vocab(const std::filesystem::path& path);

}  // namespace dvtts
