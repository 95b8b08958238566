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

#include "dvtts/text.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "dvtts/errors.hpp"
#include "dvtts/unicode.hpp"

namespace dvtts {

TokenMode parse_token_mode(const std::string& name) {
  if (name == "characters") return TokenMode::characters;
  if (name == "phonemes") return TokenMode::phonemes;
  throw ConfigError("unknown token mode \"" + name + "\" (expected characters or phonemes)");
}

std::string token_mode_name(TokenMode mode) {
  return mode == TokenMode::characters ? "characters" : "phonemes";
}

Vocabulary::Vocabulary(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (symbols_[i].empty()) throw FormatError("vocabulary: empty symbol");
    if (!ids_.emplace(symbols_[i], static_cast<int>(i) + 2).second) {
      throw FormatError("vocabulary: duplicate symbol \"" + symbols_[i] + "\"");
    }
  }
}

int Vocabulary::id(const std::string& symbol) const {
  auto it = ids_.find(symbol);
  return it == ids_.end() ? kUnknownId : it->second;
}

const std::string& Vocabulary::symbol(int id) const {
  static const std::string pad = "<pad>", unk = "<unk>";
  if (id == kPadId) return pad;
  if (id == kUnknownId) return unk;
  if (id < 0 || static_cast<std::size_t>(id) >= size()) throw RangeError("token id " + std::to_string(id) + " out of range");
  return symbols_[static_cast<std::size_t>(id) - 2];
}

std::size_t PhonemeSequence::real_length() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

std::vector<std::string> tokenize(const std::string& text, TokenMode mode) {
  const std::string norm = strip(nfc(text));
  if (norm.empty()) throw RangeError("text is empty after normalisation");
  return mode == TokenMode::characters ? code_points(norm) : split_whitespace(norm);
}

Vocabulary build_vocab(std::span<const std::string> transcripts, TokenMode mode) {
  if (transcripts.empty()) throw RangeError("build_vocab: empty corpus");
  std::set<std::string> seen;
  for (const std::string& t : transcripts)
    for (std::string& s : tokenize(t, mode)) seen.insert(std::move(s));
  return Vocabulary(std::vector<std::string>(seen.begin(), seen.end()));
}

PhonemeSequence encode_text(const std::string& text, const Vocabulary& vocab, TokenMode mode) {
  PhonemeSequence seq;
  for (const std::string& s : tokenize(text, mode)) {
    seq.ids.push_back(vocab.id(s));
    seq.mask.push_back(1);
  }
  return seq;
}

std::string decode(const PhonemeSequence& seq, const Vocabulary& vocab, TokenMode mode) {
  std::string out;
  for (std::size_t i = 0; i < seq.ids.size(); ++i) {
    if (!seq.mask[i]) continue;
    if (mode == TokenMode::phonemes && !out.empty()) out += ' ';
    out += vocab.symbol(seq.ids[i]);
  }
  return out;
}

std::vector<PhonemeSequence> pad_batch(std::span<const PhonemeSequence> seqs) {
  std::size_t width = 0;
  for (const auto& s : seqs) {
    if (s.ids.size() != s.mask.size()) throw DimensionError("pad_batch: ids and mask lengths differ");
    width = std::max(width, s.ids.size());
  }
  std::vector<PhonemeSequence> out(seqs.begin(), seqs.end());
  for (auto& s : out) {
    s.ids.resize(width, kPadId);
    s.mask.resize(width, 0);
  }
  return out;
}

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape(const std::string& s, std::size_t line) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out += s[i];
      continue;
    }
    if (++i == s.size()) throw FormatError("vocabulary line " + std::to_string(line) + ": dangling escape");
    switch (s[i]) {
      case '\\': out += '\\'; break;
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      default: throw FormatError("vocabulary line " + std::to_string(line) + ": bad escape");
    }
  }
  return out;
}

}  // namespace

void write_vocab(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write " + path.string());
  for (std::size_t i = 0; i < vocab.symbols().size(); ++i) os << escape(vocab.symbols()[i]) << '\t' << i + 2 << '\n';
  if (!os) throw FormatError("write failed: " + path.string());
}

Vocabulary read_vocab(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  std::vector<std::string> symbols;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw FormatError(path.string() + ":" + std::to_string(lineno) + ": missing tab");
    const std::string id_text = line.substr(tab + 1);
    if (id_text != std::to_string(symbols.size() + 2)) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": ids must be contiguous from 2");
    }
    symbols.push_back(unescape(line.substr(0, tab), lineno));
  }
  return Vocabulary(std::move(symbols));
}

}  // namespace dvtts
