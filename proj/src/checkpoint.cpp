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

#include "dvtts/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dvtts/binio.hpp"
#include "dvtts/errors.hpp"

namespace dvtts {

namespace {

void write_string(std::ostream& os, const std::string& s) {
  binio::write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is, std::size_t limit = 1u << 24) {
  const std::uint32_t n = binio::read_u32(is);
  if (n > limit) throw FormatError("string length " + std::to_string(n) + " exceeds limit");
  return binio::read_bytes(is, n);
}

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto tmp = path.string() + ".tmp";
  for (const auto& [name, t] : ckpt.tensors) {
    for (Scalar v : t.storage()) {
      if (static_cast<Scalar>(static_cast<float>(v)) != v && !std::isnan(v)) {
        throw RangeError("checkpoint tensor " + name + " holds a value that f32 cannot represent exactly");
      }
    }
  }
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw FormatError("cannot write " + tmp);
    binio::write_magic(os, "DVCKPT01");
    binio::write_u32(os, kCheckpointVersion);
    binio::write_u64(os, ckpt.config_hash);
    binio::write_u32(os, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, t] : ckpt.tensors) {
      write_string(os, name);
      binio::write_u32(os, static_cast<std::uint32_t>(t.rank()));
      for (std::size_t d : t.shape()) binio::write_u64(os, d);
      for (Scalar v : t.storage()) binio::write_f32(os, static_cast<float>(v));
    }
    binio::write_magic(os, "DVMETA01");
    write_string(os, ckpt.config_text);
    binio::write_u32(os, static_cast<std::uint32_t>(ckpt.vocabulary.size()));
    for (const auto& s : ckpt.vocabulary) write_string(os, s);
    write_string(os, ckpt.stats_path);
    binio::write_u64(os, ckpt.stats_hash);
    binio::write_u64(os, ckpt.state.epoch);
    binio::write_u64(os, ckpt.state.position);
    binio::write_u64(os, ckpt.state.step);
    binio::write_u32(os, static_cast<std::uint32_t>(ckpt.state.partial.size()));
    for (double v : ckpt.state.partial) binio::write_u64(os, std::bit_cast<std::uint64_t>(v));
    if (!os) throw FormatError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open checkpoint " + path.string());
  try {
    Checkpoint c;
    binio::expect_magic(is, "DVCKPT01", "checkpoint");
    const std::uint32_t version = binio::read_u32(is);
    if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
    c.config_hash = binio::read_u64(is);
    const std::uint32_t count = binio::read_u32(is);
    for (std::uint32_t i = 0; i < count; ++i) {
      std::string name = read_string(is, 4096);
      const std::uint32_t rank = binio::read_u32(is);
      if (rank == 0 || rank > 8) throw FormatError("tensor " + name + ": bad rank " + std::to_string(rank));
      std::vector<std::size_t> shape;
      std::uint64_t volume = 1;
      for (std::uint32_t d = 0; d < rank; ++d) {
        const std::uint64_t dim = binio::read_u64(is);
        if (dim == 0 || dim > (1ull << 32)) throw FormatError("tensor " + name + ": bad dimension");
        volume *= dim;
        if (volume > (1ull << 32)) throw FormatError("tensor " + name + ": too large");
        shape.push_back(static_cast<std::size_t>(dim));
      }
      std::vector<Scalar> data(static_cast<std::size_t>(volume));
      for (Scalar& v : data) v = binio::read_f32(is);
      c.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
    }
    binio::expect_magic(is, "DVMETA01", "checkpoint metadata");
    c.config_text = read_string(is);
    const std::uint32_t vocab = binio::read_u32(is);
    if (vocab > (1u << 24)) throw FormatError("vocabulary too large");
    for (std::uint32_t i = 0; i < vocab; ++i) c.vocabulary.push_back(read_string(is, 4096));
    c.stats_path = read_string(is, 1u << 16);
    c.stats_hash = binio::read_u64(is);
    c.state.epoch = binio::read_u64(is);
    c.state.position = binio::read_u64(is);
    c.state.step = binio::read_u64(is);
    const std::uint32_t partial = binio::read_u32(is);
    if (partial > 64) throw FormatError("bad loss accumulator");
    for (std::uint32_t i = 0; i < partial; ++i) c.state.partial.push_back(std::bit_cast<double>(binio::read_u64(is)));
    if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes");
    return c;
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const DimensionError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::uint64_t file_hash(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return binio::fnv1a64(ss.str());
}

}  // namespace dvtts
