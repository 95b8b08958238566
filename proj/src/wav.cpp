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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "dvtts/audio.hpp"
#include "dvtts/binio.hpp"
#include "dvtts/errors.hpp"

namespace dvtts {

Waveform load_wav(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(path.string() + ": cannot open");
  const std::string where = path.string();
  try {
    binio::expect_magic(is, "RIFF", where);
    binio::read_u32(is);
    binio::expect_magic(is, "WAVE", where);

    bool have_fmt = false;
    Waveform wav;
    while (true) {
      char id[4];
      if (!is.read(id, 4)) break;
      const std::uint32_t size = binio::read_u32(is);
      const std::string chunk(id, 4);
      if (chunk == "fmt ") {
        if (size < 16) throw FormatError(where + ": fmt chunk too small");
        const std::uint16_t format = binio::read_u16(is);
        const std::uint16_t channels = binio::read_u16(is);
        const std::uint32_t rate = binio::read_u32(is);
        binio::read_u32(is);  // byte rate
        binio::read_u16(is);  // block align
        const std::uint16_t bits = binio::read_u16(is);
        binio::read_bytes(is, size - 16 + (size & 1));
        if (format != 1) throw FormatError(where + ": unsupported encoding (only PCM is accepted)");
        if (channels != 1) throw FormatError(where + ": multi-channel audio is not supported");
        if (bits != 16) throw FormatError(where + ": only 16-bit samples are supported");
        if (rate == 0) throw FormatError(where + ": zero sample rate");
        wav.sample_rate = static_cast<int>(rate);
        have_fmt = true;
      } else if (chunk == "data") {
        if (!have_fmt) throw FormatError(where + ": data chunk before fmt chunk");
        if (size % 2 != 0) throw FormatError(where + ": truncated sample");
        const std::string raw = binio::read_bytes(is, size);
        wav.samples.resize(size / 2);
        for (std::size_t i = 0; i < wav.samples.size(); ++i) {
          const auto lo = static_cast<unsigned char>(raw[2 * i]);
          const auto hi = static_cast<unsigned char>(raw[2 * i + 1]);
          const auto code = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
          wav.samples[i] = static_cast<Scalar>(code) / 32768.0;
        }
        if (wav.samples.empty()) throw FormatError(where + ": no samples");
        return wav;
      } else {
        binio::read_bytes(is, size + (size & 1));
      }
    }
    throw FormatError(where + ": missing data chunk");
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    if (msg.rfind(where, 0) == 0) throw;
    throw FormatError(where + ": " + msg);
  }
}

void write_wav(const std::filesystem::path& path, const Waveform& wav) {
  if (wav.sample_rate <= 0) throw FormatError("write_wav: sample rate must be positive");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError(path.string() + ": cannot open for writing");
  const auto data_bytes = static_cast<std::uint32_t>(wav.samples.size() * 2);
  binio::write_magic(os, "RIFF");
  binio::write_u32(os, 36 + data_bytes);
  binio::write_magic(os, "WAVE");
  binio::write_magic(os, "fmt ");
  binio::write_u32(os, 16);
  binio::write_u16(os, 1);
  binio::write_u16(os, 1);
  binio::write_u32(os, static_cast<std::uint32_t>(wav.sample_rate));
  binio::write_u32(os, static_cast<std::uint32_t>(wav.sample_rate) * 2);
  binio::write_u16(os, 2);
  binio::write_u16(os, 16);
  binio::write_magic(os, "data");
  binio::write_u32(os, data_bytes);
  for (Scalar s : wav.samples) {
    const double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
    const auto code = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    binio::write_u16(os, static_cast<std::uint16_t>(code));
  }
  if (!os) throw FormatError(path.string() + ": write failed");
}

Waveform resample(const Waveform& wav, int target_rate) {
  if (wav.sample_rate <= 0 || target_rate <= 0) throw RangeError("resample: sample rates must be positive");
  if (wav.sample_rate == target_rate) return wav;

  const double ratio = static_cast<double>(target_rate) / wav.sample_rate;
  const auto out_len = static_cast<std::size_t>(std::llround(static_cast<double>(wav.samples.size()) * ratio));
  // Low-pass at the lower of the two Nyquist rates.
  const double cutoff = std::min(1.0, ratio);
  constexpr double kZeroCrossings = 16.0;
  const double half_width = kZeroCrossings / cutoff;

  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(out_len);
  const auto n_in = static_cast<std::ptrdiff_t>(wav.samples.size());
  for (std::size_t n = 0; n < out_len; ++n) {
    const double t = static_cast<double>(n) / ratio;
    const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(t - half_width)));
    const auto hi = std::min<std::ptrdiff_t>(n_in - 1, static_cast<std::ptrdiff_t>(std::floor(t + half_width)));
    double acc = 0;
    for (std::ptrdiff_t k = lo; k <= hi; ++k) {
      const double x = t - static_cast<double>(k);
      const double arg = std::numbers::pi * cutoff * x;
      const double sinc = x == 0 ? 1.0 : std::sin(arg) / arg;
      const double window = 0.5 * (1 + std::cos(std::numbers::pi * x / half_width));
      acc += wav.samples[static_cast<std::size_t>(k)] * cutoff * sinc * window;
    }
    out.samples[n] = acc;
  }
  return out;
}

}  // namespace dvtts
