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

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dvtts/tensor.hpp"

namespace dvtts {

struct Waveform {
  std::vector<Scalar> samples;
  int sample_rate = 0;

  double seconds() const { return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0; }
};

// STFT / mel analysis parameters. Defaults follow the usual 22.05 kHz
// HiFi-GAN front end.
struct AnalysisConfig {
  int sample_rate = 22050;
  int n_fft = 1024;
  int hop_length = 256;
  int win_length = 1024;
  int n_mels = 80;
  double fmin = 0.0;
  double fmax = 8000.0;

  // Throws ConfigError for inconsistent values.
  void validate() const;
  // Stable hash of every field; stored in stats and checkpoint files.
  std::uint64_t fingerprint() const;
  // Frames covering `seconds` of audio: round(seconds * sample_rate / hop).
  std::size_t frames_for_seconds(double seconds) const;

  bool operator==(const AnalysisConfig&) const = default;
};

// Log-magnitude mel spectrogram, frames x n_mels.
struct MelSpectrogram {
  Tensor values;
  int sample_rate = 0;
  int hop_length = 0;
  int n_mels = 0;

  std::size_t frames() const { return values.rows(); }
};

inline constexpr double kLogFloor = 1e-5;
// mel_to_linear clamps log values here so that wild inputs stay finite.
inline constexpr double kMaxLogMel = 30.0;

// 16-bit PCM mono RIFF/WAVE. Samples are scaled by 1/32768 on load; on write
// they are clamped to [-1, 1] and rounded to the nearest code.
Waveform load_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const Waveform& wav);

// Band-limited (Hann-windowed sinc) resampling. Output length is
// round(len * target / source).
Waveform resample(const Waveform& wav, int target_rate);

// HTK mel scale.
double hz_to_mel(double hz);
double mel_to_hz(double mel);
// Triangular filterbank, n_mels x (n_fft/2 + 1), peak weight 1.
Tensor mel_filterbank(const AnalysisConfig& cfg);
// Centre frequency in Hz of each mel filter.
std::vector<double> mel_center_frequencies(const AnalysisConfig& cfg);

using ComplexFrames = std::vector<std::vector<std::complex<double>>>;

// Centred STFT with reflect padding of n_fft/2 and a periodic Hann window.
// Yields 1 + floor(len / hop) frames of n_fft/2 + 1 bins.
ComplexFrames stft(std::span<const Scalar> samples, const AnalysisConfig& cfg);
// Inverse of stft() by weighted overlap-add; returns (frames - 1) * hop samples.
std::vector<Scalar> istft(const ComplexFrames& frames, const AnalysisConfig& cfg);
// |stft| as a frames x (n_fft/2 + 1) tensor.
Tensor stft_magnitude(std::span<const Scalar> samples, const AnalysisConfig& cfg);

MelSpectrogram wav_to_mel(const Waveform& wav, const AnalysisConfig& cfg);

// Dataset-wide mean mel frame.
struct MelStats {
  std::vector<Scalar> mean_frame;
  std::uint64_t frame_count = 0;
  std::uint64_t config_hash = 0;

  std::size_t n_mels() const { return mean_frame.size(); }
};

// Per-bin mean over every frame of every utterance. The per-bin sums are
// order independent, so any permutation of `corpus` gives identical bits.
MelStats mean_mel(std::span<const MelSpectrogram> corpus, const AnalysisConfig& cfg);
// mean_frame tiled to frames x n_mels.
MelSpectrogram broadcast_mean(const MelStats& stats, std::size_t frames, const AnalysisConfig& cfg);

// "MELSTATS" file: magic, u32 version, u32 n_mels, u64 frame_count,
// u64 config hash, f32 mean values, all little-endian.
void write_mel_stats(const std::filesystem::path& path, const MelStats& stats);
MelStats read_mel_stats(const std::filesystem::path& path);

// Mel -> linear magnitude by the clamped pseudo-inverse of the filterbank,
// then `iterations` rounds of Griffin-Lim phase recovery starting from a
// seeded random phase.
Waveform griffin_lim(const MelSpectrogram& mel, int iterations, const AnalysisConfig& cfg,
                     std::uint64_t seed = 0);
// Linear magnitude implied by a mel spectrogram (frames x n_fft/2+1).
Tensor mel_to_linear(const MelSpectrogram& mel, const AnalysisConfig& cfg);

}  // namespace dvtts
