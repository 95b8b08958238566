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

#include <fftw3.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>

#include "dvtts/audio.hpp"
#include "dvtts/autodiff.hpp"
#include "dvtts/binio.hpp"
#include "dvtts/errors.hpp"

namespace dvtts {

void AnalysisConfig::validate() const {
  if (sample_rate <= 0) throw ConfigError("sample_rate must be positive");
  if (n_fft <= 0 || n_fft % 2 != 0) throw ConfigError("n_fft must be a positive even number");
  if (hop_length <= 0) throw ConfigError("hop_length must be positive");
  if (win_length <= 0 || win_length > n_fft) throw ConfigError("win_length must lie in [1, n_fft]");
  if (n_mels <= 0) throw ConfigError("n_mels must be positive");
  if (!(fmin >= 0 && fmax > fmin && fmax <= sample_rate / 2.0)) {
    throw ConfigError("need 0 <= fmin < fmax <= sample_rate / 2");
  }
}

std::uint64_t AnalysisConfig::fingerprint() const {
  std::ostringstream os;
  os.precision(17);
  os << "sample_rate=" << sample_rate << ";n_fft=" << n_fft << ";hop_length=" << hop_length
     << ";win_length=" << win_length << ";n_mels=" << n_mels << ";fmin=" << fmin << ";fmax=" << fmax;
  return binio::fnv1a64(os.str());
}

std::size_t AnalysisConfig::frames_for_seconds(double seconds) const {
  return static_cast<std::size_t>(std::llround(seconds * sample_rate / hop_length));
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

std::vector<double> mel_edges(const AnalysisConfig& cfg) {
  const double lo = hz_to_mel(cfg.fmin), hi = hz_to_mel(cfg.fmax);
  std::vector<double> edges(static_cast<std::size_t>(cfg.n_mels) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cfg.n_mels + 1));
  }
  return edges;
}

std::vector<double> hann_window(const AnalysisConfig& cfg) {
  // Periodic Hann of win_length, zero-padded to n_fft and centred.
  std::vector<double> w(static_cast<std::size_t>(cfg.n_fft), 0.0);
  const int offset = (cfg.n_fft - cfg.win_length) / 2;
  for (int i = 0; i < cfg.win_length; ++i) {
    w[static_cast<std::size_t>(offset + i)] = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * i / cfg.win_length);
  }
  return w;
}

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    std::lock_guard lock(fftw_planner_mutex());
    real_ = fftw_alloc_real(static_cast<std::size_t>(n));
    spec_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    forward_ = fftw_plan_dft_r2c_1d(n, real_, spec_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(n, spec_, real_, FFTW_ESTIMATE);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  ~RealFft() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(real_);
    fftw_free(spec_);
  }

  void forward(const double* in, std::complex<double>* out) {
    std::copy_n(in, n_, real_);
    fftw_execute(forward_);
    for (int k = 0; k <= n_ / 2; ++k) out[k] = {spec_[k][0], spec_[k][1]};
  }

  // Unnormalised inverse (result scaled by n).
  void inverse(const std::complex<double>* in, double* out) {
    for (int k = 0; k <= n_ / 2; ++k) {
      spec_[k][0] = in[k].real();
      spec_[k][1] = in[k].imag();
    }
    fftw_execute(inverse_);
    std::copy_n(real_, n_, out);
  }

 private:
  int n_;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

void check_mel_matches(const MelSpectrogram& mel, const AnalysisConfig& cfg, const char* where) {
  if (mel.sample_rate != cfg.sample_rate || mel.hop_length != cfg.hop_length || mel.n_mels != cfg.n_mels ||
      mel.values.cols() != static_cast<std::size_t>(cfg.n_mels)) {
    throw ConfigError(std::string(where) + ": mel spectrogram was computed with a different analysis config");
  }
}

}  // namespace

Tensor mel_filterbank(const AnalysisConfig& cfg) {
  cfg.validate();
  const std::size_t bins = static_cast<std::size_t>(cfg.n_fft / 2 + 1);
  const std::vector<double> edges = mel_edges(cfg);
  Tensor fb = Tensor::matrix(static_cast<std::size_t>(cfg.n_mels), bins);
  for (std::size_t m = 0; m < fb.rows(); ++m) {
    const double lo = edges[m], centre = edges[m + 1], hi = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / cfg.n_fft;
      const double w = std::min((f - lo) / (centre - lo), (hi - f) / (hi - centre));
      fb(m, k) = std::max(0.0, w);
    }
  }
  return fb;
}

std::vector<double> mel_center_frequencies(const AnalysisConfig& cfg) {
  const std::vector<double> edges = mel_edges(cfg);
  return {edges.begin() + 1, edges.end() - 1};
}

ComplexFrames stft(std::span<const Scalar> samples, const AnalysisConfig& cfg) {
  cfg.validate();
  const auto n_fft = static_cast<std::size_t>(cfg.n_fft);
  if (samples.size() < n_fft) {
    throw TooShortError("stft: input of " + std::to_string(samples.size()) + " samples is shorter than one " +
                        std::to_string(n_fft) + "-sample window");
  }
  const std::size_t pad = n_fft / 2;
  const std::size_t len = samples.size();
  std::vector<double> padded(len + 2 * pad);
  for (std::size_t i = 0; i < padded.size(); ++i) {
    // Reflect without repeating the edge sample.
    std::ptrdiff_t src = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(pad);
    if (src < 0) src = -src;
    if (src >= static_cast<std::ptrdiff_t>(len)) src = 2 * static_cast<std::ptrdiff_t>(len) - 2 - src;
    padded[i] = samples[static_cast<std::size_t>(src)];
  }
  const std::vector<double> window = hann_window(cfg);
  const std::size_t hop = static_cast<std::size_t>(cfg.hop_length);
  const std::size_t frames = 1 + len / hop;
  RealFft fft(cfg.n_fft);
  ComplexFrames out(frames, std::vector<std::complex<double>>(n_fft / 2 + 1));
  std::vector<double> buf(n_fft);
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t i = 0; i < n_fft; ++i) buf[i] = padded[f * hop + i] * window[i];
    fft.forward(buf.data(), out[f].data());
  }
  return out;
}

std::vector<Scalar> istft(const ComplexFrames& frames, const AnalysisConfig& cfg) {
  cfg.validate();
  if (frames.empty()) throw RangeError("istft: no frames");
  const auto n_fft = static_cast<std::size_t>(cfg.n_fft);
  const std::size_t hop = static_cast<std::size_t>(cfg.hop_length);
  const std::vector<double> window = hann_window(cfg);
  const std::size_t total = n_fft + hop * (frames.size() - 1);
  std::vector<double> acc(total, 0.0), norm(total, 0.0), buf(n_fft);
  RealFft fft(cfg.n_fft);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (frames[f].size() != n_fft / 2 + 1) throw DimensionError("istft: frame has the wrong number of bins");
    fft.inverse(frames[f].data(), buf.data());
    for (std::size_t i = 0; i < n_fft; ++i) {
      acc[f * hop + i] += buf[i] / static_cast<double>(n_fft) * window[i];
      norm[f * hop + i] += window[i] * window[i];
    }
  }
  const std::size_t pad = n_fft / 2;
  std::vector<Scalar> out(hop * (frames.size() - 1));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double w = norm[pad + i];
    out[i] = w > 1e-10 ? acc[pad + i] / w : 0.0;
  }
  return out;
}

Tensor stft_magnitude(std::span<const Scalar> samples, const AnalysisConfig& cfg) {
  const ComplexFrames spec = stft(samples, cfg);
  Tensor mag = Tensor::matrix(spec.size(), spec[0].size());
  for (std::size_t f = 0; f < spec.size(); ++f)
    for (std::size_t k = 0; k < spec[f].size(); ++k) mag(f, k) = std::abs(spec[f][k]);
  return mag;
}

MelSpectrogram wav_to_mel(const Waveform& wav, const AnalysisConfig& cfg) {
  cfg.validate();
  if (wav.sample_rate != cfg.sample_rate) {
    throw ConfigError("wav_to_mel: waveform is " + std::to_string(wav.sample_rate) + " Hz, config expects " +
                      std::to_string(cfg.sample_rate) + " Hz");
  }
  const Tensor mag = stft_magnitude(wav.samples, cfg);
  Tensor mel = matmul_nt(mag, mel_filterbank(cfg));
  for (Scalar& v : mel.storage()) v = std::log(std::max(v, kLogFloor));
  return MelSpectrogram{std::move(mel), cfg.sample_rate, cfg.hop_length, cfg.n_mels};
}

MelStats mean_mel(std::span<const MelSpectrogram> corpus, const AnalysisConfig& cfg) {
  if (corpus.empty()) throw RangeError("mean_mel: empty corpus");
  const auto n_mels = static_cast<std::size_t>(cfg.n_mels);
  std::uint64_t frames = 0;
  for (const MelSpectrogram& m : corpus) {
    check_mel_matches(m, cfg, "mean_mel");
    frames += m.frames();
  }
  MelStats stats;
  stats.mean_frame.resize(n_mels);
  stats.frame_count = frames;
  stats.config_hash = cfg.fingerprint();
  std::vector<Scalar> column;
  column.reserve(frames);
  for (std::size_t b = 0; b < n_mels; ++b) {
    column.clear();
    for (const MelSpectrogram& m : corpus)
      for (std::size_t f = 0; f < m.frames(); ++f) column.push_back(m.values(f, b));
    stats.mean_frame[b] = order_independent_sum(column) / static_cast<Scalar>(frames);
  }
  return stats;
}

MelSpectrogram broadcast_mean(const MelStats& stats, std::size_t frames, const AnalysisConfig& cfg) {
  if (frames == 0) throw RangeError("broadcast_mean: frames must be >= 1");
  if (stats.config_hash != cfg.fingerprint() || stats.n_mels() != static_cast<std::size_t>(cfg.n_mels)) {
    throw ConfigError("broadcast_mean: stats were computed with a different analysis config");
  }
  Tensor values = Tensor::matrix(frames, stats.n_mels());
  for (std::size_t f = 0; f < frames; ++f) std::copy(stats.mean_frame.begin(), stats.mean_frame.end(), &values(f, 0));
  return MelSpectrogram{std::move(values), cfg.sample_rate, cfg.hop_length, cfg.n_mels};
}

namespace {
constexpr std::uint32_t kMelStatsVersion = 1;
}

void write_mel_stats(const std::filesystem::path& path, const MelStats& stats) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError(path.string() + ": cannot open for writing");
  binio::write_magic(os, "MELSTATS");
  binio::write_u32(os, kMelStatsVersion);
  binio::write_u32(os, static_cast<std::uint32_t>(stats.n_mels()));
  binio::write_u64(os, stats.frame_count);
  binio::write_u64(os, stats.config_hash);
  for (Scalar v : stats.mean_frame) binio::write_f32(os, static_cast<float>(v));
  if (!os) throw FormatError(path.string() + ": write failed");
}

MelStats read_mel_stats(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(path.string() + ": cannot open");
  try {
    binio::expect_magic(is, "MELSTATS", "mel stats");
    const std::uint32_t version = binio::read_u32(is);
    if (version != kMelStatsVersion) throw FormatError("unsupported version " + std::to_string(version));
    const std::uint32_t n_mels = binio::read_u32(is);
    MelStats stats;
    stats.frame_count = binio::read_u64(is);
    stats.config_hash = binio::read_u64(is);
    if (n_mels == 0 || stats.frame_count == 0) throw FormatError("empty statistics");
    stats.mean_frame.resize(n_mels);
    for (Scalar& v : stats.mean_frame) {
      v = binio::read_f32(is);
      if (!std::isfinite(v)) throw FormatError("non-finite mean value");
    }
    return stats;
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

Tensor mel_to_linear(const MelSpectrogram& mel, const AnalysisConfig& cfg) {
  check_mel_matches(mel, cfg, "mel_to_linear");
  const Tensor fb = mel_filterbank(cfg);
  Eigen::MatrixXd basis(fb.rows(), fb.cols());
  for (std::size_t r = 0; r < fb.rows(); ++r)
    for (std::size_t c = 0; c < fb.cols(); ++c) basis(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = fb(r, c);
  const Eigen::MatrixXd pinv = basis.completeOrthogonalDecomposition().pseudoInverse();
  Tensor lin = Tensor::matrix(mel.frames(), fb.cols());
  Eigen::VectorXd power(fb.rows());
  for (std::size_t f = 0; f < mel.frames(); ++f) {
    for (std::size_t m = 0; m < fb.rows(); ++m) power(static_cast<Eigen::Index>(m)) = std::exp(std::min(mel.values(f, m), kMaxLogMel));
    const Eigen::VectorXd x = pinv * power;
    for (std::size_t k = 0; k < fb.cols(); ++k) lin(f, k) = std::max(0.0, x(static_cast<Eigen::Index>(k)));
  }
  return lin;
}

Waveform griffin_lim(const MelSpectrogram& mel, int iterations, const AnalysisConfig& cfg, std::uint64_t seed) {
  if (iterations < 1) throw RangeError("griffin_lim: iterations must be >= 1");
  const Tensor mag = mel_to_linear(mel, cfg);
  const std::size_t frames = mag.rows(), bins = mag.cols();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(-std::numbers::pi, std::numbers::pi);
  ComplexFrames spec(frames, std::vector<std::complex<double>>(bins));
  for (std::size_t f = 0; f < frames; ++f)
    for (std::size_t k = 0; k < bins; ++k) spec[f][k] = std::polar(mag(f, k), phase(rng));

  std::vector<Scalar> signal = istft(spec, cfg);
  // A single frame yields no samples; there is nothing to refine.
  if (signal.size() >= static_cast<std::size_t>(cfg.n_fft)) {
    for (int it = 0; it < iterations; ++it) {
      const ComplexFrames est = stft(signal, cfg);
      for (std::size_t f = 0; f < frames; ++f)
        for (std::size_t k = 0; k < bins; ++k) {
          const double a = std::abs(est[f][k]);
          spec[f][k] = a > 1e-12 ? mag(f, k) * est[f][k] / a : std::complex<double>(mag(f, k), 0.0);
        }
      signal = istft(spec, cfg);
    }
  }
  return Waveform{std::move(signal), cfg.sample_rate};
}

}  // namespace dvtts
