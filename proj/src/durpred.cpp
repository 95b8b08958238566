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

#include "dvtts/durpred.hpp"

#include <algorithm>
#include <cmath>

#include "dvtts/errors.hpp"

namespace dvtts {

ReferenceMel crop_window(const Tensor& mel, std::size_t frames, std::mt19937_64& rng) {
  if (mel.rank() != 2 || mel.rows() == 0) throw DimensionError("crop_window: empty mel");
  if (frames == 0) throw RangeError("crop_window: zero-length window");
  const std::size_t src = mel.rows();
  const std::size_t reps = (frames + src - 1) / src;
  const std::size_t tiled = reps * src;
  std::uniform_int_distribution<std::size_t> pick(0, tiled - frames);
  const std::size_t offset = pick(rng);
  Tensor out = Tensor::matrix(frames, mel.cols());
  for (std::size_t f = 0; f < frames; ++f) {
    const auto row = mel.row_span((offset + f) % src);
    std::copy(row.begin(), row.end(), out.row_span(f).begin());
  }
  return {std::move(out), {}, {}, offset};
}

ReferenceMel crop_reference(std::span<const ReferenceCandidate> pool, const std::string& target_id,
                            std::mt19937_64& rng, std::size_t frames, std::optional<FrameRange> target_region) {
  if (pool.empty()) throw ReferenceUnavailableError("crop_reference: empty reference pool");
  std::vector<const ReferenceCandidate*> others;
  const ReferenceCandidate* target = nullptr;
  for (const auto& c : pool) {
    if (c.mel == nullptr) throw DimensionError("crop_reference: candidate without mel");
    if (c.id == target_id) {
      target = &c;
    } else {
      others.push_back(&c);
    }
  }
  if (!others.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, others.size() - 1);
    const ReferenceCandidate& src = *others[pick(rng)];
    ReferenceMel ref = crop_window(*src.mel, frames, rng);
    ref.source_id = src.id;
    ref.speaker = src.speaker;
    return ref;
  }
  const std::string who = target ? target->speaker : std::string("?");
  if (!target_region) {
    throw ReferenceUnavailableError("speaker " + who + ": no second utterance and no declared target region for " +
                                    target_id);
  }
  const std::size_t n = target->mel->rows();
  const FrameRange r = *target_region;
  // Window starts that avoid [r.begin, r.end).
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + frames <= n; ++s)
    if (s + frames <= r.begin || s >= r.end) starts.push_back(s);
  if (starts.empty()) {
    throw ReferenceUnavailableError("speaker " + who + ": utterance " + target_id + " has no " +
                                    std::to_string(frames) + "-frame window outside the target region");
  }
  std::uniform_int_distribution<std::size_t> pick(0, starts.size() - 1);
  const std::size_t s = starts[pick(rng)];
  Tensor out = Tensor::matrix(frames, target->mel->cols());
  for (std::size_t f = 0; f < frames; ++f) {
    const auto row = target->mel->row_span(s + f);
    std::copy(row.begin(), row.end(), out.row_span(f).begin());
  }
  return {std::move(out), target->id, target->speaker, s};
}

DurationPredictor::DurationPredictor(ParamStore& store, const ModelConfig& cfg, std::mt19937_64& rng) {
  const auto d = static_cast<std::size_t>(cfg.d_model);
  const auto k = static_cast<std::size_t>(cfg.kernel);
  heads_ = static_cast<std::size_t>(cfg.dur_heads);
  if (heads_ == 0 || d % heads_ != 0) throw ConfigError("dur_heads must divide d_model");
  query_ = Linear(store, "dur.query", d, d, rng);
  ref_proj_ = Linear(store, "dur.ref", static_cast<std::size_t>(cfg.n_mels), d, rng);
  conv1_ = Conv1d(store, "dur.conv1", k, d, d, rng);
  norm1_ = LayerNorm(store, "dur.norm1", d);
  conv2_ = Conv1d(store, "dur.conv2", k, d, d, rng);
  norm2_ = LayerNorm(store, "dur.norm2", d);
  head_ = Linear(store, "dur.head", d, 1, rng);
}

DurationPredictor::Attention DurationPredictor::cross_attend(Tape& tape, const Var& text, const Var& reference,
                                                             std::span<const std::uint8_t> mask) const {
  if (text.value().cols() != query_.in()) throw DimensionError("cross_attend: text width mismatch");
  if (reference.value().cols() != ref_proj_.in()) throw DimensionError("cross_attend: reference mel width mismatch");
  if (mask.size() != text.value().rows()) throw DimensionError("cross_attend: mask length mismatch");
  const std::size_t d = query_.out(), dh = d / heads_;
  const Var q = query_(tape, text);
  const Var m = ref_proj_(tape, reference);
  Attention out;
  std::vector<Var> parts;
  for (std::size_t h = 0; h < heads_; ++h) {
    const Var qh = heads_ == 1 ? q : ops::slice_cols(q, h * dh, (h + 1) * dh);
    const Var mh = heads_ == 1 ? m : ops::slice_cols(m, h * dh, (h + 1) * dh);
    const Var scores = ops::scale(ops::matmul(qh, ops::transpose(mh)), 1.0 / std::sqrt(static_cast<double>(dh)));
    const Var w = ops::softmax_rows(scores);
    out.weights.push_back(w);
    parts.push_back(ops::matmul(w, mh));
  }
  out.output = ops::mask_rows(heads_ == 1 ? parts[0] : ops::concat_cols(parts), mask);
  return out;
}

Var DurationPredictor::predict_log_durations(Tape& tape, const Var& attended, std::span<const std::uint8_t> mask) const {
  ensure_finite(attended.value(), "predict_log_durations");
  Var h = ops::mask_rows(norm1_(tape, ops::relu(conv1_(tape, attended))), mask);
  h = ops::mask_rows(norm2_(tape, ops::relu(conv2_(tape, h))), mask);
  return ops::mask_rows(head_(tape, h), mask);
}

std::vector<int> durations_to_frames(std::span<const Scalar> log_durations) {
  std::vector<int> out;
  for (Scalar v : log_durations) {
    if (!std::isfinite(v)) throw NumericError("durations_to_frames: non-finite log duration");
    const double frames = std::round(std::exp(std::min(v, 20.0)));
    out.push_back(std::max(1, static_cast<int>(frames)));
  }
  return out;
}

Var duration_loss(const Var& log_pred, const std::vector<int>& durations, std::span<const std::uint8_t> mask) {
  const Tensor& pred = log_pred.value();
  if (pred.rows() != durations.size() || pred.cols() != 1 || mask.size() != durations.size()) {
    throw DimensionError("duration_loss: length mismatch");
  }
  Tensor target = Tensor::matrix(durations.size(), 1);
  std::size_t real = 0;
  for (std::size_t p = 0; p < durations.size(); ++p) {
    if (!mask[p]) continue;
    if (durations[p] < 1) throw InvalidTargetError("duration_loss: target duration " + std::to_string(durations[p]));
    target(p, 0) = std::log(static_cast<double>(durations[p]));
    ++real;
  }
  if (real == 0) throw RangeError("duration_loss: no real positions");
  Tape& tape = *log_pred.tape();
  const Var diff = ops::mask_rows(ops::sub(log_pred, tape.constant(target)), mask);
  return ops::scale(ops::sum(ops::square(diff)), 1.0 / static_cast<double>(real));
}

}  // namespace dvtts
