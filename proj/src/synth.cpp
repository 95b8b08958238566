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

#include "dvtts/synth.hpp"

#include <random>

#include "dvtts/durpred.hpp"
#include "dvtts/encoder.hpp"
#include "dvtts/errors.hpp"

namespace dvtts {

SynthResult synthesize(const TtsModel& model, const Config& cfg, const Vocabulary& vocab,
                       const std::optional<MelStats>& stats, const SynthRequest& req) {
  req.guidance.validate();
  if (req.reference_mel.rank() != 2 || req.reference_mel.cols() != static_cast<std::size_t>(cfg.model.n_mels)) {
    throw DimensionError("reference mel must have " + std::to_string(cfg.model.n_mels) + " bins");
  }
  if (req.guided && !stats) {
    throw ReferenceUnavailableError("mean mel statistics are missing; run `dvtts stats` on the training corpus first");
  }
  if (stats && stats->n_mels() != static_cast<std::size_t>(cfg.model.n_mels)) {
    throw ConfigError("mel statistics have " + std::to_string(stats->n_mels()) + " bins, config has " +
                      std::to_string(cfg.model.n_mels));
  }

  SynthResult out;
  out.tokens = tokenize(req.text, cfg.token_mode);
  const PhonemeSequence seq = encode_text(req.text, vocab, cfg.token_mode);
  const TextEncoding enc = model.encoder.encode(seq);

  std::mt19937_64 rng(req.seed);
  const ReferenceMel window = crop_window(req.reference_mel, static_cast<std::size_t>(cfg.model.ref_frames), rng);
  const Tensor& ref = window.mel;
  out.reference_offset = window.offset;
  const SpeakerEmbedding spk = req.speaker ? *req.speaker : model.speaker.embed(ref);
  if (spk.dim() != model.speaker.dim()) {
    throw DimensionError("speaker embedding has dimension " + std::to_string(spk.dim()) + ", model expects " +
                         std::to_string(model.speaker.dim()));
  }

  Tape tape(false);
  const auto att = model.durations.cross_attend(tape, tape.constant(enc.embeddings), tape.constant(ref), seq.mask);
  const Var log_d = model.durations.predict_log_durations(tape, att.output, seq.mask);
  out.durations = durations_to_frames(log_d.value().data());
  out.durations.resize(seq.real_length());

  out.mu_frames = expand_rows(enc.mu, out.durations);
  std::optional<Tensor> mel_mean;
  if (req.guided) {
    mel_mean = broadcast_mean(*stats, out.mu_frames.rows(), cfg.audio).values;
  }
  out.mel = reverse_sample(model.decoder, out.mu_frames, mel_mean, spk.as_row(), req.guidance, model.schedule, req.seed);
  return out;
}

Waveform vocode(const Tensor& mel, const Config& cfg, std::uint64_t seed) {
  MelSpectrogram m;
  m.values = mel;
  m.sample_rate = cfg.audio.sample_rate;
  m.hop_length = cfg.audio.hop_length;
  m.n_mels = cfg.audio.n_mels;
  return griffin_lim(m, cfg.griffin_lim_iters, cfg.audio, seed);
}

}  // namespace dvtts
