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

#include "dvtts/train.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "dvtts/align.hpp"
#include "dvtts/errors.hpp"

namespace dvtts {

std::string format_loss_line(const EpochReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%llu,%.9g,%.9g,%.9g,%.9g", static_cast<unsigned long long>(r.epoch), r.mean.enc,
                r.mean.dur, r.mean.diff, r.mean.total());
  return buf;
}

namespace {

std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(c)};
  return std::mt19937_64(seq);
}

}  // namespace

Trainer::Trainer(TtsModel& model, const Config& cfg, const std::vector<Utterance>& corpus, const Vocabulary& vocab)
    : model_(model),
      cfg_(cfg),
      corpus_(corpus),
      adam_(model.trainable(), {.lr = cfg.train.learning_rate}) {
  if (corpus_.empty()) throw RangeError("training corpus is empty");
  std::map<std::string, std::vector<std::size_t>> by_speaker;
  for (std::size_t i = 0; i < corpus_.size(); ++i) {
    const Utterance& u = corpus_[i];
    if (u.mel.n_mels != cfg.audio.n_mels) throw ConfigError(u.id + ": mel width differs from config");
    sequences_.push_back(encode_text(u.text, vocab, cfg.token_mode));
    if (u.mel.frames() < sequences_.back().size()) {
      throw InfeasibleError(u.id + ": " + std::to_string(u.mel.frames()) + " frames cannot align " +
                            std::to_string(sequences_.back().size()) + " tokens");
    }
    candidates_.push_back({u.id, u.speaker, &u.mel.values});
    by_speaker[u.speaker].push_back(i);
  }
  pool_of_.resize(corpus_.size());
  for (const auto& [speaker, members] : by_speaker) {
    if (members.size() < 2) {
      throw ReferenceUnavailableError("speaker " + speaker + " has a single utterance (" + corpus_[members[0]].id +
                                      "); training needs an unrelated reference from the same speaker");
    }
    for (std::size_t i : members) pool_of_[i] = members;
  }
}

std::vector<std::size_t> Trainer::epoch_order(std::uint64_t epoch) const {
  std::vector<std::size_t> order(corpus_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto rng = seeded(cfg_.train.seed, epoch, 0, 1);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

ReferenceMel Trainer::reference_for(std::size_t index, std::mt19937_64& rng) const {
  std::vector<ReferenceCandidate> pool;
  for (std::size_t j : pool_of_[index]) pool.push_back(candidates_[j]);
  return crop_reference(pool, corpus_[index].id, rng, static_cast<std::size_t>(cfg_.model.ref_frames));
}

std::vector<int> Trainer::align(std::size_t index) const {
  const TextEncoding enc = model_.encoder.encode(sequences_[index]);
  return mas(gaussian_log_prior(enc.mu, corpus_[index].mel.values)).durations;
}

LossTerms Trainer::utterance_losses(std::size_t index, std::mt19937_64& rng, bool backprop) {
  const Utterance& u = corpus_[index];
  const PhonemeSequence& seq = sequences_[index];
  const ReferenceMel ref = reference_for(index, rng);
  const SpeakerEmbedding spk = model_.speaker.embed(ref.mel);

  Tape tape(backprop);
  const auto enc = model_.encoder.forward(tape, seq);
  const std::vector<int> durs = mas(gaussian_log_prior(enc.mu.value(), u.mel.values)).durations;
  const Var target = tape.constant(u.mel.values);
  const Var mu_frames = expand_rows(enc.mu, durs);
  const Var l_enc = ops::mse(mu_frames, target);

  // The duration predictor sees the text embeddings without pushing
  // gradients back into the encoder.
  const auto att = model_.durations.cross_attend(tape, tape.constant(enc.embeddings.value()), tape.constant(ref.mel),
                                                 seq.mask);
  const Var l_dur = duration_loss(model_.durations.predict_log_durations(tape, att.output, seq.mask), durs, seq.mask);

  const Var spk_row = tape.constant(spk.as_row());
  const NoisePredictor net = [&](Tape& tp, const Tensor& x_t, double t) {
    return model_.decoder.forward(tp, tp.constant(x_t), mu_frames, t, spk_row);
  };
  const Var l_diff = diffusion_loss(tape, net, u.mel.values, mu_frames.value(), rng, model_.schedule);

  const Var total = ops::add(ops::add(l_enc, l_dur), l_diff);
  if (backprop) tape.backward(total);
  return {l_enc.value()[0], l_dur.value()[0], l_diff.value()[0]};
}

std::optional<EpochReport> Trainer::step() {
  const std::vector<std::size_t> order = epoch_order(state_.epoch);
  if (state_.partial.size() != 4) state_.partial.assign(4, 0.0);
  const std::size_t end =
      std::min(order.size(), static_cast<std::size_t>(state_.position) + static_cast<std::size_t>(cfg_.train.batch_size));
  const std::size_t batch = end - static_cast<std::size_t>(state_.position);
  for (std::size_t pos = static_cast<std::size_t>(state_.position); pos < end; ++pos) {
    auto rng = seeded(cfg_.train.seed, state_.epoch, pos, 2);
    const LossTerms l = utterance_losses(order[pos], rng, true);
    state_.partial[0] += l.enc;
    state_.partial[1] += l.dur;
    state_.partial[2] += l.diff;
    state_.partial[3] += 1;
  }
  adam_.step(1.0 / static_cast<double>(batch));
  ++state_.step;
  state_.position = end;
  if (end < order.size()) return std::nullopt;
  EpochReport r;
  r.epoch = state_.epoch + 1;
  const double n = state_.partial[3];
  r.mean = {state_.partial[0] / n, state_.partial[1] / n, state_.partial[2] / n};
  ++state_.epoch;
  state_.position = 0;
  state_.partial.assign(4, 0.0);
  return r;
}

EpochReport Trainer::run_epoch() {
  while (true)
    if (auto r = step()) return *r;
}

void prepare_model(TtsModel& model, const std::vector<Utterance>& corpus, const Vocabulary& vocab, const Config& cfg,
                   const MelStats& stats) {
  std::vector<Tensor> mels;
  std::vector<std::size_t> frames, tokens;
  for (const Utterance& u : corpus) {
    mels.push_back(u.mel.values);
    frames.push_back(u.mel.frames());
    tokens.push_back(encode_text(u.text, vocab, cfg.token_mode).real_length());
  }
  model.prepare(stats, mels, mean_log_duration(frames, tokens));
}

Checkpoint model_checkpoint(const TtsModel& model, const Config& cfg, const Vocabulary& vocab) {
  Checkpoint c;
  c.config_hash = cfg.fingerprint();
  c.config_text = cfg.to_text();
  c.vocabulary = vocab.symbols();
  for (const Parameter* p : model.params().all()) c.tensors.emplace_back(p->name, p->value);
  return c;
}

Checkpoint Trainer::checkpoint(const Vocabulary& vocab, const std::string& stats_path, std::uint64_t stats_hash) const {
  Checkpoint c = model_checkpoint(model_, cfg_, vocab);
  c.stats_path = stats_path;
  c.stats_hash = stats_hash;
  c.state = state_;
  const auto& params = adam_.params();
  auto& self = const_cast<Trainer&>(*this);
  for (std::size_t i = 0; i < params.size(); ++i) {
    c.tensors.emplace_back("adam.m." + params[i]->name, self.adam_.first_moments()[i]);
    c.tensors.emplace_back("adam.v." + params[i]->name, self.adam_.second_moments()[i]);
  }
  return c;
}

void load_parameters(TtsModel& model, const Checkpoint& ckpt) {
  std::size_t expected = 0;
  for (Parameter* p : model.params().all()) {
    const Tensor* t = ckpt.find(p->name);
    if (t == nullptr) throw FormatError("checkpoint lacks parameter " + p->name);
    if (!t->same_shape(p->value)) {
      throw FormatError("checkpoint parameter " + p->name + " has shape " + shape_string(t->shape()) + ", model expects " +
                        shape_string(p->value.shape()));
    }
    p->value = *t;
    p->zero_grad();
    ++expected;
  }
  for (const auto& [name, t] : ckpt.tensors) {
    if (name.rfind("adam.", 0) == 0) continue;
    if (!model.params().contains(name)) throw FormatError("checkpoint has unknown parameter " + name);
  }
  (void)expected;
}

void Trainer::restore(const Checkpoint& ckpt) {
  if (ckpt.config_hash != cfg_.fingerprint()) {
    throw ConfigError("checkpoint was written with a different audio/model/tokenisation config");
  }
  load_parameters(model_, ckpt);
  const auto& params = adam_.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor* m = ckpt.find("adam.m." + params[i]->name);
    const Tensor* v = ckpt.find("adam.v." + params[i]->name);
    if (m == nullptr || v == nullptr) throw FormatError("checkpoint lacks optimizer state for " + params[i]->name);
    adam_.first_moments()[i] = *m;
    adam_.second_moments()[i] = *v;
  }
  adam_.set_steps(ckpt.state.step);
  state_ = ckpt.state;
}

}  // namespace dvtts
