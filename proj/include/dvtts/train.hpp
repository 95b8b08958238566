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

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dvtts/checkpoint.hpp"
#include "dvtts/config.hpp"
#include "dvtts/corpus.hpp"
#include "dvtts/durpred.hpp"
#include "dvtts/model.hpp"
#include "dvtts/optim.hpp"
#include "dvtts/text.hpp"

namespace dvtts {

struct LossTerms {
  double enc = 0;
  double dur = 0;
  double diff = 0;
  double total() const { return enc + dur + diff; }
};

struct EpochReport {
  std::uint64_t epoch = 0;  // 1-based
  LossTerms mean;
};

// "epoch,L_enc,L_dur,L_diff,total" with 9 significant digits.
std::string format_loss_line(const EpochReport& r);
inline constexpr const char* kLossLogHeader = "epoch,L_enc,L_dur,L_diff,total";

// One optimizer step per batch of utterances; each utterance contributes the
// encoder prior loss (MSE of the aligned mu to the target mel), the
// log-duration loss against MAS durations, and the noise-prediction loss.
// Gradients are averaged over the batch. Utterance order and all sampling
// are derived from (seed, epoch, position), so a run can stop and resume
// anywhere with identical results.
class Trainer {
 public:
  Trainer(TtsModel& model, const Config& cfg, const std::vector<Utterance>& corpus, const Vocabulary& vocab);

  // Runs the next batch. Returns the epoch summary when it completed an epoch.
  std::optional<EpochReport> step();
  EpochReport run_epoch();

  const TrainState& state() const { return state_; }
  void restore(const Checkpoint& ckpt);
  Adam& optimizer() { return adam_; }

  // Loss terms for utterance `index`; gradients accumulate when `backprop`.
  LossTerms utterance_losses(std::size_t index, std::mt19937_64& rng, bool backprop);
  // MAS durations under the current encoder.
  std::vector<int> align(std::size_t index) const;
  // Reference window drawn the way training draws it.
  ReferenceMel reference_for(std::size_t index, std::mt19937_64& rng) const;
  const PhonemeSequence& sequence(std::size_t index) const { return sequences_[index]; }
  std::size_t size() const { return corpus_.size(); }

  Checkpoint checkpoint(const Vocabulary& vocab, const std::string& stats_path, std::uint64_t stats_hash) const;

 private:
  std::vector<std::size_t> epoch_order(std::uint64_t epoch) const;

  TtsModel& model_;
  Config cfg_;
  const std::vector<Utterance>& corpus_;
  std::vector<PhonemeSequence> sequences_;
  std::vector<ReferenceCandidate> candidates_;
  std::vector<std::vector<std::size_t>> pool_of_;  // utterance -> candidate indices of its speaker
  Adam adam_;
  TrainState state_;
};

// TtsModel::prepare with statistics taken from the corpus.
void prepare_model(TtsModel& model, const std::vector<Utterance>& corpus, const Vocabulary& vocab, const Config& cfg,
                   const MelStats& stats);

// Copies every model parameter from the checkpoint (names and shapes must match).
void load_parameters(TtsModel& model, const Checkpoint& ckpt);
// Builds a checkpoint of the model alone (no optimizer state).
Checkpoint model_checkpoint(const TtsModel& model, const Config& cfg, const Vocabulary& vocab);

}  // namespace dvtts
