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

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dvtts/audio.hpp"
#include "dvtts/checkpoint.hpp"
#include "dvtts/config.hpp"
#include "dvtts/corpus.hpp"
#include "dvtts/errors.hpp"
#include "dvtts/evalkit.hpp"
#include "dvtts/model.hpp"
#include "dvtts/speaker.hpp"
#include "dvtts/synth.hpp"
#include "dvtts/text.hpp"
#include "dvtts/train.hpp"

namespace fs = std::filesystem;
using namespace dvtts;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
};

Config resolve_config(const Globals& g) {
  Config cfg = g.config.empty() ? Config{} : load_config(g.config);
  if (g.seed) cfg.train.seed = *g.seed;
  cfg.validate();
  return cfg;
}

std::vector<MelSpectrogram> mels_of(const std::vector<Utterance>& corpus) {
  std::vector<MelSpectrogram> out;
  for (const Utterance& u : corpus) out.push_back(u.mel);
  return out;
}

MelStats load_stats(const fs::path& path, const Config& cfg) {
  if (!fs::exists(path)) {
    throw ReferenceUnavailableError("mel statistics file " + path.string() +
                                    " not found; run `dvtts stats` on the training corpus first");
  }
  MelStats stats = read_mel_stats(path);
  if (stats.config_hash != cfg.audio.fingerprint()) {
    throw ConfigError(path.string() + " was computed with different audio settings; rerun `dvtts stats`");
  }
  return stats;
}

int cmd_stats(const Globals& g, const std::string& corpus_dir, const std::string& out) {
  const Config cfg = resolve_config(g);
  const auto corpus = load_corpus(corpus_dir, cfg.audio);
  const MelStats stats = mean_mel(mels_of(corpus), cfg.audio);
  write_mel_stats(out, stats);
  std::printf("frames %llu\n", static_cast<unsigned long long>(stats.frame_count));
  return 0;
}

struct TrainArgs {
  std::string corpus, stats, out, log, resume;
  std::optional<int> epochs;
};

int cmd_train(const Globals& g, const TrainArgs& a) {
  Config cfg = resolve_config(g);
  if (a.epochs) cfg.train.epochs = *a.epochs;
  cfg.validate();
  const auto corpus = load_corpus(a.corpus, cfg.audio);
  const MelStats stats = load_stats(a.stats, cfg);
  std::vector<std::string> texts;
  for (const Utterance& u : corpus) texts.push_back(u.text);
  const Vocabulary vocab = build_vocab(texts, cfg.token_mode);

  TtsModel model(cfg.model, vocab.size(), cfg.train.seed);
  prepare_model(model, corpus, vocab, cfg, stats);
  Trainer trainer(model, cfg, corpus, vocab);
  if (!a.resume.empty()) {
    const Checkpoint ckpt = read_checkpoint(a.resume);
    if (ckpt.vocabulary != vocab.symbols()) throw ConfigError(a.resume + ": vocabulary differs from the corpus");
    trainer.restore(ckpt);
  }

  const fs::path log_path = a.log.empty() ? fs::path(a.out).replace_extension(".loss.csv") : fs::path(a.log);
  const bool fresh_log = a.resume.empty() || !fs::exists(log_path);
  std::ofstream log(log_path, fresh_log ? std::ios::trunc : std::ios::app);
  if (!log) throw FormatError("cannot write " + log_path.string());
  if (fresh_log) log << kLossLogHeader << '\n';

  const std::uint64_t stats_hash = file_hash(a.stats);
  const std::string stats_ref = fs::absolute(a.stats).string();
  const auto epochs = static_cast<std::uint64_t>(cfg.train.epochs);
  while (trainer.state().epoch < epochs) {
    const EpochReport r = trainer.run_epoch();
    const std::string line = format_loss_line(r);
    log << line << '\n';
    log.flush();
    std::printf("%s\n", line.c_str());
    if (r.epoch % static_cast<std::uint64_t>(cfg.train.checkpoint_every) == 0 || r.epoch == epochs) {
      write_checkpoint(a.out, trainer.checkpoint(vocab, stats_ref, stats_hash));
    }
  }
  return 0;
}

struct SynthArgs {
  std::string checkpoint, text, reference, out, stats, speaker_embedding;
  std::optional<double> gamma, temperature;
  std::optional<int> steps;
  bool no_guidance = false;
};

int cmd_synth(const Globals& g, const SynthArgs& a) {
  const Checkpoint ckpt = read_checkpoint(a.checkpoint);
  Config cfg = parse_config(ckpt.config_text, a.checkpoint);
  if (!g.config.empty()) {
    // Inference settings may come from a config file; tensor-shaping ones must agree.
    const Config override = load_config(g.config);
    if (override.fingerprint() != ckpt.config_hash) {
      throw ConfigError(g.config + " does not match the audio/model settings of " + a.checkpoint);
    }
    cfg.guidance = override.guidance;
    cfg.griffin_lim_iters = override.griffin_lim_iters;
  }
  if (a.gamma) cfg.guidance.gamma = *a.gamma;
  if (a.steps) cfg.guidance.steps = *a.steps;
  if (a.temperature) cfg.guidance.temperature = *a.temperature;
  cfg.guidance.validate();
  const std::uint64_t seed = g.seed.value_or(0);

  const Vocabulary vocab(ckpt.vocabulary);
  TtsModel model(cfg.model, vocab.size(), 0);
  load_parameters(model, ckpt);

  std::optional<MelStats> stats;
  if (!a.no_guidance) {
    const fs::path stats_path = a.stats.empty() ? fs::path(ckpt.stats_path) : fs::path(a.stats);
    if (stats_path.empty()) {
      throw ReferenceUnavailableError(a.checkpoint + " names no mel statistics file; run `dvtts stats` and pass --stats");
    }
    stats = load_stats(stats_path, cfg);
    if (a.stats.empty() && ckpt.stats_hash != 0 && file_hash(stats_path) != ckpt.stats_hash) {
      throw ConfigError(stats_path.string() + " changed since training; pass --stats explicitly to use it anyway");
    }
  }

  Waveform ref = load_wav(a.reference);
  if (ref.sample_rate != cfg.audio.sample_rate) ref = resample(ref, cfg.audio.sample_rate);
  SynthRequest req;
  req.text = a.text;
  req.reference_mel = wav_to_mel(ref, cfg.audio).values;
  if (!a.speaker_embedding.empty()) req.speaker = load_external_embedding(a.speaker_embedding);
  req.guidance = cfg.guidance;
  req.guided = !a.no_guidance;
  req.seed = seed;
  const SynthResult res = synthesize(model, cfg, vocab, stats, req);

  std::size_t total = 0;
  for (std::size_t i = 0; i < res.durations.size(); ++i) {
    std::printf("%s\t%d\n", res.tokens[i].c_str(), res.durations[i]);
    total += static_cast<std::size_t>(res.durations[i]);
  }
  std::printf("total\t%zu\n", total);
  write_wav(a.out, vocode(res.mel, cfg, seed));
  return 0;
}

int cmd_eval(const std::string& manifest, const std::string& mode, const std::string& format, const std::string& out) {
  const auto records = read_manifest(manifest);
  const MetricTable table = aggregate(records, parse_metric(mode));
  const std::string text = render_table(table, parse_table_format(format));
  if (out.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    std::ofstream os(out, std::ios::binary);
    if (!os) throw FormatError("cannot write " + out);
    os << text;
  }
  if (table.skipped > 0) std::fprintf(stderr, "skipped %zu records without a %s value\n", table.skipped, mode.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion TTS toolkit: corpus statistics, training, synthesis and evaluation"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed_value = 0;
  app.add_option("--config", g.config, "key=value configuration file")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed_value, "seed for every random draw");

  std::string corpus_dir, stats_out;
  auto* stats_cmd = app.add_subcommand("stats", "dataset mean mel frame");
  stats_cmd->add_option("corpus", corpus_dir, "corpus directory")->required();
  stats_cmd->add_option("--out", stats_out, "output statistics file")->required();

  TrainArgs ta;
  int epochs = 0;
  auto* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("corpus", ta.corpus, "corpus directory")->required();
  train_cmd->add_option("--stats", ta.stats, "statistics file from `dvtts stats`")->required();
  train_cmd->add_option("--out", ta.out, "checkpoint path")->required();
  train_cmd->add_option("--log", ta.log, "loss log (default: <out>.loss.csv)");
  train_cmd->add_option("--resume", ta.resume, "continue from this checkpoint")->check(CLI::ExistingFile);
  auto* epochs_opt = train_cmd->add_option("--epochs", epochs, "override the configured epoch count");

  SynthArgs sa;
  double gamma = 1.0, temperature = 1.5;
  int steps = 50;
  auto* synth_cmd = app.add_subcommand("synth", "synthesise speech");
  synth_cmd->add_option("--checkpoint", sa.checkpoint, "trained checkpoint")->required()->check(CLI::ExistingFile);
  synth_cmd->add_option("--text", sa.text, "text to speak")->required();
  synth_cmd->add_option("--reference", sa.reference, "reference WAV of the target speaker")->required();
  synth_cmd->add_option("--out", sa.out, "output WAV")->required();
  auto* gamma_opt = synth_cmd->add_option("--gamma", gamma, "guidance scale");
  auto* steps_opt = synth_cmd->add_option("--steps", steps, "reverse diffusion steps");
  auto* temp_opt = synth_cmd->add_option("--temperature", temperature, "initial noise temperature");
  synth_cmd->add_option("--stats", sa.stats, "statistics file (default: the one recorded at training)");
  synth_cmd->add_option("--speaker-embedding", sa.speaker_embedding, "external SPKEMB01 embedding");
  synth_cmd->add_flag("--no-guidance", sa.no_guidance, "conditional score only");

  std::string manifest, mode = "cer", format = "tsv", eval_out;
  auto* eval_cmd = app.add_subcommand("eval", "aggregate CER/WER/SIM-O tables");
  eval_cmd->add_option("manifest", manifest, "TSV manifest")->required();
  eval_cmd->add_option("--mode", mode, "cer | wer | simo");
  eval_cmd->add_option("--format", format, "tsv | markdown");
  eval_cmd->add_option("--out", eval_out, "write the table here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (*seed_opt) g.seed = seed_value;
  if (*epochs_opt) ta.epochs = epochs;
  if (*gamma_opt) sa.gamma = gamma;
  if (*steps_opt) sa.steps = steps;
  if (*temp_opt) sa.temperature = temperature;

  try {
    if (*stats_cmd) return cmd_stats(g, corpus_dir, stats_out);
    if (*train_cmd) return cmd_train(g, ta);
    if (*synth_cmd) return cmd_synth(g, sa);
    if (*eval_cmd) return cmd_eval(manifest, mode, format, eval_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "dvtts: error: %s\n", e.what());
    return 1;
  }
  return 1;
}
