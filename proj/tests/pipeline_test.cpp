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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "dvtts/checkpoint.hpp"
#include "dvtts/config.hpp"
#include "dvtts/corpus.hpp"
#include "dvtts/errors.hpp"
#include "dvtts/model.hpp"
#include "dvtts/synth.hpp"
#include "dvtts/train.hpp"
#include "pipeline_util.hpp"

using namespace dvtts;
namespace fs = std::filesystem;

namespace {

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("config parsing") {
  const Config c = parse_config("# toy\nn_mels = 40\nd_model=64\n\nlearning_rate=3e-4  # faster\ntoken_mode=phonemes\n");
  CHECK(c.audio.n_mels == 40);
  CHECK(c.model.n_mels == 40);
  CHECK(c.model.d_model == 64);
  CHECK(c.train.learning_rate == 3e-4);
  CHECK(c.token_mode == TokenMode::phonemes);
  CHECK(c.train.batch_size == 64);

  CHECK(error_of([] { parse_config("n_mels=40\nwarmup=10\n", "toy.cfg"); }).find("toy.cfg:2") != std::string::npos);
  CHECK(error_of([] { parse_config("n_mels=40\nwarmup=10\n"); }).find("warmup") != std::string::npos);
  CHECK_THROWS_AS(parse_config("epochs=ten\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("d_model\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("enc_heads=3\n"), ConfigError);  // d_model 128 not divisible
  CHECK_THROWS_AS(parse_config("gamma=-1\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/dvtts.cfg"), ConfigError);
}

TEST_CASE("config text round trip and fingerprint scope") {
  Config c = testing::small_pipeline_config();
  c.guidance.gamma = 2.5;
  c.train.learning_rate = 0.1 + 0.2;  // not exactly representable in short decimal
  CHECK(parse_config(c.to_text()) == c);

  Config other = c;
  other.train.epochs = 7;
  other.guidance.steps = 3;
  CHECK(other.fingerprint() == c.fingerprint());
  other.model.d_model = 32;
  CHECK(other.fingerprint() != c.fingerprint());
  other = c;
  other.token_mode = TokenMode::phonemes;
  CHECK(other.fingerprint() != c.fingerprint());
}

TEST_CASE("checkpoint round trip is bit exact") {
  Checkpoint c;
  c.config_hash = 0x0123456789abcdefULL;
  c.tensors.emplace_back("enc.embed", Tensor({3, 2}, {1.5, -2.25, 0.0, 3.0, 1e-7f, -0.0}));
  c.tensors.emplace_back("dec.conv_in.w", Tensor({3, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}));
  c.config_text = "n_mels=80\n";
  c.vocabulary = {"a", "\xc3\xa9", " "};
  c.stats_path = "/data/stats.bin";
  c.stats_hash = 77;
  c.state = {3, 5, 42, {1.25, 2.5, 3.75, 4.0}};
  const auto path = testing::scratch_dir("ckpt") / "a.ckpt";
  write_checkpoint(path, c);
  const Checkpoint back = read_checkpoint(path);
  CHECK(back == c);
  REQUIRE(back.find("enc.embed") != nullptr);
  CHECK(back.find("missing") == nullptr);

  // Values not representable in f32 are rejected rather than silently rounded.
  Checkpoint wide = c;
  wide.tensors[0].second[0] = 0.1;
  CHECK_THROWS_AS(write_checkpoint(path.string() + ".wide", wide), RangeError);
}

TEST_CASE("corrupt checkpoints are rejected") {
  Checkpoint c;
  c.tensors.emplace_back("w", Tensor({2, 2}, {1, 2, 3, 4}));
  const auto dir = testing::scratch_dir("ckpt_bad");
  write_checkpoint(dir / "ok.ckpt", c);
  const std::string bytes = slurp(dir / "ok.ckpt");

  auto write_bytes = [&](const std::string& name, const std::string& b) {
    std::ofstream(dir / name, std::ios::binary) << b;
    return dir / name;
  };
  CHECK_THROWS_AS(read_checkpoint(write_bytes("trunc.ckpt", bytes.substr(0, bytes.size() - 3))), FormatError);
  std::string magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(read_checkpoint(write_bytes("magic.ckpt", magic)), FormatError);
  CHECK_THROWS_AS(read_checkpoint(write_bytes("tail.ckpt", bytes + "z")), FormatError);
  std::string version = bytes;
  version[8] = 9;
  CHECK_THROWS_AS(read_checkpoint(write_bytes("version.ckpt", version)), FormatError);
  CHECK_THROWS_AS(read_checkpoint(dir / "absent.ckpt"), FormatError);
}

TEST_CASE("corpus loading") {
  const Config cfg = testing::small_pipeline_config();
  const auto dir = testing::write_small_corpus("corpus_ok", cfg);
  const auto corpus = load_corpus(dir, cfg.audio);
  REQUIRE(corpus.size() == 4);
  CHECK(corpus[0].id == "spk0_000");
  CHECK(corpus[3].speaker == "spk1");
  CHECK(corpus[0].mel.n_mels == 12);
  CHECK(corpus[0].mel.frames() > 50);

  fs::remove(dir / "spk1_001.txt");
  const std::string msg = error_of([&] { load_corpus(dir, cfg.audio); });
  CHECK(msg.find("missing transcript") != std::string::npos);
  CHECK(msg.find("spk1_001.txt") != std::string::npos);

  const auto bad = testing::write_small_corpus("corpus_badwav", cfg);
  std::ofstream(bad / "spk0_001.wav", std::ios::binary) << "RIFF....";
  CHECK(error_of([&] { load_corpus(bad, cfg.audio); }).find("spk0_001.wav") != std::string::npos);

  const auto empty = testing::scratch_dir("corpus_empty");
  CHECK_THROWS_AS(load_corpus(empty, cfg.audio), FormatError);
}

TEST_CASE("corpus audio at another rate is resampled") {
  Config cfg = testing::small_pipeline_config();
  const auto dir = testing::write_small_corpus("corpus_rate", cfg);
  Config twice = cfg;
  twice.audio.sample_rate = 16000;
  twice.audio.n_fft = 512;
  twice.audio.win_length = 512;
  twice.audio.hop_length = 256;
  const auto a = load_corpus(dir, cfg.audio);
  const auto b = load_corpus(dir, twice.audio);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(static_cast<long>(a[i].mel.frames()) - static_cast<long>(b[i].mel.frames())) <= 1);
}

TEST_CASE("training needs a second utterance per speaker") {
  const Config cfg = testing::small_pipeline_config();
  SyntheticCorpusOptions opt;
  opt.speakers = 2;
  opt.utterances_per_speaker = 2;
  opt.seconds = 1.0;
  opt.sample_rate = cfg.audio.sample_rate;
  auto utts = make_synthetic_corpus(opt);
  utts.pop_back();
  const auto dir = testing::scratch_dir("corpus_single");
  write_synthetic_corpus(dir, utts);
  const auto corpus = load_corpus(dir, cfg.audio);
  const Vocabulary vocab = testing::corpus_vocab(corpus, cfg);
  TtsModel model(cfg.model, vocab.size(), 1);
  const std::string msg = error_of([&] { Trainer(model, cfg, corpus, vocab); });
  CHECK(msg.find("spk1") != std::string::npos);
  CHECK_THROWS_AS(Trainer(model, cfg, corpus, vocab), ReferenceUnavailableError);
}

TEST_CASE("training is deterministic and resumes exactly") {
  const Config cfg = testing::small_pipeline_config();
  const auto corpus = load_corpus(testing::write_small_corpus("corpus_train", cfg), cfg.audio);
  const Vocabulary vocab = testing::corpus_vocab(corpus, cfg);
  const MelStats stats = mean_mel(testing::corpus_mels(corpus), cfg.audio);

  auto fresh = [&](TtsModel& m) { prepare_model(m, corpus, vocab, cfg, stats); };
  TtsModel a(cfg.model, vocab.size(), 3), b(cfg.model, vocab.size(), 3);
  fresh(a);
  fresh(b);
  Trainer ta(a, cfg, corpus, vocab), tb(b, cfg, corpus, vocab);
  for (int e = 0; e < 2; ++e) CHECK(format_loss_line(ta.run_epoch()) == format_loss_line(tb.run_epoch()));

  // Stop mid-epoch, go through a file, continue in a brand-new model.
  CHECK_FALSE(ta.step().has_value());
  const auto path = testing::scratch_dir("resume") / "mid.ckpt";
  write_checkpoint(path, ta.checkpoint(vocab, "stats.bin", 9));
  TtsModel c(cfg.model, vocab.size(), 99);
  fresh(c);
  Trainer tc(c, cfg, corpus, vocab);
  tc.restore(read_checkpoint(path));
  CHECK(tc.state() == ta.state());
  for (int i = 0; i < 5; ++i) {
    const auto ra = ta.step();
    const auto rc = tc.step();
    REQUIRE(ra.has_value() == rc.has_value());
    if (ra) CHECK(format_loss_line(*ra) == format_loss_line(*rc));
    CHECK(ta.state() == tc.state());
  }
  for (Parameter* p : a.params().all()) CHECK(c.params().get(p->name).value == p->value);

  Config other = cfg;
  other.model.d_model = 8;
  TtsModel d(other.model, vocab.size(), 1);
  Trainer td(d, other, corpus, vocab);
  CHECK_THROWS_AS(td.restore(read_checkpoint(path)), ConfigError);
}

TEST_CASE("loss log line format") {
  EpochReport r;
  r.epoch = 3;
  r.mean = {1.5, 0.25, 2.0};
  CHECK(format_loss_line(r) == "3,1.5,0.25,2,3.75");
  CHECK(std::string(kLossLogHeader) == "epoch,L_enc,L_dur,L_diff,total");
}

TEST_CASE("synthesis contracts") {
  const Config cfg = testing::small_pipeline_config();
  const auto corpus = load_corpus(testing::write_small_corpus("corpus_synth", cfg), cfg.audio);
  const Vocabulary vocab = testing::corpus_vocab(corpus, cfg);
  const MelStats stats = mean_mel(testing::corpus_mels(corpus), cfg.audio);
  TtsModel model(cfg.model, vocab.size(), 8);
  prepare_model(model, corpus, vocab, cfg, stats);

  SynthRequest req;
  req.text = "kite trust";
  req.reference_mel = corpus[2].mel.values;
  req.guidance = cfg.guidance;
  req.seed = 4;
  const SynthResult r = synthesize(model, cfg, vocab, stats, req);
  REQUIRE(r.durations.size() == 10);
  REQUIRE(r.tokens.size() == 10);
  int total = 0;
  for (int d : r.durations) {
    CHECK(d >= 1);
    total += d;
  }
  CHECK(r.mel.rows() == static_cast<std::size_t>(total));
  CHECK(r.mel.cols() == 12);
  CHECK(r.mel.all_finite());

  const SynthResult again = synthesize(model, cfg, vocab, stats, req);
  CHECK(again.mel == r.mel);
  const Waveform w1 = vocode(r.mel, cfg, 4), w2 = vocode(again.mel, cfg, 4);
  CHECK(w1.samples == w2.samples);
  CHECK(w1.samples.size() == static_cast<std::size_t>(total - 1) * 128);

  req.guidance.gamma = 0;
  const SynthResult g0 = synthesize(model, cfg, vocab, stats, req);
  req.guided = false;
  const SynthResult plain = synthesize(model, cfg, vocab, std::nullopt, req);
  CHECK(g0.mel == plain.mel);

  req.guided = true;
  CHECK_THROWS_AS(synthesize(model, cfg, vocab, std::nullopt, req), ReferenceUnavailableError);
  req.text = "xyz";
  CHECK_NOTHROW(synthesize(model, cfg, vocab, stats, req));  // unknown symbols map to the unknown id
}
