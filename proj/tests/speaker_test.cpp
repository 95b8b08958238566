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
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "dvtts/binio.hpp"
#include "dvtts/errors.hpp"
#include "dvtts/speaker.hpp"
#include "test_util.hpp"

using namespace dvtts;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("dvtts_speaker_" + name);
}

double norm(const SpeakerEmbedding& e) {
  double ss = 0;
  for (double v : e.values()) ss += v * v;
  return std::sqrt(ss);
}

}  // namespace

TEST_CASE("baseline embeddings are unit norm and order invariant") {
  ModelConfig cfg = testing::tiny_config();
  cfg.n_mels = 6;
  cfg.d_spk = 5;
  ParamStore store;
  std::mt19937_64 rng(4);
  BaselineSpeakerEncoder enc(store, cfg, rng);
  std::vector<Tensor> corpus;
  for (int i = 0; i < 4; ++i) corpus.push_back(testing::random_matrix(rng, 30 + static_cast<std::size_t>(i), 6, 2.0));
  enc.fit(corpus);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor mel = testing::random_matrix(rng, 1 + static_cast<std::size_t>(trial) * 7, 6, 3.0);
    const SpeakerEmbedding e = enc.embed(mel);
    CHECK(e.dim() == 5);
    CHECK(std::abs(norm(e) - 1.0) <= 1e-6);
    std::vector<std::size_t> order(mel.rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    Tensor shuffled = mel;
    for (std::size_t f = 0; f < order.size(); ++f) {
      const auto src = mel.row_span(order[f]);
      std::copy(src.begin(), src.end(), shuffled.row_span(f).begin());
    }
    CHECK(enc.embed(shuffled).values() == e.values());
  }
}

TEST_CASE("external embeddings") {
  const auto p = temp_file("a.bin");
  {
    std::ofstream os(p, std::ios::binary);
    binio::write_magic(os, "SPKEMB01");
    binio::write_u32(os, 2);
    binio::write_f32(os, 3.0f);
    binio::write_f32(os, 4.0f);
  }
  const SpeakerEmbedding e = load_external_embedding(p);
  CHECK(e.values()[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(e.values()[1] == doctest::Approx(0.8).epsilon(1e-12));

  std::mt19937_64 rng(8);
  const SpeakerEmbedding unit = SpeakerEmbedding::normalized(testing::random_matrix(rng, 1, 16).storage());
  write_embedding(p, unit);
  const SpeakerEmbedding back = load_external_embedding(p);
  for (std::size_t i = 0; i < 16; ++i) CHECK(std::abs(back.values()[i] - unit.values()[i]) <= 1e-7);

  write_embedding(p, SpeakerEmbedding::normalized({1.0, 0.0, 0.0}));
  {
    std::ofstream os(p, std::ios::binary);
    binio::write_magic(os, "SPKEMB01");
    binio::write_u32(os, 3);
    for (int i = 0; i < 3; ++i) binio::write_f32(os, 0.0f);
  }
  CHECK_THROWS_AS(load_external_embedding(p), FormatError);
  {
    std::ofstream os(p, std::ios::binary);
    binio::write_magic(os, "SPKEMB01");
    binio::write_u32(os, 2);
    binio::write_f32(os, 1.0f);
    binio::write_f32(os, std::nanf(""));
  }
  CHECK_THROWS_AS(load_external_embedding(p), FormatError);
  {
    std::ofstream os(p, std::ios::binary);
    binio::write_magic(os, "SPKEMB02");
  }
  CHECK_THROWS_AS(load_external_embedding(p), FormatError);
  {
    std::ofstream os(p, std::ios::binary);
    binio::write_magic(os, "SPKEMB01");
    binio::write_u32(os, 4);
    binio::write_f32(os, 1.0f);
  }
  CHECK_THROWS_AS(load_external_embedding(p), FormatError);
}

TEST_CASE("sim_o") {
  const SpeakerEmbedding v = SpeakerEmbedding::normalized({0.3, -1.2, 2.0});
  const SpeakerEmbedding neg = SpeakerEmbedding::normalized({-0.3, 1.2, -2.0});
  CHECK(sim_o(v, v) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sim_o(v, neg) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(sim_o(SpeakerEmbedding::normalized({1, 0}), SpeakerEmbedding::normalized({0, 1})) == 0.0);
  CHECK_THROWS_AS(sim_o(v, SpeakerEmbedding::normalized({1, 0})), DimensionError);
  CHECK_THROWS_AS(SpeakerEmbedding::normalized({0, 0}), NumericError);

  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> scale(0.01, 100);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = testing::random_matrix(rng, 1, 8).storage();
    const auto b = testing::random_matrix(rng, 1, 8).storage();
    const SpeakerEmbedding ea = SpeakerEmbedding::normalized(a), eb = SpeakerEmbedding::normalized(b);
    const double s = sim_o(ea, eb);
    CHECK(s == sim_o(eb, ea));
    CHECK(std::abs(s) <= 1 + 1e-9);
    auto a2 = a;
    const double k = scale(rng);
    for (double& x : a2) x *= k;
    CHECK(sim_o(SpeakerEmbedding::normalized(a2), eb) == doctest::Approx(s).epsilon(1e-12));
  }
}
