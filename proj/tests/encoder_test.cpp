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

#include <random>

#include "doctest.h"
#include "dvtts/encoder.hpp"
#include "dvtts/errors.hpp"
#include "test_util.hpp"

using namespace dvtts;

namespace {

PhonemeSequence seq_of(std::vector<int> ids) {
  PhonemeSequence s;
  s.mask.assign(ids.size(), 1);
  s.ids = std::move(ids);
  return s;
}

}  // namespace

TEST_CASE("encoder output shapes") {
  ModelConfig cfg;
  cfg.d_model = 16;
  cfg.n_mels = 10;
  cfg.enc_layers = 2;
  ParamStore store;
  std::mt19937_64 rng(1);
  const TextEncoder enc(store, cfg, 12, rng);
  for (std::size_t p : {1u, 2u, 7u, 20u}) {
    std::vector<int> ids;
    for (std::size_t i = 0; i < p; ++i) ids.push_back(2 + static_cast<int>(i % 10));
    const TextEncoding e = enc.encode(seq_of(ids));
    CHECK(e.embeddings.shape() == std::vector<std::size_t>{p, 16});
    CHECK(e.mu.shape() == std::vector<std::size_t>{p, 10});
    CHECK(e.embeddings.all_finite());
  }
  CHECK_THROWS_AS(enc.encode(seq_of({2, 12})), RangeError);
  CHECK_THROWS_AS(enc.encode(seq_of({-1})), RangeError);
}

TEST_CASE("trailing padding does not change real rows") {
  ModelConfig cfg = testing::tiny_config();
  cfg.enc_layers = 2;
  ParamStore store;
  std::mt19937_64 rng(2);
  const TextEncoder enc(store, cfg, 9, rng);
  testing::randomize(store, rng);
  const PhonemeSequence plain = seq_of({2, 5, 8, 3});
  const TextEncoding a = enc.encode(plain);
  for (std::size_t extra : {1u, 3u}) {
    PhonemeSequence padded = plain;
    padded.ids.resize(4 + extra, kPadId);
    padded.mask.resize(4 + extra, 0);
    const TextEncoding b = enc.encode(padded);
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t c = 0; c < b.embeddings.cols(); ++c) CHECK(b.embeddings(r, c) == a.embeddings(r, c));
      for (std::size_t c = 0; c < b.mu.cols(); ++c) CHECK(b.mu(r, c) == a.mu(r, c));
    }
    for (std::size_t r = 4; r < 4 + extra; ++r) {
      for (double v : b.embeddings.row_span(r)) CHECK(v == 0.0);
      for (double v : b.mu.row_span(r)) CHECK(v == 0.0);
    }
  }
}

TEST_CASE("encoder is deterministic for a fixed seed") {
  const ModelConfig cfg = testing::tiny_config();
  auto run = [&] {
    ParamStore store;
    std::mt19937_64 rng(77);
    const TextEncoder enc(store, cfg, 6, rng);
    return enc.encode(seq_of({2, 3, 4, 5, 2})).embeddings;
  };
  CHECK(run() == run());
}

TEST_CASE("encoder gradients match finite differences") {
  const ModelConfig cfg = testing::tiny_config();
  std::mt19937_64 rng(11);
  for (std::size_t p : {1u, 2u, 3u, 5u, 6u}) {
    ParamStore store;
    const TextEncoder enc(store, cfg, 7, rng);
    testing::randomize(store, rng);
    PhonemeSequence seq;
    std::uniform_int_distribution<int> tok(0, 6);
    for (std::size_t i = 0; i < p; ++i) seq.ids.push_back(tok(rng));
    seq.mask.assign(p, 1);
    if (p > 2) seq.mask.back() = 0;
    const Tensor we = testing::random_matrix(rng, p, 8);
    const Tensor wm = testing::random_matrix(rng, p, 4);
    const auto params = store.all();
    const Scalar err = grad_check_parameters(
        [&](Tape& t) {
          const auto out = enc.forward(t, seq);
          return ops::add(ops::sum(ops::mul(out.embeddings, t.constant(we))),
                          ops::sum(ops::mul(out.mu, t.constant(wm))));
        },
        params, 1e-6);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("expand_mu") {
  const TextEncoding enc{Tensor::matrix(3, 1), Tensor::from_rows({{0.5}, {-1}, {2}})};
  CHECK(expand_mu(enc, {1, 1, 1}) == enc.mu);
  const TextEncoding one{Tensor::matrix(1, 1), Tensor::from_rows({{4, 5}})};
  CHECK(expand_mu(one, {3}) == Tensor::from_rows({{4, 5}, {4, 5}, {4, 5}}));
  const TextEncoding two{Tensor::matrix(2, 1), Tensor::from_rows({{0}, {1}})};
  CHECK(expand_mu(two, {2, 1}) == Tensor::from_rows({{0}, {0}, {1}}));
  CHECK_THROWS_AS(expand_mu(two, {0, 0}), InvalidTargetError);
  CHECK_THROWS_AS(expand_mu(two, {1}), DimensionError);

  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> d(1, 9);
    std::vector<int> durs(1 + static_cast<std::size_t>(trial % 6));
    int total = 0;
    for (int& v : durs) total += (v = d(rng));
    const TextEncoding e{Tensor::matrix(durs.size(), 1), testing::random_matrix(rng, durs.size(), 3)};
    CHECK(expand_mu(e, durs).rows() == static_cast<std::size_t>(total));
  }
}
