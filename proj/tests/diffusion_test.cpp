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
#include <random>

#include "doctest.h"
#include "dvtts/diffusion.hpp"
#include "dvtts/errors.hpp"
#include "dvtts/optim.hpp"
#include "test_util.hpp"

using namespace dvtts;

TEST_CASE("noise schedule closed form") {
  const NoiseSchedule s;
  CHECK(s.integral(0.5) == doctest::Approx(2.51875).epsilon(1e-14));
  CHECK(s.data_coeff(0.5) == doctest::Approx(std::exp(-1.259375)).epsilon(1e-14));
  CHECK(s.variance(0.5) == doctest::Approx(1 - std::exp(-2.51875)).epsilon(1e-14));
  CHECK(s.integral(0.0) == 0.0);
  CHECK(s.variance(0.0) == 0.0);
  CHECK(s.data_coeff(1e-12) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.mu_coeff(1e-12) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.variance(1e-12) <= 1e-12);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ut(0, 1);
  for (int i = 0; i < 100; ++i) {
    const double t = ut(rng);
    CHECK(std::abs(s.data_coeff(t) + s.mu_coeff(t) - 1.0) <= 1e-15);
  }
  double prev = -1;
  for (int i = 0; i <= 1000; ++i) {
    const double v = s.variance(i / 1000.0);
    CHECK(v > prev);
    prev = v;
  }
  CHECK_THROWS_AS((NoiseSchedule{0.5, 0.1}.validate()), ConfigError);
  CHECK_THROWS_AS(forward_diffuse(Tensor::matrix(1, 1), Tensor::matrix(1, 1), 0.0, Tensor::matrix(1, 1), s), RangeError);
  CHECK_THROWS_AS(forward_diffuse(Tensor::matrix(1, 1), Tensor::matrix(1, 1), 1.5, Tensor::matrix(1, 1), s), RangeError);
}

TEST_CASE("forward diffusion near t = 0 returns the data") {
  const NoiseSchedule s;
  const Tensor x0 = Tensor::from_rows({{1.5, -2.0}}), mu = Tensor::from_rows({{7.0, 3.0}});
  const Tensor noise = Tensor::from_rows({{0.4, -0.9}});
  const Tensor x = forward_diffuse(x0, mu, 1e-12, noise, s);
  CHECK(max_abs_diff(x, x0) < 1e-5);
}

TEST_CASE("forward diffusion marginals match the closed form") {
  const NoiseSchedule s;
  const int n = 10000;
  const Tensor x0 = Tensor::matrix(1, n, 0.7), mu = Tensor::matrix(1, n, -1.2);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> z(0, 1);
  for (double t : {0.1, 0.5, 0.9}) {
    Tensor noise = Tensor::matrix(1, n);
    for (double& v : noise.storage()) v = z(rng);
    const Tensor x = forward_diffuse(x0, mu, t, noise, s);
    double mean = 0;
    for (double v : x.storage()) mean += v;
    mean /= n;
    double var = 0;
    for (double v : x.storage()) var += (v - mean) * (v - mean);
    var /= n - 1;
    const double want_mean = s.data_coeff(t) * 0.7 + s.mu_coeff(t) * -1.2;
    const double want_var = s.variance(t);
    CHECK(std::abs(mean - want_mean) <= 3 * std::sqrt(want_var / n));
    CHECK(std::abs(var - want_var) <= 3 * want_var * std::sqrt(2.0 / (n - 1)));
  }
}

namespace {

struct Net {
  ModelConfig cfg = testing::tiny_config();
  ParamStore store;
  std::mt19937_64 rng{31};
  ScoreNet net;

  Net() {
    net = ScoreNet(store, cfg, rng);
    testing::randomize(store, rng, 0.4);
  }
};

}  // namespace

TEST_CASE("score net shape contract and speaker sensitivity") {
  Net n;
  for (std::size_t frames : {1u, 2u, 3u, 7u, 16u}) {
    const Tensor x = testing::random_matrix(n.rng, frames, 4);
    const ScoreCondition c{testing::random_matrix(n.rng, frames, 4), testing::random_matrix(n.rng, 1, 3)};
    const Tensor eps = n.net.predict_noise(x, 0.3, c);
    CHECK(eps.shape() == x.shape());
    ScoreCondition other = c;
    other.speaker = testing::random_matrix(n.rng, 1, 3);
    CHECK(max_abs_diff(n.net.predict_noise(x, 0.3, other), eps) > 0);
    CHECK(max_abs_diff(n.net.predict_noise(x, 0.8, c), eps) > 0);
  }
  const ScoreCondition bad{Tensor::matrix(3, 4), Tensor::matrix(1, 3)};
  CHECK_THROWS_AS(n.net.predict_noise(Tensor::matrix(4, 4), 0.5, bad), DimensionError);
  const ScoreCondition bad_spk{Tensor::matrix(4, 4), Tensor::matrix(1, 2)};
  CHECK_THROWS_AS(n.net.predict_noise(Tensor::matrix(4, 4), 0.5, bad_spk), DimensionError);
}

TEST_CASE("score net gradients match finite differences") {
  Net n;
  for (std::size_t frames : {1u, 2u, 3u, 5u, 8u}) {
    const Tensor x = testing::random_matrix(n.rng, frames, 4);
    const Tensor c = testing::random_matrix(n.rng, frames, 4);
    const Tensor spk = testing::random_matrix(n.rng, 1, 3);
    const Tensor w = testing::random_matrix(n.rng, frames, 4);
    const double t = 0.05 + 0.18 * static_cast<double>(frames);
    const auto params = n.store.all();
    const Scalar err = grad_check_parameters(
        [&](Tape& tp) {
          return ops::sum(ops::mul(n.net.forward(tp, tp.constant(x), tp.constant(c), t, tp.constant(spk)), tp.constant(w)));
        },
        params, 1e-6);
    CHECK(err < 1e-4);
    const Scalar input_err = grad_check(
        [&](Tape& tp, std::span<const Var> in) {
          return ops::sum(ops::mul(n.net.forward(tp, in[0], in[1], t, in[2]), tp.constant(w)));
        },
        {x, c, spk}, 1e-6);
    CHECK(input_err < 1e-4);
  }
}

TEST_CASE("diffusion loss oracles") {
  const NoiseSchedule s;
  std::mt19937_64 rng(5);
  const Tensor x0 = testing::random_matrix(rng, 6, 3), mu = testing::random_matrix(rng, 6, 3);
  // The oracle network recovers eps exactly from X_t.
  const NoisePredictor oracle = [&](Tape& tape, const Tensor& x_t, double t) {
    Tensor eps(x_t.shape());
    for (std::size_t i = 0; i < eps.size(); ++i)
      eps[i] = (x_t[i] - s.data_coeff(t) * x0[i] - s.mu_coeff(t) * mu[i]) / std::sqrt(s.variance(t));
    return tape.constant(eps);
  };
  for (int i = 0; i < 100; ++i) {
    Tape tape;
    CHECK(diffusion_loss(tape, oracle, x0, mu, rng, s).value()[0] < 1e-18);
  }
  const NoisePredictor zero = [](Tape& tape, const Tensor& x_t, double) { return tape.constant(Tensor(x_t.shape())); };
  const int draws = 10000;
  double sum = 0, sq = 0;
  for (int i = 0; i < draws; ++i) {
    Tape tape;
    const double l = diffusion_loss(tape, zero, x0, mu, rng, s).value()[0];
    sum += l;
    sq += l * l;
  }
  const double mean = sum / draws;
  const double sd = std::sqrt((sq / draws - mean * mean) * draws / (draws - 1));
  CHECK(std::abs(mean - 1.0) <= 3 * sd / std::sqrt(static_cast<double>(draws)));

  std::mt19937_64 a(9), b(9);
  const DiffusionDraw da = draw_diffusion(x0, mu, a, s), db = draw_diffusion(x0, mu, b, s);
  CHECK(da.t == db.t);
  CHECK(da.x_t == db.x_t);
  CHECK(da.t >= kTimeMin);
}

TEST_CASE("diffusion loss decreases when training on a fixed batch") {
  Net n;
  const NoiseSchedule s;
  const Tensor x0 = testing::random_matrix(n.rng, 8, 4), mu = testing::random_matrix(n.rng, 8, 4);
  const Tensor spk = testing::random_matrix(n.rng, 1, 3);
  Adam adam(n.store.all(), {.lr = 3e-3});
  auto batch_loss = [&](std::uint64_t seed, bool train) {
    std::mt19937_64 rng(seed);
    double total = 0;
    for (int i = 0; i < 8; ++i) {
      Tape tape;
      const NoisePredictor net = [&](Tape& tp, const Tensor& x_t, double t) {
        return n.net.forward(tp, tp.constant(x_t), tp.constant(mu), t, tp.constant(spk));
      };
      const Var loss = diffusion_loss(tape, net, x0, mu, rng, s);
      total += loss.value()[0];
      if (train) tape.backward(loss);
    }
    if (train) adam.step(1.0 / 8);
    return total / 8;
  };
  const double before = batch_loss(1234, false);
  for (int step = 0; step < 200; ++step) batch_loss(static_cast<std::uint64_t>(step), true);
  const double after = batch_loss(1234, false);
  MESSAGE("fixed-batch diffusion loss " << before << " -> " << after);
  CHECK(after < before);
}

TEST_CASE("guidance identities") {
  CHECK(guide(Tensor::row({2.0}), Tensor::row({0.5}), 1.0)[0] == 3.5);
  Net n;
  const NoiseSchedule s;
  const Tensor x = testing::random_matrix(n.rng, 5, 4);
  const Tensor spk = testing::random_matrix(n.rng, 1, 3);
  const ScoreCondition cc{testing::random_matrix(n.rng, 5, 4), spk};
  const ScoreCondition cm{testing::random_matrix(n.rng, 5, 4), spk};
  const GuidedScore g0 = cfg_score(n.net, x, 0.4, cc, cm, 0.0, s);
  CHECK(g0.score == n.net.score(x, 0.4, cc, s));
  const GuidedScore same = cfg_score(n.net, x, 0.4, cc, cc, 2.5, s);
  for (double v : same.alpha.storage()) CHECK(v == 0.0);
  CHECK(same.score == same.conditional);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ug(0, 5);
  for (int i = 0; i < 50; ++i) {
    const double g1 = ug(rng), g2 = ug(rng);
    const Tensor a = cfg_score(n.net, x, 0.4, cc, cm, g1, s).score;
    const Tensor b = cfg_score(n.net, x, 0.4, cc, cm, g2, s).score;
    const Tensor m = cfg_score(n.net, x, 0.4, cc, cm, (g1 + g2) / 2, s).score;
    for (std::size_t j = 0; j < a.size(); ++j) CHECK(std::abs(a[j] + b[j] - 2 * m[j]) <= 1e-6);
  }
  const ScoreCondition shorter{testing::random_matrix(n.rng, 4, 4), spk};
  CHECK_THROWS_AS(cfg_score(n.net, x, 0.4, cc, shorter, 1.0, s), DimensionError);
}

TEST_CASE("reverse sampling") {
  Net n;
  const NoiseSchedule s;
  const Tensor mu = testing::random_matrix(n.rng, 6, 4);
  const Tensor mean = testing::random_matrix(n.rng, 6, 4);
  const Tensor spk = testing::random_matrix(n.rng, 1, 3);
  GuidanceConfig g;
  g.steps = 5;
  g.gamma = 0;
  const Tensor guided = reverse_sample(n.net, mu, mean, spk, g, s, 42);
  const Tensor plain = reverse_sample(n.net, mu, std::nullopt, spk, g, s, 42);
  CHECK(guided == plain);
  CHECK(reverse_sample(n.net, mu, mean, spk, g, s, 42) == guided);
  CHECK(reverse_sample(n.net, mu, mean, spk, g, s, 43) != guided);
  g.gamma = 1.5;
  CHECK(reverse_sample(n.net, mu, mean, spk, g, s, 42) != guided);

  // One step: X = X1 - beta(1) h (0.5 (mu - X1) - score(X1, 1)).
  g.steps = 1;
  g.gamma = 0;
  const Tensor x1 = initial_state(mu, g.temperature, 7);
  const Tensor sc = n.net.score(x1, 1.0, {mu, spk}, s);
  const double bh = s.beta(1.0) * (1.0 - kTimeMin);
  Tensor want = x1;
  for (std::size_t j = 0; j < want.size(); ++j) want[j] -= bh * (0.5 * (mu[j] - x1[j]) - sc[j]);
  CHECK(reverse_sample(n.net, mu, std::nullopt, spk, g, s, 7) == want);

  g.steps = 0;
  CHECK_THROWS_AS(reverse_sample(n.net, mu, std::nullopt, spk, g, s, 7), ConfigError);
}

TEST_CASE("initial state statistics") {
  const Tensor mu = Tensor::matrix(100, 100, 2.0);
  const Tensor x = initial_state(mu, 1.5, 3);
  double mean = 0, var = 0;
  for (double v : x.storage()) mean += v;
  mean /= 10000;
  for (double v : x.storage()) var += (v - mean) * (v - mean);
  var /= 9999;
  CHECK(std::abs(mean - 2.0) <= 3 * std::sqrt(1.5 / 10000));
  CHECK(std::abs(var - 1.5) <= 3 * 1.5 * std::sqrt(2.0 / 9999));
}
