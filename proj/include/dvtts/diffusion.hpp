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

#include <cstdint>
#include <functional>
#include <optional>
#include <random>

#include "dvtts/model_config.hpp"
#include "dvtts/nn.hpp"

namespace dvtts {

inline constexpr double kTimeMin = 1e-3;

// Linear noise schedule beta(t) = beta0 + (beta1 - beta0) t on [0, 1].
struct NoiseSchedule {
  double beta0 = 0.05;
  double beta1 = 20.0;

  void validate() const;
  double beta(double t) const { return beta0 + (beta1 - beta0) * t; }
  // Integral of beta from 0 to t.
  double integral(double t) const { return beta0 * t + (beta1 - beta0) * t * t / 2; }
  // X_t = data_coeff x0 + mu_coeff mu + sqrt(variance) eps
  double data_coeff(double t) const;
  double mu_coeff(double t) const;
  double variance(double t) const;
};

// Mean-reverting forward marginal toward mu. t in (0, 1].
Tensor forward_diffuse(const Tensor& x0, const Tensor& mu, double t, const Tensor& noise, const NoiseSchedule& s);

// Decoder conditioning: the frame-level condition mel and a speaker row.
struct ScoreCondition {
  Tensor mel;      // frames x n_mels
  Tensor speaker;  // 1 x d_spk
};

// U-shaped 1-D convolutional noise predictor over frames. Input channels are
// X_t and the condition mel side by side; every residual block adds a
// projection of the sinusoidal time embedding and of the speaker embedding.
// The output adds sqrt(1 - e^{-B(t)}) (X_t - cond) to the network result.
class ScoreNet {
 public:
  ScoreNet() = default;
  ScoreNet(ParamStore& store, const ModelConfig& cfg, std::mt19937_64& rng);

  Var forward(Tape& tape, const Var& x_t, const Var& cond, double t, const Var& speaker) const;
  Tensor predict_noise(const Tensor& x_t, double t, const ScoreCondition& cond) const;
  // -predict_noise / sqrt(1 - exp(-B(t)))
  Tensor score(const Tensor& x_t, double t, const ScoreCondition& cond, const NoiseSchedule& s) const;

 private:
  struct ResBlock {
    Conv1d conv_a, conv_b;
    Linear time, spk;
    std::optional<Conv1d> skip;

    Var operator()(Tape& tape, const Var& x, const Var& temb, const Var& spk_row) const;
  };
  ResBlock make_block(ParamStore& store, const std::string& name, std::size_t in, std::size_t out,
                      std::mt19937_64& rng) const;

  ModelConfig cfg_;
  Linear time_mlp_;
  Conv1d conv_in_;
  ResBlock down_, mid_a_, mid_b_, up_;
  Conv1d conv_out_;
};

Tensor time_embedding(double t, std::size_t dim);

using NoisePredictor = std::function<Var(Tape& tape, const Tensor& x_t, double t)>;

struct DiffusionDraw {
  double t = 0;
  Tensor noise;
  Tensor x_t;
};

// t ~ U(t_min, 1), eps ~ N(0, I), X_t = forward_diffuse(x0, mu, t, eps).
DiffusionDraw draw_diffusion(const Tensor& x0, const Tensor& mu, std::mt19937_64& rng, const NoiseSchedule& s,
                             double t_min = kTimeMin);
// mean((eps_hat - eps)^2) for a fresh draw.
Var diffusion_loss(Tape& tape, const NoisePredictor& predictor, const Tensor& x0, const Tensor& mu,
                   std::mt19937_64& rng, const NoiseSchedule& s, double t_min = kTimeMin);

struct GuidanceConfig {
  double gamma = 1.0;
  int steps = 50;
  double temperature = 1.5;

  void validate() const;
  bool operator==(const GuidanceConfig&) const = default;
};

struct GuidedScore {
  Tensor score;        // s_c + gamma * alpha
  Tensor conditional;  // s(X_t, t | c_c, e_s)
  Tensor alpha;        // s(X_t, t | c_c, e_s) - s(X_t, t | c_mel, e_s)
};

// s_cond + gamma (s_cond - s_uncond), elementwise.
Tensor guide(const Tensor& s_cond, const Tensor& s_uncond, double gamma);
GuidedScore cfg_score(const ScoreNet& net, const Tensor& x_t, double t, const ScoreCondition& cond_c,
                      const ScoreCondition& cond_mel, double gamma, const NoiseSchedule& s);

// X_1 = mu + sqrt(temperature) z with z drawn from mt19937_64(seed).
Tensor initial_state(const Tensor& mu, double temperature, std::uint64_t seed);

// Explicit Euler on dX = (0.5 (mu - X) - score) beta(t) dt from t = 1 down to
// t_min in `steps` uniform steps. With `mel_mean` the score is the guided
// one; without it only the conditional branch is evaluated.
Tensor reverse_sample(const ScoreNet& net, const Tensor& mu, const std::optional<Tensor>& mel_mean,
                      const Tensor& speaker, const GuidanceConfig& guidance, const NoiseSchedule& s,
                      std::uint64_t seed);

}  // namespace dvtts
