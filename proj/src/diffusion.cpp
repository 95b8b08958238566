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

#include "dvtts/diffusion.hpp"

#include <cmath>
#include <numbers>

#include "dvtts/errors.hpp"

namespace dvtts {

void NoiseSchedule::validate() const {
  if (!(beta0 > 0) || !(beta1 > beta0) || !std::isfinite(beta1)) {
    throw ConfigError("noise schedule needs 0 < beta0 < beta1");
  }
}

double NoiseSchedule::data_coeff(double t) const { return std::exp(-integral(t) / 2); }
double NoiseSchedule::mu_coeff(double t) const { return 1.0 - std::exp(-integral(t) / 2); }
double NoiseSchedule::variance(double t) const { return 1.0 - std::exp(-integral(t)); }

Tensor forward_diffuse(const Tensor& x0, const Tensor& mu, double t, const Tensor& noise, const NoiseSchedule& s) {
  if (!(t > 0 && t <= 1)) throw RangeError("forward_diffuse: t must lie in (0, 1]");
  if (!x0.same_shape(mu) || !x0.same_shape(noise)) throw DimensionError("forward_diffuse: shape mismatch");
  const double a = s.data_coeff(t), b = s.mu_coeff(t), sd = std::sqrt(s.variance(t));
  Tensor out(x0.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + b * mu[i] + sd * noise[i];
  return out;
}

Tensor time_embedding(double t, std::size_t dim) {
  const std::size_t half = dim / 2;
  Tensor e = Tensor::matrix(1, dim);
  for (std::size_t i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
    e[i] = std::sin(1000.0 * t * freq);
    e[half + i] = std::cos(1000.0 * t * freq);
  }
  return e;
}

ScoreNet::ResBlock ScoreNet::make_block(ParamStore& store, const std::string& name, std::size_t in, std::size_t out,
                                        std::mt19937_64& rng) const {
  const auto k = static_cast<std::size_t>(cfg_.kernel);
  ResBlock b;
  b.conv_a = Conv1d(store, name + ".conv_a", k, in, out, rng);
  b.time = Linear(store, name + ".time", static_cast<std::size_t>(cfg_.time_dim), out, rng);
  b.spk = Linear(store, name + ".spk", static_cast<std::size_t>(cfg_.d_spk), out, rng);
  b.conv_b = Conv1d(store, name + ".conv_b", k, out, out, rng);
  if (in != out) b.skip = Conv1d(store, name + ".skip", 1, in, out, rng);
  return b;
}

Var ScoreNet::ResBlock::operator()(Tape& tape, const Var& x, const Var& temb, const Var& spk_row) const {
  Var y = conv_a(tape, x);
  y = ops::add_row(y, ops::add(time(tape, temb), spk(tape, spk_row)));
  y = conv_b(tape, ops::silu(y));
  return ops::add(skip ? (*skip)(tape, x) : x, y);
}

ScoreNet::ScoreNet(ParamStore& store, const ModelConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
  const auto m = static_cast<std::size_t>(cfg.n_mels);
  const auto c = static_cast<std::size_t>(cfg.unet_channels);
  const auto k = static_cast<std::size_t>(cfg.kernel);
  const auto td = static_cast<std::size_t>(cfg.time_dim);
  if (td < 2 || td % 2 != 0) throw ConfigError("time_dim must be even and >= 2");
  time_mlp_ = Linear(store, "dec.time_mlp", td, td, rng);
  conv_in_ = Conv1d(store, "dec.conv_in", k, 2 * m, c, rng);
  down_ = make_block(store, "dec.down", c, c, rng);
  mid_a_ = make_block(store, "dec.mid_a", c, 2 * c, rng);
  mid_b_ = make_block(store, "dec.mid_b", 2 * c, 2 * c, rng);
  up_ = make_block(store, "dec.up", 3 * c, c, rng);
  conv_out_ = Conv1d(store, "dec.conv_out", k, c, m, rng);
}

Var ScoreNet::forward(Tape& tape, const Var& x_t, const Var& cond, double t, const Var& speaker) const {
  const Tensor& x = x_t.value();
  if (x.rank() != 2 || x.cols() != static_cast<std::size_t>(cfg_.n_mels) || !x.same_shape(cond.value())) {
    throw DimensionError("score net: X_t " + shape_string(x.shape()) + " and condition " +
                         shape_string(cond.value().shape()) + " must both be frames x n_mels");
  }
  if (speaker.value().rows() != 1 || speaker.value().cols() != static_cast<std::size_t>(cfg_.d_spk)) {
    throw DimensionError("score net: speaker embedding must be 1 x " + std::to_string(cfg_.d_spk));
  }
  const std::size_t frames = x.rows(), even = frames + frames % 2;
  const Var temb = ops::silu(time_mlp_(tape, tape.constant(time_embedding(t, static_cast<std::size_t>(cfg_.time_dim)))));
  const Var parts[] = {x_t, cond};
  Var h = ops::pad_rows(ops::concat_cols(parts), even);
  h = conv_in_(tape, h);
  const Var skip = down_(tape, h, temb, speaker);
  Var low = ops::avg_pool2(skip);
  low = mid_a_(tape, low, temb, speaker);
  low = mid_b_(tape, low, temb, speaker);
  const Var joined[] = {ops::upsample2(low), skip};
  h = up_(tape, ops::concat_cols(joined), temb, speaker);
  h = conv_out_(tape, ops::silu(h));
  if (even != frames) h = ops::slice_rows(h, 0, frames);
  // Fixed skip: sigma(t) (X_t - cond) is already close to the noise for
  // large t, so the network learns the residual.
  const double sigma = std::sqrt(NoiseSchedule{cfg_.beta0, cfg_.beta1}.variance(t));
  return ops::add(h, ops::scale(ops::sub(x_t, cond), sigma));
}

Tensor ScoreNet::predict_noise(const Tensor& x_t, double t, const ScoreCondition& cond) const {
  Tape tape(false);
  return forward(tape, tape.constant(x_t), tape.constant(cond.mel), t, tape.constant(cond.speaker)).value();
}

Tensor ScoreNet::score(const Tensor& x_t, double t, const ScoreCondition& cond, const NoiseSchedule& s) const {
  Tensor eps = predict_noise(x_t, t, cond);
  const double inv = -1.0 / std::sqrt(s.variance(t));
  for (Scalar& v : eps.storage()) v *= inv;
  return eps;
}

DiffusionDraw draw_diffusion(const Tensor& x0, const Tensor& mu, std::mt19937_64& rng, const NoiseSchedule& s,
                             double t_min) {
  std::uniform_real_distribution<double> ut(t_min, 1.0);
  DiffusionDraw d;
  d.t = ut(rng);
  d.noise = Tensor(x0.shape());
  std::normal_distribution<double> n(0.0, 1.0);
  for (Scalar& v : d.noise.storage()) v = n(rng);
  d.x_t = forward_diffuse(x0, mu, d.t, d.noise, s);
  return d;
}

Var diffusion_loss(Tape& tape, const NoisePredictor& predictor, const Tensor& x0, const Tensor& mu,
                   std::mt19937_64& rng, const NoiseSchedule& s, double t_min) {
  const DiffusionDraw d = draw_diffusion(x0, mu, rng, s, t_min);
  const Var eps_hat = predictor(tape, d.x_t, d.t);
  return ops::mse(eps_hat, tape.constant(d.noise));
}

void GuidanceConfig::validate() const {
  if (!(gamma >= 0) || !std::isfinite(gamma)) throw ConfigError("gamma must be a finite value >= 0");
  if (steps < 1) throw ConfigError("sampler steps must be >= 1");
  if (!(temperature > 0) || !std::isfinite(temperature)) throw ConfigError("temperature must be > 0");
}

Tensor guide(const Tensor& s_cond, const Tensor& s_uncond, double gamma) {
  if (!s_cond.same_shape(s_uncond)) throw DimensionError("guide: shape mismatch");
  Tensor out(s_cond.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s_cond[i] + gamma * (s_cond[i] - s_uncond[i]);
  return out;
}

GuidedScore cfg_score(const ScoreNet& net, const Tensor& x_t, double t, const ScoreCondition& cond_c,
                      const ScoreCondition& cond_mel, double gamma, const NoiseSchedule& s) {
  if (cond_c.mel.rows() != cond_mel.mel.rows()) {
    throw DimensionError("cfg_score: condition frame counts differ (" + std::to_string(cond_c.mel.rows()) + " vs " +
                         std::to_string(cond_mel.mel.rows()) + ")");
  }
  GuidedScore g;
  g.conditional = net.score(x_t, t, cond_c, s);
  const Tensor uncond = net.score(x_t, t, cond_mel, s);
  g.alpha = Tensor(g.conditional.shape());
  for (std::size_t i = 0; i < g.alpha.size(); ++i) g.alpha[i] = g.conditional[i] - uncond[i];
  g.score = guide(g.conditional, uncond, gamma);
  return g;
}

Tensor initial_state(const Tensor& mu, double temperature, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  const double sd = std::sqrt(temperature);
  Tensor x(mu.shape());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = mu[i] + sd * n(rng);
  return x;
}

Tensor reverse_sample(const ScoreNet& net, const Tensor& mu, const std::optional<Tensor>& mel_mean,
                      const Tensor& speaker, const GuidanceConfig& guidance, const NoiseSchedule& s,
                      std::uint64_t seed) {
  guidance.validate();
  if (mu.rank() != 2 || mu.rows() == 0) throw DimensionError("reverse_sample: mu must have frames");
  const ScoreCondition cond_c{mu, speaker};
  std::optional<ScoreCondition> cond_mel;
  if (mel_mean) cond_mel = ScoreCondition{*mel_mean, speaker};
  Tensor x = initial_state(mu, guidance.temperature, seed);
  const double h = (1.0 - kTimeMin) / guidance.steps;
  for (int i = 0; i < guidance.steps; ++i) {
    const double t = 1.0 - i * h;
    const Tensor score = cond_mel ? cfg_score(net, x, t, cond_c, *cond_mel, guidance.gamma, s).score
                                  : net.score(x, t, cond_c, s);
    const double bh = s.beta(t) * h;
    for (std::size_t j = 0; j < x.size(); ++j) x[j] -= bh * (0.5 * (mu[j] - x[j]) - score[j]);
  }
  ensure_finite(x, "reverse_sample");
  return x;
}

}  // namespace dvtts
