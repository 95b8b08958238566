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

#include "dvtts/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "dvtts/binio.hpp"
#include "dvtts/errors.hpp"

namespace dvtts {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <typename T>
T parse_number(const std::string& v, const std::string& where) {
  T out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) throw ConfigError(where + ": bad value \"" + v + "\"");
  return out;
}

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

using Setter = std::function<void(Config&, const std::string&, const std::string&)>;
using Getter = std::function<std::string(const Config&)>;

struct Key {
  Setter set;
  Getter get;
};

template <typename T>
Key int_key(T Config::*section, int T::*field) {
  return {[=](Config& c, const std::string& v, const std::string& w) { c.*section.*field = parse_number<int>(v, w); },
          [=](const Config& c) { return std::to_string(c.*section.*field); }};
}

template <typename T>
Key real_key(T Config::*section, double T::*field) {
  return {[=](Config& c, const std::string& v, const std::string& w) { c.*section.*field = parse_number<double>(v, w); },
          [=](const Config& c) { return fmt(c.*section.*field); }};
}

const std::map<std::string, Key>& keys() {
  static const std::map<std::string, Key> k = {
      {"sample_rate", int_key(&Config::audio, &AnalysisConfig::sample_rate)},
      {"n_fft", int_key(&Config::audio, &AnalysisConfig::n_fft)},
      {"hop_length", int_key(&Config::audio, &AnalysisConfig::hop_length)},
      {"win_length", int_key(&Config::audio, &AnalysisConfig::win_length)},
      {"n_mels",
       {[](Config& c, const std::string& v, const std::string& w) {
          c.audio.n_mels = c.model.n_mels = parse_number<int>(v, w);
        },
        [](const Config& c) { return std::to_string(c.audio.n_mels); }}},
      {"fmin", real_key(&Config::audio, &AnalysisConfig::fmin)},
      {"fmax", real_key(&Config::audio, &AnalysisConfig::fmax)},
      {"d_model", int_key(&Config::model, &ModelConfig::d_model)},
      {"enc_layers", int_key(&Config::model, &ModelConfig::enc_layers)},
      {"enc_heads", int_key(&Config::model, &ModelConfig::enc_heads)},
      {"kernel", int_key(&Config::model, &ModelConfig::kernel)},
      {"dur_heads", int_key(&Config::model, &ModelConfig::dur_heads)},
      {"d_spk", int_key(&Config::model, &ModelConfig::d_spk)},
      {"unet_channels", int_key(&Config::model, &ModelConfig::unet_channels)},
      {"time_dim", int_key(&Config::model, &ModelConfig::time_dim)},
      {"ref_frames", int_key(&Config::model, &ModelConfig::ref_frames)},
      {"beta0", real_key(&Config::model, &ModelConfig::beta0)},
      {"beta1", real_key(&Config::model, &ModelConfig::beta1)},
      {"token_mode",
       {[](Config& c, const std::string& v, const std::string&) { c.token_mode = parse_token_mode(v); },
        [](const Config& c) { return token_mode_name(c.token_mode); }}},
      {"learning_rate", real_key(&Config::train, &TrainConfig::learning_rate)},
      {"batch_size", int_key(&Config::train, &TrainConfig::batch_size)},
      {"epochs", int_key(&Config::train, &TrainConfig::epochs)},
      {"seed",
       {[](Config& c, const std::string& v, const std::string& w) { c.train.seed = parse_number<std::uint64_t>(v, w); },
        [](const Config& c) { return std::to_string(c.train.seed); }}},
      {"checkpoint_every", int_key(&Config::train, &TrainConfig::checkpoint_every)},
      {"gamma", real_key(&Config::guidance, &GuidanceConfig::gamma)},
      {"steps", int_key(&Config::guidance, &GuidanceConfig::steps)},
      {"temperature", real_key(&Config::guidance, &GuidanceConfig::temperature)},
      {"griffin_lim_iters",
       {[](Config& c, const std::string& v, const std::string& w) { c.griffin_lim_iters = parse_number<int>(v, w); },
        [](const Config& c) { return std::to_string(c.griffin_lim_iters); }}},
  };
  return k;
}

}  // namespace

void Config::validate() const {
  audio.validate();
  model.validate();
  guidance.validate();
  if (audio.n_mels != model.n_mels) throw ConfigError("audio and model n_mels differ");
  if (!(train.learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
  if (train.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (train.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (train.checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
  if (griffin_lim_iters < 1) throw ConfigError("griffin_lim_iters must be >= 1");
}

std::uint64_t Config::fingerprint() const {
  const std::string s = std::to_string(audio.fingerprint()) + "/" + std::to_string(model.fingerprint()) + "/" +
                        token_mode_name(token_mode);
  return binio::fnv1a64(s);
}

std::string Config::to_text() const {
  std::string out;
  for (const auto& [name, key] : keys()) out += name + "=" + key.get(*this) + "\n";
  return out;
}

Config parse_config(const std::string& text, const std::string& origin) {
  Config c;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key=value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    auto it = keys().find(key);
    if (it == keys().end()) throw ConfigError(where + ": unknown key \"" + key + "\"");
    it->second.set(c, value, where);
  }
  c.validate();
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path.string());
}

}  // namespace dvtts
