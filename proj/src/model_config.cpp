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

#include "dvtts/model_config.hpp"

#include <charconv>
#include <string>

#include "dvtts/binio.hpp"
#include "dvtts/errors.hpp"

namespace dvtts {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw ConfigError(std::string(name) + " must be >= 1");
  };
  positive(n_mels, "n_mels");
  positive(d_model, "d_model");
  positive(enc_layers, "enc_layers");
  positive(enc_heads, "enc_heads");
  positive(dur_heads, "dur_heads");
  positive(d_spk, "d_spk");
  positive(unet_channels, "unet_channels");
  positive(ref_frames, "ref_frames");
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("kernel must be odd");
  if (time_dim < 2 || time_dim % 2 != 0) throw ConfigError("time_dim must be even and >= 2");
  if (d_model % enc_heads != 0) throw ConfigError("enc_heads must divide d_model");
  if (d_model % dur_heads != 0) throw ConfigError("dur_heads must divide d_model");
  if (!(beta0 > 0) || !(beta1 > beta0)) throw ConfigError("noise schedule needs 0 < beta0 < beta1");
}

std::uint64_t ModelConfig::fingerprint() const {
  const std::string s = "n_mels=" + std::to_string(n_mels) + ";d_model=" + std::to_string(d_model) +
                        ";enc_layers=" + std::to_string(enc_layers) + ";enc_heads=" + std::to_string(enc_heads) +
                        ";kernel=" + std::to_string(kernel) + ";dur_heads=" + std::to_string(dur_heads) +
                        ";d_spk=" + std::to_string(d_spk) + ";unet_channels=" + std::to_string(unet_channels) +
                        ";time_dim=" + std::to_string(time_dim) + ";ref_frames=" + std::to_string(ref_frames) +
                        ";beta0=" + fmt(beta0) + ";beta1=" + fmt(beta1);
  return binio::fnv1a64(s);
}

}  // namespace dvtts
