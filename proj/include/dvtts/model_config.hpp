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

#include <cstddef>
#include <cstdint>

namespace dvtts {

// Architecture hyperparameters shared by the encoder, duration predictor,
// speaker embedder and score network.
struct ModelConfig {
  int n_mels = 80;
  int d_model = 128;
  int enc_layers = 4;
  int enc_heads = 2;
  int kernel = 3;
  int dur_heads = 1;
  int d_spk = 64;
  int unet_channels = 64;
  int time_dim = 32;
  int ref_frames = 172;
  double beta0 = 0.05;
  double beta1 = 20.0;

  void validate() const;
  std::uint64_t fingerprint() const;
  bool operator==(const ModelConfig&) const = default;
};

}  // namespace dvtts
