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

#include "dvtts/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Writes a synthetic multi-speaker corpus"};
  std::string out;
  dvtts::SyntheticCorpusOptions opt;
  app.add_option("out", out, "output directory")->required();
  app.add_option("--speakers", opt.speakers, "number of speakers");
  app.add_option("--utterances", opt.utterances_per_speaker, "utterances per speaker");
  app.add_option("--seconds", opt.seconds, "approximate utterance length");
  app.add_option("--sample-rate", opt.sample_rate, "sample rate in Hz");
  app.add_option("--seed", opt.seed, "random seed");
  CLI11_PARSE(app, argc, argv);
  try {
    dvtts::write_synthetic_corpus(out, dvtts::make_synthetic_corpus(opt));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "make_toy_corpus: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
