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
#include <random>

#include "doctest.h"
#include "dvtts/errors.hpp"
#include "dvtts/evalkit.hpp"
#include "dvtts/unicode.hpp"

using namespace dvtts;

namespace {

// Full-matrix Levenshtein, written independently of the library version.
std::size_t oracle_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t best = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u);
      if (d[i - 1][j] + 1 < best) best = d[i - 1][j] + 1;
      if (d[i][j - 1] + 1 < best) best = d[i][j - 1] + 1;
      d[i][j] = best;
    }
  }
  return d[a.size()][b.size()];
}

std::string random_text(std::mt19937_64& rng, std::size_t max_len) {
  static const std::vector<std::string> alphabet{"a", "b", "c", " ", "\xE0\xA4\x95", "\xE0\xA4\xBE", "\xC3\xA9", "d"};
  std::uniform_int_distribution<std::size_t> len(0, max_len), pick(0, alphabet.size() - 1);
  std::string s;
  for (std::size_t i = len(rng); i > 0; --i) s += alphabet[pick(rng)];
  return s;
}

}  // namespace

TEST_CASE("cer and wer examples") {
  CHECK(cer("abc", "abc") == 0.0);
  CHECK(cer("kitten", "sitting") == 0.5);
  CHECK(cer("ab", "") == 1.0);
  CHECK(cer("ab", "xyzw") == 2.0);
  CHECK(wer("the cat sat", "the cat sat") == 0.0);
  CHECK(wer("a b c", "a x c") == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(wer("a", "a b") == 1.0);
  CHECK(wer("  a   b ", "a b") == 0.0);
  CHECK(cer("e\xCC\x81", "\xC3\xA9") == 0.0);
  CHECK_THROWS_AS(cer("", "x"), RangeError);
  CHECK_THROWS_AS(cer("  \t", "x"), RangeError);
  CHECK_THROWS_AS(wer(" ", "x"), RangeError);
}

TEST_CASE("rates agree with an independent oracle") {
  std::mt19937_64 rng(2718);
  int checked = 0;
  while (checked < 1000) {
    const std::string ref = random_text(rng, 14), hyp = random_text(rng, 14);
    const std::string nref = normalize_for_metrics(ref), nhyp = normalize_for_metrics(hyp);
    if (nref.empty()) continue;
    const auto rc = code_points(nref), hc = code_points(nhyp);
    CHECK(cer(ref, hyp) == static_cast<double>(oracle_distance(rc, hc)) / static_cast<double>(rc.size()));
    const auto rw = split_whitespace(nref), hw = split_whitespace(nhyp);
    CHECK(wer(ref, hyp) == static_cast<double>(oracle_distance(rw, hw)) / static_cast<double>(rw.size()));
    ++checked;
  }
}

TEST_CASE("edit distance is a metric") {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 300; ++i) {
    const auto a = code_points(random_text(rng, 10)), b = code_points(random_text(rng, 10)),
               c = code_points(random_text(rng, 10));
    CHECK(edit_distance(a, a) == 0);
    CHECK(edit_distance(a, b) == edit_distance(b, a));
    CHECK(edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c));
  }
}

namespace {

UtteranceRecord rec(std::string id, std::string ds, std::string lang, std::optional<double> sim,
                    std::optional<std::string> hyp = std::nullopt, std::string ref = "abcd", std::string source = "tts") {
  UtteranceRecord r;
  r.id = std::move(id);
  r.dataset = std::move(ds);
  r.language = std::move(lang);
  r.source = std::move(source);
  r.reference = std::move(ref);
  r.hypothesis = std::move(hyp);
  r.sim_o = sim;
  return r;
}

}  // namespace

TEST_CASE("aggregate and render") {
  CHECK(format_cell(Metric::cer, 0.0616) == "6.16");
  CHECK(format_cell(Metric::simo, 0.72914) == "0.7291");
  const std::vector<UtteranceRecord> two{rec("1", "d", "hi", 0.4), rec("2", "d", "hi", 0.6)};
  const MetricTable t = aggregate(two, Metric::simo);
  CHECK(t.cell("d", {"hi", "tts"})->mean == 0.5);
  CHECK(t.cell("d", {"hi", "tts"})->count == 2);

  // Per-utterance rates 0.05 and 0.0732 average to 0.0616.
  std::vector<UtteranceRecord> table1;
  table1.push_back(rec("a", "Indicsuperb", "Hindi", std::nullopt, std::string(95, 'x') + std::string(5, 'y'),
                       std::string(100, 'x')));
  table1.push_back(rec("b", "Indicsuperb", "Hindi", std::nullopt, std::string(9268, 'x') + std::string(732, 'y'),
                       std::string(10000, 'x')));
  table1.push_back(rec("c", "CommonVoice", "Hindi", std::nullopt, std::string("abcd"), "abcd", "asr"));
  table1.push_back(rec("d", "CommonVoice", "Gujarati", 0.5));
  const MetricTable ct = aggregate(table1, Metric::cer);
  CHECK(ct.skipped == 1);
  CHECK(ct.datasets == std::vector<std::string>{"CommonVoice", "Indicsuperb"});
  const std::string tsv = render_table(ct, TableFormat::tsv);
  CHECK(tsv ==
        "dataset\tHindi ASR-CER\tHindi TTS-CER\n"
        "CommonVoice\t0.00\t--\n"
        "Indicsuperb\t--\t6.16\n");
  const std::string md = render_table(ct, TableFormat::markdown);
  CHECK(md ==
        "| dataset | Hindi ASR-CER | Hindi TTS-CER |\n"
        "| --- | ---: | ---: |\n"
        "| CommonVoice | 0.00 | -- |\n"
        "| Indicsuperb | -- | 6.16 |\n");
  CHECK(render_table(ct, TableFormat::markdown) == md);

  const std::vector<UtteranceRecord> one{rec("x", "ds", "Tamil", 0.7291)};
  const std::string simo = render_table(aggregate(one, Metric::simo), TableFormat::tsv);
  CHECK(simo == "dataset\tTamil TTS-SIM-O\nds\t0.7291\n");
  CHECK_THROWS_AS(aggregate(std::vector<UtteranceRecord>{}, Metric::cer), RangeError);
}

TEST_CASE("aggregate is permutation invariant") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<UtteranceRecord> recs;
  const char* ds[] = {"a", "b", "c"};
  const char* lang[] = {"hi", "ta"};
  for (int i = 0; i < 200; ++i) {
    recs.push_back(rec(std::to_string(i), ds[i % 3], lang[i % 2], u(rng), std::string("ab") + std::string(static_cast<std::size_t>(i % 4), 'z'),
                       "abcd", i % 5 == 0 ? "asr" : "tts"));
  }
  for (Metric m : {Metric::cer, Metric::wer, Metric::simo}) {
    const std::string want = render_table(aggregate(recs, m), TableFormat::tsv);
    const auto base = aggregate(recs, m);
    for (int trial = 0; trial < 5; ++trial) {
      std::shuffle(recs.begin(), recs.end(), rng);
      const auto t = aggregate(recs, m);
      for (const auto& [k, c] : base.cells) CHECK(t.cells.at(k).mean == c.mean);
      CHECK(render_table(t, TableFormat::tsv) == want);
    }
  }
}

TEST_CASE("manifest parsing") {
  const std::string good =
      "id\tdataset\tlanguage\treference\thypothesis\tsim_o\n"
      "u1\tIndicsuperb\tHindi\tabc\tabd\t\n"
      "u2\tIndicsuperb\tHindi\tabc\t\t0.75\n";
  const auto recs = parse_manifest(good);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].hypothesis == "abd");
  CHECK(!recs[0].sim_o);
  CHECK(!recs[1].hypothesis);
  CHECK(recs[1].sim_o == 0.75);
  CHECK(recs[1].source == "tts");

  auto line_of = [](const std::string& text) {
    try {
      parse_manifest(text, "m.tsv");
    } catch (const FormatError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(line_of(good + "u3\tx\ty\tz\n").find("m.tsv:4:") == 0);
  CHECK(line_of(good + "u4\tx\ty\tz\t\tnotanumber\n").find("m.tsv:4:") == 0);
  CHECK(line_of(good + "u1\tx\ty\tz\t\t0.5\n").find("duplicate id") != std::string::npos);
  CHECK(line_of("id\tdataset\n").find("missing column") != std::string::npos);
  CHECK(line_of("id\tdataset\tlanguage\treference\thypothesis\tsim_o\tbogus\n").find("unknown column") != std::string::npos);
  const auto with_source = parse_manifest(
      "id\tdataset\tlanguage\treference\thypothesis\tsim_o\tsource\n"
      "u1\td\tl\tabc\tabc\t\tasr\n");
  CHECK(with_source[0].source == "asr");
}
