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

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dvtts {

// NFC, trim, and collapse internal whitespace runs to one space.
std::string normalize_for_metrics(const std::string& text);

// Unit-cost Levenshtein distance between token sequences.
std::size_t edit_distance(std::span<const std::string> a, std::span<const std::string> b);

// Character (code point) and word error rates: distance / reference length.
// Both throw RangeError for an empty normalised reference.
double cer(const std::string& reference, const std::string& hypothesis);
double wer(const std::string& reference, const std::string& hypothesis);

enum class Metric { cer, wer, simo };
Metric parse_metric(const std::string& name);

struct UtteranceRecord {
  std::string id;
  std::string dataset;
  std::string language;
  std::string source = "tts";  // which system produced the hypothesis: tts or asr
  std::string reference;
  std::optional<std::string> hypothesis;
  std::optional<double> sim_o;
};

// Tab-separated manifest with a header naming the columns id, dataset,
// language, reference, hypothesis, sim_o and optionally source. Empty
// hypothesis or sim_o fields mean "absent".
std::vector<UtteranceRecord> read_manifest(const std::filesystem::path& path);
std::vector<UtteranceRecord> parse_manifest(const std::string& text, const std::string& origin = "manifest");

struct Cell {
  double mean = 0;
  std::size_t count = 0;
};

// Rows are datasets, columns (language, source) pairs, both sorted.
struct MetricTable {
  Metric metric = Metric::cer;
  std::vector<std::string> datasets;
  std::vector<std::pair<std::string, std::string>> columns;
  std::map<std::pair<std::string, std::pair<std::string, std::string>>, Cell> cells;
  std::size_t skipped = 0;  // records lacking the selected metric field

  const Cell* cell(const std::string& dataset, const std::pair<std::string, std::string>& column) const;
};

// Per-cell unweighted mean of the per-utterance metric.
MetricTable aggregate(std::span<const UtteranceRecord> records, Metric metric);

enum class TableFormat { tsv, markdown };
TableFormat parse_table_format(const std::string& name);

// Error rates are shown in percent with 2 decimals, SIM-O with 4 decimals,
// missing cells as "--".
std::string render_table(const MetricTable& table, TableFormat format);
std::string format_cell(Metric metric, double value);

}  // namespace dvtts
