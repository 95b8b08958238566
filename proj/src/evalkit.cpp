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

#include "dvtts/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "dvtts/autodiff.hpp"
#include "dvtts/errors.hpp"
#include "dvtts/unicode.hpp"

namespace dvtts {

std::string normalize_for_metrics(const std::string& text) {
  std::string out;
  for (const std::string& w : split_whitespace(nfc(text))) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::size_t edit_distance(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double cer(const std::string& reference, const std::string& hypothesis) {
  const auto ref = code_points(normalize_for_metrics(reference));
  if (ref.empty()) throw RangeError("cer: empty reference");
  const auto hyp = code_points(normalize_for_metrics(hypothesis));
  return static_cast<double>(edit_distance(ref, hyp)) / static_cast<double>(ref.size());
}

double wer(const std::string& reference, const std::string& hypothesis) {
  const auto ref = split_whitespace(normalize_for_metrics(reference));
  if (ref.empty()) throw RangeError("wer: empty reference");
  const auto hyp = split_whitespace(normalize_for_metrics(hypothesis));
  return static_cast<double>(edit_distance(ref, hyp)) / static_cast<double>(ref.size());
}

Metric parse_metric(const std::string& name) {
  if (name == "cer") return Metric::cer;
  if (name == "wer") return Metric::wer;
  if (name == "simo") return Metric::simo;
  throw ConfigError("unknown metric \"" + name + "\" (expected cer, wer or simo)");
}

TableFormat parse_table_format(const std::string& name) {
  if (name == "tsv") return TableFormat::tsv;
  if (name == "markdown") return TableFormat::markdown;
  throw ConfigError("unknown table format \"" + name + "\" (expected tsv or markdown)");
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

}  // namespace

std::vector<UtteranceRecord> parse_manifest(const std::string& text, const std::string& origin) {
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) -> FormatError {
    return FormatError(origin + ":" + std::to_string(lineno) + ": " + msg);
  };
  std::map<std::string, std::size_t> col;
  std::vector<UtteranceRecord> records;
  std::set<std::string> ids;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (col.empty()) {
      static const std::set<std::string> known{"id", "dataset", "language", "reference", "hypothesis", "sim_o", "source"};
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (!known.count(fields[i])) throw fail("unknown column \"" + fields[i] + "\"");
        if (!col.emplace(fields[i], i).second) throw fail("duplicate column \"" + fields[i] + "\"");
      }
      for (const char* req : {"id", "dataset", "language", "reference", "hypothesis", "sim_o"})
        if (!col.count(req)) throw fail(std::string("missing column \"") + req + "\"");
      continue;
    }
    if (fields.size() != col.size()) {
      throw fail("expected " + std::to_string(col.size()) + " fields, found " + std::to_string(fields.size()));
    }
    UtteranceRecord r;
    r.id = fields[col["id"]];
    r.dataset = fields[col["dataset"]];
    r.language = fields[col["language"]];
    r.reference = fields[col["reference"]];
    if (r.id.empty() || r.dataset.empty() || r.language.empty()) throw fail("id, dataset and language are required");
    if (!ids.insert(r.id).second) throw fail("duplicate id \"" + r.id + "\"");
    if (col.count("source")) {
      r.source = fields[col["source"]];
      if (r.source != "tts" && r.source != "asr") throw fail("source must be tts or asr");
    }
    if (const auto& h = fields[col["hypothesis"]]; !h.empty()) r.hypothesis = h;
    if (const auto& s = fields[col["sim_o"]]; !s.empty()) {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(s, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != s.size() || !std::isfinite(v)) throw fail("bad sim_o value \"" + s + "\"");
      r.sim_o = v;
    }
    records.push_back(std::move(r));
  }
  if (col.empty()) throw FormatError(origin + ": missing header line");
  return records;
}

std::vector<UtteranceRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_manifest(ss.str(), path.string());
}

const Cell* MetricTable::cell(const std::string& dataset, const std::pair<std::string, std::string>& column) const {
  auto it = cells.find({dataset, column});
  return it == cells.end() ? nullptr : &it->second;
}

MetricTable aggregate(std::span<const UtteranceRecord> records, Metric metric) {
  if (records.empty()) throw RangeError("aggregate: no records");
  MetricTable table;
  table.metric = metric;
  std::map<std::pair<std::string, std::pair<std::string, std::string>>, std::vector<double>> values;
  std::set<std::string> datasets;
  std::set<std::pair<std::string, std::string>> columns;
  for (const UtteranceRecord& r : records) {
    double v = 0;
    if (metric == Metric::simo) {
      if (!r.sim_o) {
        ++table.skipped;
        continue;
      }
      v = *r.sim_o;
    } else {
      if (!r.hypothesis) {
        ++table.skipped;
        continue;
      }
      v = metric == Metric::cer ? cer(r.reference, *r.hypothesis) : wer(r.reference, *r.hypothesis);
    }
    datasets.insert(r.dataset);
    columns.insert({r.language, r.source});
    values[{r.dataset, {r.language, r.source}}].push_back(v);
  }
  table.datasets.assign(datasets.begin(), datasets.end());
  table.columns.assign(columns.begin(), columns.end());
  for (auto& [key, vs] : values) {
    const std::size_t n = vs.size();
    table.cells[key] = Cell{order_independent_sum(std::move(vs)) / static_cast<double>(n), n};
  }
  return table;
}

std::string format_cell(Metric metric, double value) {
  char buf[64];
  if (metric == Metric::simo) {
    std::snprintf(buf, sizeof buf, "%.4f", value);
  } else {
    std::snprintf(buf, sizeof buf, "%.2f", value * 100.0);
  }
  return buf;
}

std::string render_table(const MetricTable& table, TableFormat format) {
  const std::string label = table.metric == Metric::cer ? "CER" : table.metric == Metric::wer ? "WER" : "SIM-O";
  std::vector<std::string> header{"dataset"};
  for (const auto& [lang, source] : table.columns) {
    std::string src = source;
    std::transform(src.begin(), src.end(), src.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    header.push_back(lang + " " + src + "-" + label);
  }
  std::vector<std::vector<std::string>> rows;
  for (const std::string& ds : table.datasets) {
    std::vector<std::string> row{ds};
    for (const auto& c : table.columns) {
      const Cell* cell = table.cell(ds, c);
      row.push_back(cell ? format_cell(table.metric, cell->mean) : "--");
    }
    rows.push_back(std::move(row));
  }
  std::string out;
  auto emit = [&](const std::vector<std::string>& r) {
    if (format == TableFormat::tsv) {
      for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "\t" : "") + r[i];
    } else {
      out += "|";
      for (const auto& f : r) out += " " + f + " |";
    }
    out += '\n';
  };
  emit(header);
  if (format == TableFormat::markdown) {
    out += "|";
    for (std::size_t i = 0; i < header.size(); ++i) out += i == 0 ? " --- |" : " ---: |";
    out += '\n';
  }
  for (const auto& r : rows) emit(r);
  return out;
}

}  // namespace dvtts
