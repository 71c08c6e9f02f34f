// Copyright 2026 The wordlens Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "wordlens/report.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <utility>

#include "json.hpp"
#include "wordlens/error.h"

namespace wordlens {
namespace {

constexpr double kConsistencyTol = 1e-9;

using Fields = std::vector<std::pair<std::string, std::string>>;

std::string json_string(std::string_view s) { return nlohmann::json(s).dump(); }
std::string num(std::size_t v) { return std::to_string(v); }
std::string boolean(bool v) { return v ? "true" : "false"; }

// {"a": 1, "b": 2} on one line.
std::string inline_object(const Fields& fields) {
  std::string out = "{";
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ", ";
    out += json_string(fields[i].first) + ": " + fields[i].second;
  }
  return out + "}";
}

// Multi-line array of pre-rendered items at the given indent.
std::string block_array(const std::vector<std::string>& items, int indent) {
  if (items.empty()) return "[]";
  const std::string pad(indent + 2, ' ');
  std::string out = "[\n";
  for (std::size_t i = 0; i < items.size(); ++i) {
    out += pad + items[i] + (i + 1 < items.size() ? ",\n" : "\n");
  }
  return out + std::string(indent, ' ') + "]";
}

std::string block_object(const Fields& fields, int indent) {
  const std::string pad(indent + 2, ' ');
  std::string out = "{\n";
  for (std::size_t i = 0; i < fields.size(); ++i) {
    out += pad + json_string(fields[i].first) + ": " + fields[i].second +
           (i + 1 < fields.size() ? ",\n" : "\n");
  }
  return out + std::string(indent, ' ') + "}";
}

std::vector<std::string> layer_items(const RecoveryProfile& p) {
  std::vector<std::string> items;
  for (std::size_t l = 0; l < p.per_layer.size(); ++l) {
    Fields f = {{"layer", num(l)}, {"r_set", format_fixed(p.per_layer[l])}};
    if (!p.per_layer_group.empty()) {
      f.emplace_back("r_group", format_fixed(p.per_layer_group[l]));
    }
    items.push_back(inline_object(f));
  }
  return items;
}

std::string profile_object(const RecoveryProfile& p, int indent) {
  return block_object({{"K", num(p.k)},
                       {"max_score", format_fixed(p.max_score)},
                       {"max_layer", num(p.max_layer)},
                       {"layer0", json_string("embedding")},
                       {"layers", block_array(layer_items(p), indent + 2)}},
                      indent);
}

double parse_double(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(std::string("bad number for ") + what + ": '" + s + "'");
  }
}

std::size_t parse_size(const std::string& s, const char* what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw FormatError(std::string("bad integer for ") + what + ": '" + s + "'");
  }
  return std::stoull(s);
}

bool parse_bool(const std::string& s, const char* what) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw FormatError(std::string("bad boolean for ") + what + ": '" + s + "'");
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = eol + 1;
  }
  return lines;
}

void expect_header(const std::vector<std::string>& got,
                   std::initializer_list<const char*> want) {
  if (got.size() != want.size() ||
      !std::equal(got.begin(), got.end(), want.begin())) {
    throw FormatError("unexpected CSV header");
  }
}

}  // namespace

std::string format_fixed(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  // Avoid "-0.000000".
  if (std::string_view(buf) == "-0.000000") return "0.000000";
  return buf;
}

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\n\r") == std::string_view::npos) {
    return std::string(value);
  }
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> parse_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        in_quotes = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (in_quotes) throw FormatError("unterminated quoted CSV field");
  return fields;
}

void EvalReport::validate() const {
  auto fail = [](const std::string& what) {
    throw ValidationError("report inconsistent: " + what);
  };
  for (double a : {canon_accuracy, char_accuracy}) {
    if (!(a >= 0.0 && a <= 1.0)) fail("accuracy outside [0, 1]");
  }
  if (std::abs(char_delta - (char_accuracy - canon_accuracy)) > kConsistencyTol) {
    fail("char_delta != char_accuracy - canon_accuracy");
  }
  if (examples.size() != n_examples) fail("example count");
  if (n_examples > 0) {
    std::size_t canon = 0, chr = 0;
    for (const auto& e : examples) {
      canon += e.canon_correct;
      chr += e.char_correct;
    }
    const double n = static_cast<double>(n_examples);
    if (std::abs(canon / n - canon_accuracy) > kConsistencyTol) {
      fail("canon_accuracy does not match per-example outcomes");
    }
    if (std::abs(chr / n - char_accuracy) > kConsistencyTol) {
      fail("char_accuracy does not match per-example outcomes");
    }
  }
  if (!recovery.per_layer.empty()) {
    const auto it =
        std::max_element(recovery.per_layer.begin(), recovery.per_layer.end());
    if (std::abs(*it - max_recovery) > kConsistencyTol) {
      fail("max_recovery is not the maximum of the layer means");
    }
    if (std::abs(recovery.per_layer[max_layer] - max_recovery) > kConsistencyTol) {
      fail("max_layer does not hold max_recovery");
    }
    for (double r : recovery.per_layer) {
      if (!(r >= 0.0 && r <= 1.0)) fail("recovery outside [0, 1]");
    }
  }
}

EvalReport full_report(const Model& model,
                       std::span<const PreparedExample> examples,
                       std::size_t k, std::string dataset_name,
                       std::string model_name) {
  EvalReport report;
  report.dataset = std::move(dataset_name);
  report.model = std::move(model_name);
  report.k = k;
  report.n_examples = examples.size();
  const EvalResult canon = evaluate(model, examples, TokenizerMode::kCanonical);
  const EvalResult chars = evaluate(model, examples, TokenizerMode::kCharacter);
  report.canon_accuracy = canon.accuracy;
  report.char_accuracy = chars.accuracy;
  report.char_delta = chars.accuracy - canon.accuracy;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    report.examples.push_back({canon.outcomes[i].id, canon.outcomes[i].chosen_label,
                               canon.outcomes[i].correct,
                               chars.outcomes[i].chosen_label,
                               chars.outcomes[i].correct});
  }
  if (!examples.empty()) {
    std::vector<RecoveryProfile> profiles;
    profiles.reserve(examples.size());
    for (const auto& ex : examples) {
      profiles.push_back(example_recovery(model, ex, k));
    }
    report.recovery = mean_profile(profiles);
  } else {
    report.recovery.k = k;
  }
  report.max_recovery = report.recovery.max_score;
  report.max_layer = report.recovery.max_layer;
  report.validate();
  return report;
}

std::string report_json(const EvalReport& r) {
  std::vector<std::string> examples;
  for (const auto& e : r.examples) {
    examples.push_back(inline_object({{"id", json_string(e.id)},
                                      {"canon_label", json_string(e.canon_label)},
                                      {"canon_correct", boolean(e.canon_correct)},
                                      {"char_label", json_string(e.char_label)},
                                      {"char_correct", boolean(e.char_correct)}}));
  }
  return block_object({{"dataset", json_string(r.dataset)},
                       {"model", json_string(r.model)},
                       {"K", num(r.k)},
                       {"n_examples", num(r.n_examples)},
                       {"canon_accuracy", format_fixed(r.canon_accuracy)},
                       {"char_accuracy", format_fixed(r.char_accuracy)},
                       {"char_delta", format_fixed(r.char_delta)},
                       {"max_recovery", format_fixed(r.max_recovery)},
                       {"max_layer", num(r.max_layer)},
                       {"layer0", json_string("embedding")},
                       {"layers", block_array(layer_items(r.recovery), 2)},
                       {"examples", block_array(examples, 2)}},
                      0) +
         "\n";
}

EvalReport parse_report_json(std::string_view text) {
  EvalReport r;
  try {
    const auto j = nlohmann::json::parse(text);
    r.dataset = j.at("dataset").get<std::string>();
    r.model = j.at("model").get<std::string>();
    r.k = j.at("K").get<std::size_t>();
    r.n_examples = j.at("n_examples").get<std::size_t>();
    r.canon_accuracy = j.at("canon_accuracy").get<double>();
    r.char_accuracy = j.at("char_accuracy").get<double>();
    r.char_delta = j.at("char_delta").get<double>();
    r.max_recovery = j.at("max_recovery").get<double>();
    r.max_layer = j.at("max_layer").get<std::size_t>();
    r.recovery.k = r.k;
    for (const auto& l : j.at("layers")) {
      r.recovery.per_layer.push_back(l.at("r_set").get<double>());
      if (l.contains("r_group")) {
        r.recovery.per_layer_group.push_back(l.at("r_group").get<double>());
      }
    }
    for (const auto& e : j.at("examples")) {
      r.examples.push_back({e.at("id").get<std::string>(),
                            e.at("canon_label").get<std::string>(),
                            e.at("canon_correct").get<bool>(),
                            e.at("char_label").get<std::string>(),
                            e.at("char_correct").get<bool>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report JSON: ") + e.what());
  }
  r.recovery.max_score = r.max_recovery;
  r.recovery.max_layer = r.max_layer;
  return r;
}

std::string report_csv(const EvalReport& r) {
  std::string out = "# summary\n";
  out += "dataset,model,n_examples,K,canon_accuracy,char_accuracy,char_delta,"
         "max_recovery,max_layer\n";
  out += csv_field(r.dataset) + "," + csv_field(r.model) + "," +
         num(r.n_examples) + "," + num(r.k) + "," +
         format_fixed(r.canon_accuracy) + "," + format_fixed(r.char_accuracy) +
         "," + format_fixed(r.char_delta) + "," + format_fixed(r.max_recovery) +
         "," + num(r.max_layer) + "\n";
  out += "# layers\nlayer,r_set,r_group\n";
  for (std::size_t l = 0; l < r.recovery.per_layer.size(); ++l) {
    out += num(l) + "," + format_fixed(r.recovery.per_layer[l]) + "," +
           (r.recovery.per_layer_group.empty()
                ? std::string()
                : format_fixed(r.recovery.per_layer_group[l])) +
           "\n";
  }
  out += "# examples\nid,canon_label,canon_correct,char_label,char_correct\n";
  for (const auto& e : r.examples) {
    out += csv_field(e.id) + "," + csv_field(e.canon_label) + "," +
           (e.canon_correct ? "1" : "0") + "," + csv_field(e.char_label) + "," +
           (e.char_correct ? "1" : "0") + "\n";
  }
  return out;
}

EvalReport parse_report_csv(std::string_view text) {
  EvalReport r;
  std::string section;
  bool header_pending = false;
  bool have_summary = false;
  for (std::string_view line : split_lines(text)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      section = std::string(line.substr(line.find_first_not_of("# ")));
      header_pending = true;
      continue;
    }
    const auto f = parse_csv_line(line);
    if (section == "summary") {
      if (header_pending) {
        expect_header(f, {"dataset", "model", "n_examples", "K", "canon_accuracy",
                          "char_accuracy", "char_delta", "max_recovery",
                          "max_layer"});
        header_pending = false;
        continue;
      }
      if (f.size() != 9 || have_summary) throw FormatError("bad summary row");
      r.dataset = f[0];
      r.model = f[1];
      r.n_examples = parse_size(f[2], "n_examples");
      r.k = parse_size(f[3], "K");
      r.canon_accuracy = parse_double(f[4], "canon_accuracy");
      r.char_accuracy = parse_double(f[5], "char_accuracy");
      r.char_delta = parse_double(f[6], "char_delta");
      r.max_recovery = parse_double(f[7], "max_recovery");
      r.max_layer = parse_size(f[8], "max_layer");
      have_summary = true;
    } else if (section == "layers") {
      if (header_pending) {
        expect_header(f, {"layer", "r_set", "r_group"});
        header_pending = false;
        continue;
      }
      if (f.size() != 3 || parse_size(f[0], "layer") != r.recovery.per_layer.size()) {
        throw FormatError("bad layer row");
      }
      r.recovery.per_layer.push_back(parse_double(f[1], "r_set"));
      if (!f[2].empty()) {
        r.recovery.per_layer_group.push_back(parse_double(f[2], "r_group"));
      }
    } else if (section == "examples") {
      if (header_pending) {
        expect_header(f, {"id", "canon_label", "canon_correct", "char_label",
                          "char_correct"});
        header_pending = false;
        continue;
      }
      if (f.size() != 5) throw FormatError("bad example row");
      r.examples.push_back({f[0], f[1], parse_bool(f[2], "canon_correct"), f[3],
                            parse_bool(f[4], "char_correct")});
    } else {
      throw FormatError("CSV row outside a known section");
    }
  }
  if (!have_summary) throw FormatError("report CSV has no summary row");
  r.recovery.k = r.k;
  r.recovery.max_score = r.max_recovery;
  r.recovery.max_layer = r.max_layer;
  return r;
}

std::string report_table(std::span<const EvalReport> reports) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-16s %-16s %8s %9s %18s\n", "Dataset",
                "Model", "Canon", "Char \xCE\x94", "Recovery (layer)");
  out += buf;
  // The Greek capital delta is two bytes but one column; pad the rule to match.
  out += std::string(70, '-') + "\n";
  for (const auto& r : reports) {
    char rec[64];
    std::snprintf(rec, sizeof(rec), "%.1f (L%zu%s)", 100.0 * r.max_recovery,
                  r.max_layer, r.max_layer == 0 ? ", embed" : "");
    std::snprintf(buf, sizeof(buf), "%-16s %-16s %8.1f %+7.2f %18s\n",
                  r.dataset.c_str(), r.model.c_str(), 100.0 * r.canon_accuracy,
                  100.0 * r.char_delta, rec);
    out += buf;
  }
  return out;
}

std::string eval_csv(const EvalResult& result) {
  std::string out = "id,chosen_label,correct\n";
  for (const auto& o : result.outcomes) {
    out += csv_field(o.id) + "," + csv_field(o.chosen_label) + "," +
           (o.correct ? "1" : "0") + "\n";
  }
  return out;
}

std::string eval_json(const EvalResult& result, TokenizerMode mode) {
  std::vector<std::string> items;
  for (const auto& o : result.outcomes) {
    items.push_back(inline_object({{"id", json_string(o.id)},
                                   {"chosen_label", json_string(o.chosen_label)},
                                   {"correct", boolean(o.correct)}}));
  }
  return block_object({{"mode", json_string(to_string(mode))},
                       {"accuracy", format_fixed(result.accuracy)},
                       {"correct", num(result.correct)},
                       {"total", num(result.total)},
                       {"examples", block_array(items, 2)}},
                      0) +
         "\n";
}

std::string profiles_csv(std::span<const RecoveryProfile> profiles) {
  std::string out = "layer,r_set,r_group,K\n";
  for (const auto& p : profiles) {
    for (std::size_t l = 0; l < p.per_layer.size(); ++l) {
      out += num(l) + "," + format_fixed(p.per_layer[l]) + "," +
             (p.per_layer_group.empty() ? std::string()
                                        : format_fixed(p.per_layer_group[l])) +
             "," + num(p.k) + "\n";
    }
  }
  return out;
}

std::string profiles_json(std::span<const RecoveryProfile> profiles) {
  std::vector<std::string> items;
  for (const auto& p : profiles) items.push_back(profile_object(p, 4));
  return block_object({{"profiles", block_array(items, 2)}}, 0) + "\n";
}

std::string intervention_sweep_csv(std::span<const InterventionSweepRow> rows) {
  std::string out = "l0,accuracy,recovery_at_l0\n";
  for (const auto& r : rows) {
    out += num(r.start_layer) + "," + format_fixed(r.accuracy) + "," +
           format_fixed(r.recovery_at_start) + "\n";
  }
  return out;
}

std::string intervention_sweep_json(std::span<const InterventionSweepRow> rows) {
  std::vector<std::string> items;
  for (const auto& r : rows) {
    items.push_back(inline_object({{"l0", num(r.start_layer)},
                                   {"accuracy", format_fixed(r.accuracy)},
                                   {"recovery_at_l0", format_fixed(r.recovery_at_start)}}));
  }
  return block_object({{"rows", block_array(items, 2)}}, 0) + "\n";
}

std::string mask_sweep_csv(std::span<const MaskSweepRow> rows) {
  std::string out = "l0,accuracy\n";
  for (const auto& r : rows) {
    out += num(r.start_layer) + "," + format_fixed(r.accuracy) + "\n";
  }
  return out;
}

std::string mask_sweep_json(std::span<const MaskSweepRow> rows) {
  std::vector<std::string> items;
  for (const auto& r : rows) {
    items.push_back(inline_object(
        {{"l0", num(r.start_layer)}, {"accuracy", format_fixed(r.accuracy)}}));
  }
  return block_object({{"rows", block_array(items, 2)}}, 0) + "\n";
}

std::string masked_recovery_csv(const MaskedRecovery& result) {
  std::string out = "layer,r_masked,r_baseline\n";
  for (std::size_t l = 0; l < result.baseline.per_layer.size(); ++l) {
    out += num(l) + "," + format_fixed(result.masked.per_layer[l]) + "," +
           format_fixed(result.baseline.per_layer[l]) + "\n";
  }
  return out;
}

std::string masked_recovery_json(const MaskedRecovery& result,
                                 std::size_t first_n_layers) {
  return block_object({{"first_n_layers", num(first_n_layers)},
                       {"masked", profile_object(result.masked, 2)},
                       {"baseline", profile_object(result.baseline, 2)}},
                      0) +
         "\n";
}

}  // namespace wordlens
