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

#include "wordlens/harness.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "wordlens/error.h"

namespace wordlens {

void EvalRecord::validate() const {
  if (options.size() < 2) {
    throw ValidationError("record '" + id + "' has fewer than 2 options");
  }
  std::set<std::string> labels;
  for (const auto& o : options) {
    if (o.label.empty()) {
      throw ValidationError("record '" + id + "' has an empty option label");
    }
    if (!labels.insert(o.label).second) {
      throw ValidationError("record '" + id + "' repeats option label '" +
                            o.label + "'");
    }
  }
  if (!labels.count(answer_label)) {
    throw ValidationError("record '" + id + "' answer_label '" + answer_label +
                          "' is not an option label");
  }
}

std::vector<EvalRecord> parse_dataset(std::string_view jsonl) {
  std::vector<EvalRecord> out;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    std::size_t eol = jsonl.find('\n', pos);
    if (eol == std::string_view::npos) eol = jsonl.size();
    const std::string_view line = jsonl.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const std::string where = "dataset line " + std::to_string(line_no) + ": ";
    EvalRecord r;
    try {
      const auto j = nlohmann::json::parse(line);
      for (const char* field : {"id", "question", "options", "answer_label"}) {
        if (!j.contains(field)) {
          throw FormatError(where + "missing field '" + field + "'");
        }
      }
      r.id = j.at("id").get<std::string>();
      r.question = j.at("question").get<std::string>();
      r.answer_label = j.at("answer_label").get<std::string>();
      for (const auto& o : j.at("options")) {
        r.options.push_back(
            {o.at("label").get<std::string>(), o.at("text").get<std::string>()});
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + e.what());
    }
    try {
      r.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
    if (!ids.insert(r.id).second) {
      throw ValidationError(where + "duplicate id '" + r.id + "'");
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<EvalRecord> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str());
}

const char* to_string(TokenizerMode mode) {
  return mode == TokenizerMode::kCanonical ? "canonical" : "character";
}

TokenizerMode parse_tokenizer_mode(std::string_view name) {
  if (name == "canonical") return TokenizerMode::kCanonical;
  if (name == "character") return TokenizerMode::kCharacter;
  throw ValidationError("unknown tokenizer mode '" + std::string(name) + "'");
}

std::string build_prompt(const EvalRecord& record) {
  std::string prompt = "Question: " + record.question + "\n";
  for (const auto& o : record.options) {
    prompt += o.label + ". " + o.text + "\n";
  }
  prompt += "Answer:";
  return prompt;
}

PreparedExample prepare_example(const EvalRecord& record,
                                const Vocabulary& vocab) {
  record.validate();
  PreparedExample ex;
  ex.record = record;
  ex.prompt = build_prompt(record);
  ex.canonical = bpe_encode(ex.prompt, vocab);
  ex.chars = char_tokenize(ex.prompt, vocab);
  ex.groups = align_spans(ex.canonical, ex.chars);
  for (const auto& o : record.options) {
    const auto id = vocab.find_bytes(o.label);
    if (!id) {
      throw ValidationError("record '" + record.id + "' label '" + o.label +
                            "' is not a single vocabulary token");
    }
    ex.label_tokens.push_back(*id);
  }
  return ex;
}

std::vector<PreparedExample> prepare_dataset(std::span<const EvalRecord> records,
                                             const Vocabulary& vocab) {
  std::vector<PreparedExample> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(prepare_example(r, vocab));
  return out;
}

OptionScores score_options(const Model& model, const PreparedExample& example,
                           TokenizerMode mode, const HookSet& hooks) {
  const auto& tokens = example.tokens(mode);
  if (tokens.empty()) throw ValidationError("empty prompt");
  const CapturedRun run = forward(model, tokens, hooks);
  const auto last = run.logits.row(run.logits.rows() - 1);
  float max_logit = last[0];
  for (float v : last) max_logit = std::max(max_logit, v);
  double sum = 0.0;
  for (float v : last) sum += std::exp(static_cast<double>(v) - max_logit);
  const double log_z = max_logit + std::log(sum);

  OptionScores scores;
  for (std::size_t i = 0; i < example.label_tokens.size(); ++i) {
    const TokenId t = example.label_tokens[i];
    if (static_cast<std::size_t>(t) >= last.size()) {
      throw ValidationError("label token id outside the model vocabulary");
    }
    scores.log_probs.push_back(static_cast<double>(last[t]) - log_z);
    if (scores.log_probs[i] > scores.log_probs[scores.chosen]) scores.chosen = i;
  }
  return scores;
}

EvalResult evaluate(const Model& model, std::span<const PreparedExample> examples,
                    TokenizerMode mode, const HookFactory& hooks) {
  EvalResult result;
  result.total = examples.size();
  for (const auto& ex : examples) {
    const HookSet h = hooks ? hooks(ex, mode) : HookSet{};
    const OptionScores s = score_options(model, ex, mode, h);
    ExampleOutcome o;
    o.id = ex.record.id;
    o.chosen_label = ex.record.options[s.chosen].label;
    o.correct = o.chosen_label == ex.record.answer_label;
    result.correct += o.correct ? 1 : 0;
    result.outcomes.push_back(std::move(o));
  }
  result.accuracy = result.total == 0 ? 0.0
                                      : static_cast<double>(result.correct) /
                                            static_cast<double>(result.total);
  return result;
}

CapturedRun character_run(const Model& model, const PreparedExample& example,
                          const HookSet& extra) {
  HookSet hooks = extra;
  hooks.capture_hidden = true;
  return forward(model, example.chars.token_ids, hooks);
}

RecoveryProfile example_recovery(const Model& model,
                                 const PreparedExample& example, std::size_t k,
                                 const HookSet& hooks) {
  const CapturedRun run = character_run(model, example, hooks);
  return recovery_profile(model, run, example.groups, k);
}

std::vector<RecoveryProfile> dataset_recovery(
    const Model& model, std::span<const PreparedExample> examples,
    std::span<const std::size_t> ks) {
  if (ks.empty()) throw ValidationError("need at least one k");
  if (examples.empty()) throw ValidationError("dataset is empty");
  const std::size_t max_k = *std::max_element(ks.begin(), ks.end());
  std::map<std::size_t, std::vector<RecoveryProfile>> per_k;
  for (const auto& ex : examples) {
    const CapturedRun run = character_run(model, ex);
    const LayerDecodes decodes = LayerDecodes::compute(model, run, max_k);
    for (auto& [k, profile] :
         topk_sweep(decodes, TargetSet::from_groups(ex.groups), ex.groups, ks)) {
      per_k[k].push_back(std::move(profile));
    }
  }
  std::vector<RecoveryProfile> out;
  for (const auto& [k, profiles] : per_k) out.push_back(mean_profile(profiles));
  return out;
}

void check_compatible(const Model& model, const Vocabulary& vocab) {
  if (model.config.vocab_size != vocab.size()) {
    throw ConfigError("model vocab_size " +
                      std::to_string(model.config.vocab_size) +
                      " does not match vocabulary size " +
                      std::to_string(vocab.size()));
  }
}

}  // namespace wordlens
