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

#ifndef WORDLENS_HARNESS_H_
#define WORDLENS_HARNESS_H_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "wordlens/model.h"
#include "wordlens/recovery.h"
#include "wordlens/tokenizer.h"

namespace wordlens {

struct EvalOption {
  std::string label;
  std::string text;
  friend bool operator==(const EvalOption&, const EvalOption&) = default;
};

// One multiple-choice question.
struct EvalRecord {
  std::string id;
  std::string question;
  std::vector<EvalOption> options;
  std::string answer_label;

  // >= 2 options, unique labels, answer_label among them.
  void validate() const;
  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

// Newline-delimited JSON; blank lines are skipped. Errors carry the 1-based
// line number.
std::vector<EvalRecord> parse_dataset(std::string_view jsonl);
std::vector<EvalRecord> load_dataset(const std::filesystem::path& path);

enum class TokenizerMode { kCanonical, kCharacter };
const char* to_string(TokenizerMode mode);
TokenizerMode parse_tokenizer_mode(std::string_view name);

// Version tag of build_prompt's template.
inline constexpr std::string_view kPromptTemplateVersion = "plain-v1";

// "Question: <q>\n<label>. <text>\n...Answer:"
std::string build_prompt(const EvalRecord& record);

// A record with its prompt tokenized both ways.
struct PreparedExample {
  EvalRecord record;
  std::string prompt;
  CanonicalTokenization canonical;
  CharTokenization chars;
  GroupStructure groups;
  // Label token of each option, in option order.
  std::vector<TokenId> label_tokens;

  const std::vector<TokenId>& tokens(TokenizerMode mode) const {
    return mode == TokenizerMode::kCanonical ? canonical.token_ids
                                             : chars.token_ids;
  }
};

// Throws ValidationError if an option label is not a single vocabulary token.
PreparedExample prepare_example(const EvalRecord& record, const Vocabulary& vocab);
std::vector<PreparedExample> prepare_dataset(std::span<const EvalRecord> records,
                                             const Vocabulary& vocab);

// Per-example hook construction; the harness calls it for every forward pass
// of that example.
using HookFactory =
    std::function<HookSet(const PreparedExample&, TokenizerMode)>;

struct OptionScores {
  std::size_t chosen = 0;
  std::vector<double> log_probs;  // per option, at the final position
};

// Log-probability of every option's label token at the last prompt position;
// the argmax wins, ties go to the earlier option.
OptionScores score_options(const Model& model, const PreparedExample& example,
                           TokenizerMode mode, const HookSet& hooks = {});

struct ExampleOutcome {
  std::string id;
  std::string chosen_label;
  bool correct = false;
  friend bool operator==(const ExampleOutcome&, const ExampleOutcome&) = default;
};

struct EvalResult {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy = 0.0;
  std::vector<ExampleOutcome> outcomes;
  friend bool operator==(const EvalResult&, const EvalResult&) = default;
};

EvalResult evaluate(const Model& model, std::span<const PreparedExample> examples,
                    TokenizerMode mode, const HookFactory& hooks = {});

// Clean character-level run with hidden states captured.
CapturedRun character_run(const Model& model, const PreparedExample& example,
                          const HookSet& extra = {});

// Recovery profile of one example under character tokenization.
RecoveryProfile example_recovery(const Model& model,
                                 const PreparedExample& example, std::size_t k,
                                 const HookSet& hooks = {});

// Dataset-mean character-level recovery profiles, one per k (ascending).
std::vector<RecoveryProfile> dataset_recovery(
    const Model& model, std::span<const PreparedExample> examples,
    std::span<const std::size_t> ks);

// Throws ConfigError when the model and vocabulary disagree on |V|.
void check_compatible(const Model& model, const Vocabulary& vocab);

}  // namespace wordlens

#endif  // WORDLENS_HARNESS_H_
