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

#ifndef WORDLENS_REPORT_H_
#define WORDLENS_REPORT_H_

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wordlens/attention_mask.h"
#include "wordlens/harness.h"
#include "wordlens/intervention.h"
#include "wordlens/recovery.h"

namespace wordlens {

struct ExampleReport {
  std::string id;
  std::string canon_label;
  bool canon_correct = false;
  std::string char_label;
  bool char_correct = false;
  friend bool operator==(const ExampleReport&, const ExampleReport&) = default;
};

// One (model, dataset) row: canonical accuracy, the change under character
// tokenization, and the peak of the dataset-mean recovery curve.
struct EvalReport {
  std::string dataset;
  std::string model;
  std::size_t k = kDefaultTopK;
  std::size_t n_examples = 0;
  double canon_accuracy = 0.0;
  double char_accuracy = 0.0;
  double char_delta = 0.0;
  RecoveryProfile recovery;  // layerwise mean over examples
  double max_recovery = 0.0;
  std::size_t max_layer = 0;
  std::vector<ExampleReport> examples;

  // Internal consistency (delta, counts, max) to 1e-9. Throws
  // ValidationError.
  void validate() const;
};

EvalReport full_report(const Model& model,
                       std::span<const PreparedExample> examples,
                       std::size_t k = kDefaultTopK,
                       std::string dataset_name = "dataset",
                       std::string model_name = "model");

// Every float below is written with exactly six decimals.
std::string format_fixed(double value);

std::string report_json(const EvalReport& report);
std::string report_csv(const EvalReport& report);
EvalReport parse_report_json(std::string_view text);
EvalReport parse_report_csv(std::string_view text);
// Fixed-width text table: Dataset | Model | Canon | Char Δ | Recovery (layer).
std::string report_table(std::span<const EvalReport> reports);

// id,chosen_label,correct
std::string eval_csv(const EvalResult& result);
std::string eval_json(const EvalResult& result, TokenizerMode mode);

// layer,r_set,r_group,K; one block of rows per profile.
std::string profiles_csv(std::span<const RecoveryProfile> profiles);
std::string profiles_json(std::span<const RecoveryProfile> profiles);

// l0,accuracy,recovery_at_l0
std::string intervention_sweep_csv(std::span<const InterventionSweepRow> rows);
std::string intervention_sweep_json(std::span<const InterventionSweepRow> rows);

// l0,accuracy
std::string mask_sweep_csv(std::span<const MaskSweepRow> rows);
std::string mask_sweep_json(std::span<const MaskSweepRow> rows);

// layer,r_masked,r_baseline
std::string masked_recovery_csv(const MaskedRecovery& result);
std::string masked_recovery_json(const MaskedRecovery& result,
                                 std::size_t first_n_layers);

// Minimal RFC 4180 helpers shared by the exporters.
std::string csv_field(std::string_view value);
std::vector<std::string> parse_csv_line(std::string_view line);

}  // namespace wordlens

#endif  // WORDLENS_REPORT_H_
