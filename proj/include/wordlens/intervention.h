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

#ifndef WORDLENS_INTERVENTION_H_
#define WORDLENS_INTERVENTION_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "wordlens/harness.h"
#include "wordlens/model.h"
#include "wordlens/recovery.h"
#include "wordlens/tokenizer.h"

namespace wordlens {

enum class TargetMode { kAllCanonical, kRecoveredAtStart, kExplicitList };
const char* to_string(TargetMode mode);
TargetMode parse_target_mode(std::string_view name);

// Which token directions to delete from which residual hook points. Layers
// are hook points (0 = embedding output, L = last block output). A start
// layer of L + 1 selects no layers at all.
struct InterventionSpec {
  std::size_t start_layer = 0;
  std::optional<std::size_t> end_layer;  // defaults to L
  TargetMode target_mode = TargetMode::kAllCanonical;
  std::vector<TokenId> explicit_targets;
  bool normalize_direction = true;
  std::size_t detection_k = kDefaultTopK;

  void validate(std::size_t n_layers) const;
  std::size_t last_layer(std::size_t n_layers) const {
    return end_layer.value_or(n_layers);
  }
};

// h - <h, w> w. With `normalized`, w must have unit length (1e-6 tolerance).
std::vector<float> remove_token_subspace(std::span<const float> h,
                                         std::span<const float> w,
                                         bool normalized = true);
void remove_token_subspace_in_place(std::span<float> h, std::span<const float> w);

// Target ids the spec selects for one example. kRecoveredAtStart needs the
// example's clean character-level run with hidden states.
std::vector<TokenId> resolve_targets(const InterventionSpec& spec,
                                     const GroupStructure& groups,
                                     const Model& model,
                                     const CapturedRun* clean_run = nullptr);

// Residual hook removing every resolved target's direction from the
// positions of its own group(s), at every layer of [start, end]. Returns an
// empty HookSet when nothing is selected.
HookSet build_intervention_hooks(const InterventionSpec& spec,
                                 const GroupStructure& groups,
                                 const Model& model,
                                 const CapturedRun* clean_run = nullptr);

// Hook factory for evaluate(): computes the clean run when the target mode
// needs one. Character mode only; canonical passes get no hooks.
HookFactory intervention_factory(const Model& model, InterventionSpec spec);

struct InterventionSweepRow {
  std::size_t start_layer = 0;
  double accuracy = 0.0;
  double recovery_at_start = 0.0;  // mean clean set-based recovery at that layer
  friend bool operator==(const InterventionSweepRow&,
                         const InterventionSweepRow&) = default;
};

// One row per start layer 0..L under character tokenization, using the spec
// template for everything except start_layer.
std::vector<InterventionSweepRow> intervention_layer_sweep(
    const Model& model, std::span<const PreparedExample> examples,
    const InterventionSpec& spec_template, std::size_t recovery_k = kDefaultTopK);

}  // namespace wordlens

#endif  // WORDLENS_INTERVENTION_H_
