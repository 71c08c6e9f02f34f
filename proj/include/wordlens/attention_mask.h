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

#ifndef WORDLENS_ATTENTION_MASK_H_
#define WORDLENS_ATTENTION_MASK_H_

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "wordlens/harness.h"
#include "wordlens/model.h"
#include "wordlens/recovery.h"
#include "wordlens/tokenizer.h"

namespace wordlens {

inline constexpr std::size_t kDefaultMaskedLayers = 5;

// In-group attention masking over blocks [start_layer, end_layer] (0-based
// block indices, inclusive). start_layer > end_layer is the empty range.
struct MaskSpec {
  std::size_t start_layer = 0;
  std::size_t end_layer = 0;
  // Also mask j -> j inside multi-position groups. A sequence-initial group
  // then leaves its first row with no key at all, which forward() reports as
  // an error. Singleton groups are never masked.
  bool mask_diagonal = false;
  std::optional<std::vector<std::size_t>> heads;  // nullopt = every head

  bool empty() const { return start_layer > end_layer; }
  void validate(std::size_t n_layers, std::size_t n_heads) const;

  // Blocks [start, n_layers - 1]; empty when start >= n_layers.
  static MaskSpec from_layer(std::size_t start, std::size_t n_layers);
};

HookSet build_mask_hooks(const MaskSpec& spec, const GroupStructure& groups);

// Character-mode hook factory for evaluate().
HookFactory mask_factory(const Model& model, MaskSpec spec);

struct MaskSweepRow {
  std::size_t start_layer = 0;
  double accuracy = 0.0;
  friend bool operator==(const MaskSweepRow&, const MaskSweepRow&) = default;
};

// Character-mode accuracy with masking over [l0, L - 1] for l0 = 0..L-1.
// The template supplies mask_diagonal and heads.
std::vector<MaskSweepRow> masking_layer_sweep(
    const Model& model, std::span<const PreparedExample> examples,
    const MaskSpec& spec_template);

struct MaskedRecovery {
  RecoveryProfile masked;
  RecoveryProfile baseline;
};

// Recovery with in-group attention masked in the first `first_n_layers`
// blocks, next to the unmasked baseline. Throws ConfigError if
// first_n_layers > L.
MaskedRecovery masked_recovery(const Model& model, const PreparedExample& example,
                               std::size_t first_n_layers = kDefaultMaskedLayers,
                               std::size_t k = kDefaultTopK);

// Layerwise means over a dataset.
MaskedRecovery masked_recovery(const Model& model,
                               std::span<const PreparedExample> examples,
                               std::size_t first_n_layers = kDefaultMaskedLayers,
                               std::size_t k = kDefaultTopK);

}  // namespace wordlens

#endif  // WORDLENS_ATTENTION_MASK_H_
