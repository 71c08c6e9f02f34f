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

#ifndef WORDLENS_RECOVERY_H_
#define WORDLENS_RECOVERY_H_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "wordlens/model.h"
#include "wordlens/tokenizer.h"

namespace wordlens {

inline constexpr std::size_t kDefaultTopK = 5;

// K values of the robustness sweep.
inline constexpr std::size_t kSweepKs[] = {1, 2, 3, 5, 10, 20};

struct DecodeOptions {
  // Logit-lens decoding normally passes h through the final norm first.
  bool apply_final_norm = true;
};

// The k most probable tokens under softmax(W_out^T norm(h)), most probable
// first. Softmax preserves order, so ranking is done on logits; ties go to
// the lower id. Throws ValidationError for k == 0, k > vocab or non-finite h.
std::vector<TokenId> decode_topk(const Model& model, std::span<const float> h,
                                 std::size_t k, const DecodeOptions& options = {});

// Unique canonical ids of one example, first-appearance order.
class TargetSet {
 public:
  TargetSet() = default;
  // Drops duplicates, keeps first-appearance order.
  explicit TargetSet(std::span<const TokenId> ids);
  static TargetSet from_groups(const GroupStructure& groups);

  const std::vector<TokenId>& ids() const { return ids_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

 private:
  std::vector<TokenId> ids_;
};

// Top-max_k decodes of every captured (layer, position). Because the ranking
// is a strict total order, the top-k list for any k <= max_k is a prefix.
class LayerDecodes {
 public:
  static LayerDecodes compute(const Model& model, const CapturedRun& run,
                              std::size_t max_k,
                              const DecodeOptions& options = {});

  std::size_t max_k() const { return max_k_; }
  std::size_t num_layers() const { return num_layers_; }
  std::size_t num_positions() const { return num_positions_; }
  std::span<const TokenId> topk(std::size_t layer, std::size_t position,
                                std::size_t k) const;

 private:
  std::size_t max_k_ = 0;
  std::size_t num_layers_ = 0;
  std::size_t num_positions_ = 0;
  std::vector<TokenId> ids_;  // [layer][position][max_k]
};

// Fraction of targets that appear in the top-k of at least one position of
// `window` (default: every position) at `layer`.
double recovery_score(const LayerDecodes& decodes, const TargetSet& targets,
                      std::size_t layer, std::size_t k,
                      std::optional<Span> window = std::nullopt);

// Same, but a target only counts if it is decoded inside the span of one of
// its own occurrences.
double in_group_recovery_score(const LayerDecodes& decodes,
                               const GroupStructure& groups, std::size_t layer,
                               std::size_t k);

struct RecoveryProfile {
  std::size_t k = kDefaultTopK;
  std::vector<double> per_layer;        // layer 0 is the embedding output
  std::vector<double> per_layer_group;  // empty if not computed
  double max_score = 0.0;
  std::size_t max_layer = 0;

  // Fills max_score / max_layer from per_layer (earliest layer on ties).
  void summarize();
  friend bool operator==(const RecoveryProfile&, const RecoveryProfile&) = default;
};

RecoveryProfile recovery_profile(const LayerDecodes& decodes,
                                 const TargetSet& targets,
                                 const GroupStructure& groups, std::size_t k,
                                 std::optional<Span> window = std::nullopt);

// Convenience: decodes `run` (which must carry hidden states) with max_k = k.
RecoveryProfile recovery_profile(const Model& model, const CapturedRun& run,
                                 const GroupStructure& groups,
                                 std::size_t k = kDefaultTopK);

std::map<std::size_t, RecoveryProfile> topk_sweep(
    const LayerDecodes& decodes, const TargetSet& targets,
    const GroupStructure& groups, std::span<const std::size_t> ks);

// Layerwise mean of profiles sharing one k, then summarized.
RecoveryProfile mean_profile(std::span<const RecoveryProfile> profiles);

}  // namespace wordlens

#endif  // WORDLENS_RECOVERY_H_
