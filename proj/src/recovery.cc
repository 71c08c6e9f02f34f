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

#include "wordlens/recovery.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_set>

#include "wordlens/error.h"

namespace wordlens {
namespace {

void check_k(const Model& model, std::size_t k) {
  if (k == 0) throw ValidationError("top-k needs k >= 1");
  if (k > model.config.vocab_size) {
    throw ValidationError("top-k of " + std::to_string(k) +
                          " exceeds vocabulary size " +
                          std::to_string(model.config.vocab_size));
  }
}

std::vector<TokenId> topk_of_logits(const std::vector<float>& logits,
                                    std::size_t k) {
  std::vector<TokenId> ids(logits.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k),
                    ids.end(), [&](TokenId a, TokenId b) {
                      if (logits[a] != logits[b]) return logits[a] > logits[b];
                      return a < b;
                    });
  ids.resize(k);
  return ids;
}

}  // namespace

std::vector<TokenId> decode_topk(const Model& model, std::span<const float> h,
                                 std::size_t k, const DecodeOptions& options) {
  check_k(model, k);
  if (h.size() != model.config.d_model) {
    throw ValidationError("hidden state has wrong width");
  }
  for (float v : h) {
    if (!std::isfinite(v)) throw ValidationError("non-finite hidden state");
  }
  const auto logits = options.apply_final_norm
                          ? unembed(model, apply_final_norm(model, h))
                          : unembed(model, h);
  return topk_of_logits(logits, k);
}

TargetSet::TargetSet(std::span<const TokenId> ids) {
  std::unordered_set<TokenId> seen;
  for (TokenId id : ids) {
    if (seen.insert(id).second) ids_.push_back(id);
  }
}

TargetSet TargetSet::from_groups(const GroupStructure& groups) {
  return TargetSet(unique_targets(groups));
}

LayerDecodes LayerDecodes::compute(const Model& model, const CapturedRun& run,
                                   std::size_t max_k,
                                   const DecodeOptions& options) {
  check_k(model, max_k);
  if (run.hidden.empty()) {
    throw ValidationError("captured run has no hidden states");
  }
  LayerDecodes out;
  out.max_k_ = max_k;
  out.num_layers_ = run.hidden.size();
  out.num_positions_ = run.hidden.front().rows();
  out.ids_.reserve(out.num_layers_ * out.num_positions_ * max_k);
  for (const Matrix& layer : run.hidden) {
    for (std::size_t p = 0; p < layer.rows(); ++p) {
      const auto ids = decode_topk(model, layer.row(p), max_k, options);
      out.ids_.insert(out.ids_.end(), ids.begin(), ids.end());
    }
  }
  return out;
}

std::span<const TokenId> LayerDecodes::topk(std::size_t layer,
                                            std::size_t position,
                                            std::size_t k) const {
  if (layer >= num_layers_ || position >= num_positions_) {
    throw ValidationError("decode lookup out of range");
  }
  if (k == 0 || k > max_k_) {
    throw ValidationError("k = " + std::to_string(k) +
                          " outside the decoded range 1.." +
                          std::to_string(max_k_));
  }
  return {ids_.data() + (layer * num_positions_ + position) * max_k_, k};
}

double recovery_score(const LayerDecodes& decodes, const TargetSet& targets,
                      std::size_t layer, std::size_t k,
                      std::optional<Span> window) {
  if (targets.empty()) throw ValidationError("recovery needs a nonempty target set");
  Span w = window.value_or(Span{0, decodes.num_positions()});
  w.end = std::min(w.end, decodes.num_positions());
  std::unordered_set<TokenId> predicted;
  for (std::size_t p = w.begin; p < w.end; ++p) {
    for (TokenId id : decodes.topk(layer, p, k)) predicted.insert(id);
  }
  std::size_t hits = 0;
  for (TokenId t : targets.ids()) hits += predicted.count(t);
  return static_cast<double>(hits) / static_cast<double>(targets.size());
}

double in_group_recovery_score(const LayerDecodes& decodes,
                               const GroupStructure& groups, std::size_t layer,
                               std::size_t k) {
  if (groups.groups.empty()) throw ValidationError("recovery needs nonempty groups");
  const TargetSet targets = TargetSet::from_groups(groups);
  std::unordered_set<TokenId> recovered;
  for (const Group& g : groups.groups) {
    if (recovered.count(g.token_id)) continue;
    for (std::size_t p = g.positions.begin; p < g.positions.end; ++p) {
      const auto top = decodes.topk(layer, p, k);
      if (std::find(top.begin(), top.end(), g.token_id) != top.end()) {
        recovered.insert(g.token_id);
        break;
      }
    }
  }
  return static_cast<double>(recovered.size()) /
         static_cast<double>(targets.size());
}

void RecoveryProfile::summarize() {
  max_score = 0.0;
  max_layer = 0;
  for (std::size_t l = 0; l < per_layer.size(); ++l) {
    if (l == 0 || per_layer[l] > max_score) {
      max_score = per_layer[l];
      max_layer = l;
    }
  }
}

RecoveryProfile recovery_profile(const LayerDecodes& decodes,
                                 const TargetSet& targets,
                                 const GroupStructure& groups, std::size_t k,
                                 std::optional<Span> window) {
  RecoveryProfile profile;
  profile.k = k;
  for (std::size_t l = 0; l < decodes.num_layers(); ++l) {
    profile.per_layer.push_back(recovery_score(decodes, targets, l, k, window));
    if (!groups.groups.empty()) {
      profile.per_layer_group.push_back(
          in_group_recovery_score(decodes, groups, l, k));
    }
  }
  profile.summarize();
  return profile;
}

RecoveryProfile recovery_profile(const Model& model, const CapturedRun& run,
                                 const GroupStructure& groups, std::size_t k) {
  const LayerDecodes decodes = LayerDecodes::compute(model, run, k);
  return recovery_profile(decodes, TargetSet::from_groups(groups), groups, k);
}

std::map<std::size_t, RecoveryProfile> topk_sweep(
    const LayerDecodes& decodes, const TargetSet& targets,
    const GroupStructure& groups, std::span<const std::size_t> ks) {
  if (ks.empty()) throw ValidationError("top-k sweep needs at least one k");
  std::map<std::size_t, RecoveryProfile> out;
  for (std::size_t k : ks) {
    out.emplace(k, recovery_profile(decodes, targets, groups, k));
  }
  return out;
}

RecoveryProfile mean_profile(std::span<const RecoveryProfile> profiles) {
  if (profiles.empty()) throw ValidationError("no profiles to average");
  RecoveryProfile out;
  out.k = profiles.front().k;
  const std::size_t layers = profiles.front().per_layer.size();
  const bool group = !profiles.front().per_layer_group.empty();
  out.per_layer.assign(layers, 0.0);
  if (group) out.per_layer_group.assign(layers, 0.0);
  for (const auto& p : profiles) {
    if (p.k != out.k || p.per_layer.size() != layers ||
        p.per_layer_group.empty() == group) {
      throw ValidationError("profiles to average have different shapes");
    }
    for (std::size_t l = 0; l < layers; ++l) {
      out.per_layer[l] += p.per_layer[l];
      if (group) out.per_layer_group[l] += p.per_layer_group[l];
    }
  }
  const double n = static_cast<double>(profiles.size());
  for (auto& v : out.per_layer) v /= n;
  for (auto& v : out.per_layer_group) v /= n;
  out.summarize();
  return out;
}

}  // namespace wordlens
