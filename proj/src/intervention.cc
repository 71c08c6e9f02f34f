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

#include "wordlens/intervention.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>

#include "wordlens/error.h"

namespace wordlens {

const char* to_string(TargetMode mode) {
  switch (mode) {
    case TargetMode::kAllCanonical:
      return "all_canonical";
    case TargetMode::kRecoveredAtStart:
      return "recovered_at_start";
    case TargetMode::kExplicitList:
      return "explicit_list";
  }
  return "?";
}

TargetMode parse_target_mode(std::string_view name) {
  if (name == "all_canonical") return TargetMode::kAllCanonical;
  if (name == "recovered_at_start") return TargetMode::kRecoveredAtStart;
  if (name == "explicit_list") return TargetMode::kExplicitList;
  throw ConfigError("unknown target mode '" + std::string(name) + "'");
}

void InterventionSpec::validate(std::size_t n_layers) const {
  const std::size_t end = last_layer(n_layers);
  if (end > n_layers) {
    throw ConfigError("intervention end layer " + std::to_string(end) +
                      " beyond last layer " + std::to_string(n_layers));
  }
  if (start_layer > end + 1) {
    throw ConfigError("intervention start layer " + std::to_string(start_layer) +
                      " beyond end layer " + std::to_string(end));
  }
  if ((target_mode == TargetMode::kExplicitList) == explicit_targets.empty()) {
    throw ConfigError("explicit targets must be given exactly for explicit_list");
  }
  if (target_mode == TargetMode::kRecoveredAtStart && detection_k == 0) {
    throw ConfigError("detection_k must be >= 1");
  }
}

std::vector<float> remove_token_subspace(std::span<const float> h,
                                         std::span<const float> w,
                                         bool normalized) {
  if (h.size() != w.size()) throw ValidationError("dimension mismatch");
  double ww = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!std::isfinite(h[i]) || !std::isfinite(w[i])) {
      throw ValidationError("non-finite input to subspace removal");
    }
    ww += static_cast<double>(w[i]) * w[i];
  }
  if (normalized && std::abs(std::sqrt(ww) - 1.0) > 1e-6) {
    throw ValidationError("direction is not unit length");
  }
  std::vector<float> out(h.begin(), h.end());
  remove_token_subspace_in_place(out, w);
  return out;
}

void remove_token_subspace_in_place(std::span<float> h,
                                    std::span<const float> w) {
  double dot = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) dot += static_cast<double>(h[i]) * w[i];
  for (std::size_t i = 0; i < h.size(); ++i) {
    h[i] = static_cast<float>(h[i] - dot * w[i]);
  }
}

std::vector<TokenId> resolve_targets(const InterventionSpec& spec,
                                     const GroupStructure& groups,
                                     const Model& model,
                                     const CapturedRun* clean_run) {
  const std::size_t n_layers = model.config.n_layers;
  spec.validate(n_layers);
  const TargetSet all = TargetSet::from_groups(groups);
  switch (spec.target_mode) {
    case TargetMode::kAllCanonical:
      return all.ids();
    case TargetMode::kExplicitList: {
      const std::set<TokenId> present(all.ids().begin(), all.ids().end());
      for (TokenId t : spec.explicit_targets) {
        if (!present.count(t)) {
          throw ConfigError("explicit target " + std::to_string(t) +
                            " is not a canonical token of this example");
        }
      }
      return TargetSet(spec.explicit_targets).ids();
    }
    case TargetMode::kRecoveredAtStart: {
      if (spec.start_layer > n_layers || all.empty()) return {};
      if (!clean_run || clean_run->hidden.size() != n_layers + 1) {
        throw ConfigError("recovered_at_start needs a clean run with hidden states");
      }
      const auto& layer = clean_run->hidden[spec.start_layer];
      std::set<TokenId> predicted;
      for (std::size_t p = 0; p < layer.rows(); ++p) {
        for (TokenId id : decode_topk(model, layer.row(p), spec.detection_k)) {
          predicted.insert(id);
        }
      }
      std::vector<TokenId> out;
      for (TokenId t : all.ids()) {
        if (predicted.count(t)) out.push_back(t);
      }
      return out;
    }
  }
  return {};
}

HookSet build_intervention_hooks(const InterventionSpec& spec,
                                 const GroupStructure& groups,
                                 const Model& model,
                                 const CapturedRun* clean_run) {
  const auto targets = resolve_targets(spec, groups, model, clean_run);
  const std::size_t first = spec.start_layer;
  const std::size_t last = spec.last_layer(model.config.n_layers);
  HookSet hooks;
  if (targets.empty() || first > last) return hooks;

  struct Edit {
    Span positions;
    std::vector<float> direction;
  };
  auto edits = std::make_shared<std::vector<Edit>>();
  for (TokenId t : targets) {
    const auto dir = spec.normalize_direction ? token_direction(model, t)
                                              : token_column(model, t);
    for (const Group& g : groups.groups) {
      if (g.token_id == t && !g.positions.empty()) {
        edits->push_back({g.positions, dir});
      }
    }
  }
  hooks.residual.push_back(
      [edits, first, last](std::size_t layer, MatrixView hidden) {
        if (layer < first || layer > last) return;
        for (const Edit& e : *edits) {
          for (std::size_t p = e.positions.begin;
               p < e.positions.end && p < hidden.rows(); ++p) {
            remove_token_subspace_in_place(hidden.row(p), e.direction);
          }
        }
      });
  return hooks;
}

HookFactory intervention_factory(const Model& model, InterventionSpec spec) {
  spec.validate(model.config.n_layers);
  return [&model, spec](const PreparedExample& ex, TokenizerMode mode) {
    if (mode != TokenizerMode::kCharacter) return HookSet{};
    if (spec.target_mode == TargetMode::kRecoveredAtStart) {
      const CapturedRun clean = character_run(model, ex);
      return build_intervention_hooks(spec, ex.groups, model, &clean);
    }
    return build_intervention_hooks(spec, ex.groups, model);
  };
}

std::vector<InterventionSweepRow> intervention_layer_sweep(
    const Model& model, std::span<const PreparedExample> examples,
    const InterventionSpec& spec_template, std::size_t recovery_k) {
  const std::size_t n_layers = model.config.n_layers;
  std::vector<double> recovery(n_layers + 1, 0.0);
  if (!examples.empty()) {
    std::vector<RecoveryProfile> profiles;
    for (const auto& ex : examples) {
      profiles.push_back(example_recovery(model, ex, recovery_k));
    }
    recovery = mean_profile(profiles).per_layer;
  }
  std::vector<InterventionSweepRow> rows;
  for (std::size_t l0 = 0; l0 <= n_layers; ++l0) {
    InterventionSpec spec = spec_template;
    spec.start_layer = l0;
    const EvalResult r = evaluate(model, examples, TokenizerMode::kCharacter,
                                  intervention_factory(model, spec));
    rows.push_back({l0, r.accuracy, recovery[l0]});
  }
  return rows;
}

}  // namespace wordlens
