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

#include "wordlens/attention_mask.h"

#include <algorithm>
#include <memory>

#include "wordlens/error.h"

namespace wordlens {

void MaskSpec::validate(std::size_t n_layers, std::size_t n_heads) const {
  if (!empty() && end_layer >= n_layers) {
    throw ConfigError("mask end layer " + std::to_string(end_layer) +
                      " beyond last block " +
                      std::to_string(n_layers == 0 ? 0 : n_layers - 1));
  }
  if (heads) {
    for (std::size_t h : *heads) {
      if (h >= n_heads) {
        throw ConfigError("mask head " + std::to_string(h) + " out of range");
      }
    }
  }
}

MaskSpec MaskSpec::from_layer(std::size_t start, std::size_t n_layers) {
  MaskSpec spec;
  spec.start_layer = start;
  spec.end_layer = n_layers == 0 ? 0 : n_layers - 1;
  if (start >= n_layers) {
    spec.start_layer = 1;
    spec.end_layer = 0;
  }
  return spec;
}

HookSet build_mask_hooks(const MaskSpec& spec, const GroupStructure& groups) {
  HookSet hooks;
  if (spec.empty()) return hooks;
  auto spans = std::make_shared<std::vector<Span>>();
  for (const Group& g : groups.groups) {
    if (g.positions.size() > 1) {
      spans->push_back(g.positions);
    }
  }
  if (spans->empty()) return hooks;
  hooks.attention.push_back([spans, spec](std::size_t block, std::size_t head,
                                          MatrixView scores) {
    if (block < spec.start_layer || block > spec.end_layer) return;
    if (spec.heads &&
        std::find(spec.heads->begin(), spec.heads->end(), head) ==
            spec.heads->end()) {
      return;
    }
    for (const Span& s : *spans) {
      for (std::size_t j = s.begin; j < s.end && j < scores.rows(); ++j) {
        for (std::size_t k = s.begin; k < s.end && k < scores.cols(); ++k) {
          if (k == j && !spec.mask_diagonal) continue;
          scores(j, k) = kMaskedScore;
        }
      }
    }
  });
  return hooks;
}

HookFactory mask_factory(const Model& model, MaskSpec spec) {
  spec.validate(model.config.n_layers, model.config.n_heads);
  return [spec](const PreparedExample& ex, TokenizerMode mode) {
    if (mode != TokenizerMode::kCharacter) return HookSet{};
    return build_mask_hooks(spec, ex.groups);
  };
}

std::vector<MaskSweepRow> masking_layer_sweep(
    const Model& model, std::span<const PreparedExample> examples,
    const MaskSpec& spec_template) {
  const std::size_t n_layers = model.config.n_layers;
  std::vector<MaskSweepRow> rows;
  for (std::size_t l0 = 0; l0 < n_layers; ++l0) {
    MaskSpec spec = MaskSpec::from_layer(l0, n_layers);
    spec.mask_diagonal = spec_template.mask_diagonal;
    spec.heads = spec_template.heads;
    const EvalResult r = evaluate(model, examples, TokenizerMode::kCharacter,
                                  mask_factory(model, spec));
    rows.push_back({l0, r.accuracy});
  }
  return rows;
}

MaskedRecovery masked_recovery(const Model& model, const PreparedExample& example,
                               std::size_t first_n_layers, std::size_t k) {
  if (first_n_layers > model.config.n_layers) {
    throw ConfigError("cannot mask the first " + std::to_string(first_n_layers) +
                      " layers of a " + std::to_string(model.config.n_layers) +
                      "-layer model");
  }
  MaskSpec spec;
  if (first_n_layers == 0) {
    spec.start_layer = 1;
    spec.end_layer = 0;
  } else {
    spec.end_layer = first_n_layers - 1;
  }
  MaskedRecovery out;
  out.baseline = example_recovery(model, example, k);
  out.masked = example_recovery(model, example, k,
                                build_mask_hooks(spec, example.groups));
  return out;
}

MaskedRecovery masked_recovery(const Model& model,
                               std::span<const PreparedExample> examples,
                               std::size_t first_n_layers, std::size_t k) {
  std::vector<RecoveryProfile> masked, baseline;
  for (const auto& ex : examples) {
    auto r = masked_recovery(model, ex, first_n_layers, k);
    masked.push_back(std::move(r.masked));
    baseline.push_back(std::move(r.baseline));
  }
  return {mean_profile(masked), mean_profile(baseline)};
}

}  // namespace wordlens
