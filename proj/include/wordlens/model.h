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

#ifndef WORDLENS_MODEL_H_
#define WORDLENS_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "wordlens/tensor.h"
#include "wordlens/tokenizer.h"

namespace wordlens {

enum class NormKind { kRms, kLayer };

const char* to_string(NormKind kind);
NormKind parse_norm_kind(std::string_view name);

struct ModelConfig {
  std::size_t n_layers = 2;
  std::size_t n_heads = 2;
  std::size_t d_model = 16;
  std::size_t head_dim = 8;
  std::size_t d_ff = 64;
  std::size_t vocab_size = 256;
  std::size_t max_seq = 256;
  NormKind norm_kind = NormKind::kRms;
  bool tied_embeddings = false;
  float norm_eps = 1e-5f;

  // Throws ValidationError. n_layers may be 0 (embedding + unembedding only);
  // every other count must be at least 1 and d_model == n_heads * head_dim.
  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct BlockWeights {
  std::vector<float> attn_norm;  // d_model
  Matrix attn_q;                 // d_model x d_model, y = x * W
  Matrix attn_k;
  Matrix attn_v;
  Matrix attn_o;
  std::vector<float> ffn_norm;  // d_model
  Matrix ffn_up;                // d_model x d_ff
  Matrix ffn_down;              // d_ff x d_model

  friend bool operator==(const BlockWeights&, const BlockWeights&) = default;
};

struct ModelWeights {
  Matrix token_embedding;     // vocab x d_model
  Matrix position_embedding;  // max_seq x d_model
  std::vector<BlockWeights> blocks;
  std::vector<float> final_norm;  // d_model
  // d_model x vocab; column t is the output direction of token t. Empty when
  // embeddings are tied (the transpose of token_embedding is used instead).
  Matrix output_embedding;

  friend bool operator==(const ModelWeights&, const ModelWeights&) = default;
};

struct Model {
  ModelConfig config;
  ModelWeights weights;

  // Checks every shape against config and every value for finiteness; the
  // error names the first offending tensor.
  void validate() const;
  friend bool operator==(const Model&, const Model&) = default;
};

// Named view of every tensor in serialization order.
struct NamedTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::span<const float> values;
};
std::vector<NamedTensor> tensor_manifest(const Model& model);

// Pre-softmax score that stands in for -inf. Keys holding it get exactly zero
// attention weight.
inline constexpr float kMaskedScore = std::numeric_limits<float>::lowest();

// Rewrites the residual stream at hook point `layer` in place: layer 0 is the
// embedding output, layer l >= 1 the output of block l. `hidden` is seq x d.
using ResidualHook = std::function<void(std::size_t layer, MatrixView hidden)>;

// Rewrites the seq x seq pre-softmax scores of one head of block `block`
// (0-based: block b produces hook point b + 1). Causal entries already hold
// kMaskedScore.
using AttentionScoreHook =
    std::function<void(std::size_t block, std::size_t head, MatrixView scores)>;

struct HookSet {
  std::vector<ResidualHook> residual;
  std::vector<AttentionScoreHook> attention;
  bool capture_hidden = false;
  bool capture_attention = false;

  // Appends the other set's hooks after this one's and ORs capture flags.
  HookSet& merge(const HookSet& other);
};

struct CapturedRun {
  Matrix logits;              // seq x vocab
  std::vector<Matrix> hidden;  // (L + 1) x [seq x d], after residual hooks
  // [block][head] -> seq x seq, as fed to softmax (after score hooks).
  std::vector<std::vector<Matrix>> attn_scores;
  std::vector<std::vector<Matrix>> attn_weights;

  friend bool operator==(const CapturedRun&, const CapturedRun&) = default;
};

// Pre-norm decoder-only forward pass with learned absolute positions.
// Throws ValidationError for an out-of-range id, an over-long sequence or an
// attention row whose keys were all masked by a hook.
CapturedRun forward(const Model& model, std::span<const TokenId> tokens,
                    const HookSet& hooks = {});

// The model's final norm applied to one residual vector.
std::vector<float> apply_final_norm(const Model& model, std::span<const float> h);

// Logits for one already-normalized vector: W_out^T x.
std::vector<float> unembed(const Model& model, std::span<const float> x);

// Column `token` of W_out, as stored.
std::vector<float> token_column(const Model& model, TokenId token);

// Column `token` of W_out scaled to unit length. Throws ValidationError for a
// zero column.
std::vector<float> token_direction(const Model& model, TokenId token);

// Deterministic weights from a seeded mt19937_64: every matrix entry is
// uniform in [-1, 1) scaled by 1/sqrt(d_model), norm scales are 1. The bit
// stream, and so the weights, are identical on every platform.
ModelWeights generate_toy_model(const ModelConfig& config, std::uint64_t seed);

// Weight file: one-line JSON header (format, version, config, tensor
// manifest), '\n', a NUL byte, then little-endian float32 payloads in
// manifest order.
std::string serialize_model(const Model& model);
Model deserialize_model(std::string_view bytes);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace wordlens

#endif  // WORDLENS_MODEL_H_
