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

#include "wordlens/model.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "wordlens/error.h"

namespace wordlens {
namespace {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// Visits every tensor in serialization order. Works for const and mutable
// models; `fn(name, shape, span)`.
template <typename ModelT, typename Fn>
void for_each_tensor(ModelT& model, Fn&& fn) {
  const ModelConfig& c = model.config;
  auto& w = model.weights;
  auto mat = [&](const std::string& name, auto& m, std::size_t rows,
                 std::size_t cols) { fn(name, Shape{rows, cols}, m.values()); };
  auto vec = [&](const std::string& name, auto& v, std::size_t n) {
    fn(name, Shape{n}, std::span(v));
  };
  mat("token_embedding", w.token_embedding, c.vocab_size, c.d_model);
  mat("position_embedding", w.position_embedding, c.max_seq, c.d_model);
  for (std::size_t b = 0; b < w.blocks.size(); ++b) {
    auto& blk = w.blocks[b];
    const std::string p = "blocks." + std::to_string(b) + ".";
    vec(p + "attn_norm", blk.attn_norm, c.d_model);
    mat(p + "attn_q", blk.attn_q, c.d_model, c.d_model);
    mat(p + "attn_k", blk.attn_k, c.d_model, c.d_model);
    mat(p + "attn_v", blk.attn_v, c.d_model, c.d_model);
    mat(p + "attn_o", blk.attn_o, c.d_model, c.d_model);
    vec(p + "ffn_norm", blk.ffn_norm, c.d_model);
    mat(p + "ffn_up", blk.ffn_up, c.d_model, c.d_ff);
    mat(p + "ffn_down", blk.ffn_down, c.d_ff, c.d_model);
  }
  vec("final_norm", w.final_norm, c.d_model);
  if (!c.tied_embeddings) {
    mat("output_embedding", w.output_embedding, c.d_model, c.vocab_size);
  }
}

Model allocate(const ModelConfig& c) {
  Model m;
  m.config = c;
  auto& w = m.weights;
  w.token_embedding = Matrix(c.vocab_size, c.d_model);
  w.position_embedding = Matrix(c.max_seq, c.d_model);
  w.blocks.resize(c.n_layers);
  for (auto& blk : w.blocks) {
    blk.attn_norm.assign(c.d_model, 1.0f);
    blk.attn_q = Matrix(c.d_model, c.d_model);
    blk.attn_k = Matrix(c.d_model, c.d_model);
    blk.attn_v = Matrix(c.d_model, c.d_model);
    blk.attn_o = Matrix(c.d_model, c.d_model);
    blk.ffn_norm.assign(c.d_model, 1.0f);
    blk.ffn_up = Matrix(c.d_model, c.d_ff);
    blk.ffn_down = Matrix(c.d_ff, c.d_model);
  }
  w.final_norm.assign(c.d_model, 1.0f);
  if (!c.tied_embeddings) w.output_embedding = Matrix(c.d_model, c.vocab_size);
  return m;
}

void normalize_into(const ModelConfig& c, std::span<const float> x,
                    std::span<const float> scale, std::span<float> out) {
  const std::size_t d = x.size();
  double mean = 0.0;
  if (c.norm_kind == NormKind::kLayer) {
    for (float v : x) mean += v;
    mean /= static_cast<double>(d);
  }
  double ss = 0.0;
  for (float v : x) {
    const double centered = v - mean;
    ss += centered * centered;
  }
  const double inv = 1.0 / std::sqrt(ss / static_cast<double>(d) + c.norm_eps);
  for (std::size_t i = 0; i < d; ++i) {
    out[i] = static_cast<float>((x[i] - mean) * inv) * scale[i];
  }
}

Matrix normalize_rows(const ModelConfig& c, const Matrix& x,
                      std::span<const float> scale) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    normalize_into(c, x.row(r), scale, out.row(r));
  }
  return out;
}

// out = a * b; each output element accumulates over k in ascending order.
Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    float* o = out.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const float aik = a(i, k);
      const float* br = b.row(k).data();
      for (std::size_t j = 0; j < b.cols(); ++j) o[j] += aik * br[j];
    }
  }
  return out;
}

float gelu(float x) {
  constexpr float kSqrt2OverPi = 0.7978845608028654f;
  return 0.5f * x * (1.0f + std::tanh(kSqrt2OverPi * (x + 0.044715f * x * x * x)));
}

void softmax_row(std::span<const float> scores, std::size_t query,
                 std::span<float> out, std::size_t block, std::size_t head) {
  float max_score = kMaskedScore;
  bool any = false;
  for (std::size_t k = 0; k <= query; ++k) {
    if (scores[k] == kMaskedScore) continue;
    if (!any || scores[k] > max_score) max_score = scores[k];
    any = true;
  }
  if (!any) {
    throw ValidationError("attention row " + std::to_string(query) +
                          " of block " + std::to_string(block) + " head " +
                          std::to_string(head) + " has every key masked");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (k > query || scores[k] == kMaskedScore) {
      out[k] = 0.0f;
      continue;
    }
    out[k] = std::exp(scores[k] - max_score);
    sum += out[k];
  }
  const float inv = static_cast<float>(1.0 / sum);
  for (std::size_t k = 0; k <= query; ++k) out[k] *= inv;
}

void run_residual_hooks(const HookSet& hooks, std::size_t layer, Matrix& x) {
  for (const auto& hook : hooks.residual) hook(layer, x.view());
}

}  // namespace

const char* to_string(NormKind kind) {
  return kind == NormKind::kRms ? "rms" : "layer";
}

NormKind parse_norm_kind(std::string_view name) {
  if (name == "rms") return NormKind::kRms;
  if (name == "layer") return NormKind::kLayer;
  throw ValidationError("unknown norm kind '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("model config: ") + what);
  };
  require(n_heads >= 1, "n_heads must be >= 1");
  require(d_model >= 1, "d_model must be >= 1");
  require(head_dim >= 1, "head_dim must be >= 1");
  require(d_ff >= 1, "d_ff must be >= 1");
  require(vocab_size >= 1, "vocab_size must be >= 1");
  require(max_seq >= 1, "max_seq must be >= 1");
  require(d_model == n_heads * head_dim, "d_model must equal n_heads * head_dim");
  require(std::isfinite(norm_eps) && norm_eps > 0.0f, "norm_eps must be > 0");
}

void Model::validate() const {
  config.validate();
  if (weights.blocks.size() != config.n_layers) {
    throw ValidationError("model has " + std::to_string(weights.blocks.size()) +
                          " blocks, config says " +
                          std::to_string(config.n_layers));
  }
  if (config.tied_embeddings != weights.output_embedding.empty()) {
    throw ValidationError("output_embedding presence does not match tied_embeddings");
  }
  const Model expected = allocate(config);
  const auto want = tensor_manifest(expected);
  const auto have = tensor_manifest(*this);
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (have[i].values.size() != want[i].values.size()) {
      throw ValidationError("shape mismatch for tensor " + want[i].name +
                            ": expected " + shape_string(want[i].shape));
    }
  }
  for (const auto& t : have) {
    for (float v : t.values) {
      if (!std::isfinite(v)) {
        throw ValidationError("non-finite value in tensor " + t.name);
      }
    }
  }
  // The manifest only knows element counts; check matrix dimensions too.
  auto dims = [](const Matrix& m, std::size_t r, std::size_t c, const char* n) {
    if (m.rows() != r || m.cols() != c) {
      throw ValidationError(std::string("shape mismatch for tensor ") + n);
    }
  };
  const auto& c = config;
  dims(weights.token_embedding, c.vocab_size, c.d_model, "token_embedding");
  dims(weights.position_embedding, c.max_seq, c.d_model, "position_embedding");
  for (const auto& blk : weights.blocks) {
    dims(blk.attn_q, c.d_model, c.d_model, "attn_q");
    dims(blk.attn_k, c.d_model, c.d_model, "attn_k");
    dims(blk.attn_v, c.d_model, c.d_model, "attn_v");
    dims(blk.attn_o, c.d_model, c.d_model, "attn_o");
    dims(blk.ffn_up, c.d_model, c.d_ff, "ffn_up");
    dims(blk.ffn_down, c.d_ff, c.d_model, "ffn_down");
  }
  if (!c.tied_embeddings) {
    dims(weights.output_embedding, c.d_model, c.vocab_size, "output_embedding");
  }
}

std::vector<NamedTensor> tensor_manifest(const Model& model) {
  std::vector<NamedTensor> out;
  for_each_tensor(model, [&](const std::string& name, const Shape& shape,
                             std::span<const float> values) {
    out.push_back({name, shape, values});
  });
  return out;
}

HookSet& HookSet::merge(const HookSet& other) {
  residual.insert(residual.end(), other.residual.begin(), other.residual.end());
  attention.insert(attention.end(), other.attention.begin(),
                   other.attention.end());
  capture_hidden = capture_hidden || other.capture_hidden;
  capture_attention = capture_attention || other.capture_attention;
  return *this;
}

CapturedRun forward(const Model& model, std::span<const TokenId> tokens,
                    const HookSet& hooks) {
  const ModelConfig& c = model.config;
  const ModelWeights& w = model.weights;
  const std::size_t seq = tokens.size();
  const std::size_t d = c.d_model;
  if (seq > c.max_seq) {
    throw ValidationError("sequence of " + std::to_string(seq) +
                          " tokens exceeds max_seq " + std::to_string(c.max_seq));
  }
  Matrix x(seq, d);
  for (std::size_t p = 0; p < seq; ++p) {
    const TokenId t = tokens[p];
    if (t < 0 || static_cast<std::size_t>(t) >= c.vocab_size) {
      throw ValidationError("token id " + std::to_string(t) + " at position " +
                            std::to_string(p) + " out of range");
    }
    auto e = w.token_embedding.row(t);
    auto pe = w.position_embedding.row(p);
    auto xr = x.row(p);
    for (std::size_t i = 0; i < d; ++i) xr[i] = e[i] + pe[i];
  }

  CapturedRun run;
  run_residual_hooks(hooks, 0, x);
  if (hooks.capture_hidden) run.hidden.push_back(x);

  const float scale = 1.0f / std::sqrt(static_cast<float>(c.head_dim));
  for (std::size_t b = 0; b < w.blocks.size(); ++b) {
    const BlockWeights& blk = w.blocks[b];
    const Matrix a = normalize_rows(c, x, blk.attn_norm);
    const Matrix q = matmul(a, blk.attn_q);
    const Matrix k = matmul(a, blk.attn_k);
    const Matrix v = matmul(a, blk.attn_v);
    Matrix ctx(seq, d);
    if (hooks.capture_attention) {
      run.attn_scores.emplace_back();
      run.attn_weights.emplace_back();
    }
    for (std::size_t h = 0; h < c.n_heads; ++h) {
      const std::size_t off = h * c.head_dim;
      Matrix scores(seq, seq, kMaskedScore);
      for (std::size_t i = 0; i < seq; ++i) {
        const float* qi = q.row(i).data() + off;
        for (std::size_t j = 0; j <= i; ++j) {
          const float* kj = k.row(j).data() + off;
          float dot = 0.0f;
          for (std::size_t e = 0; e < c.head_dim; ++e) dot += qi[e] * kj[e];
          scores(i, j) = dot * scale;
        }
      }
      for (const auto& hook : hooks.attention) hook(b, h, scores.view());
      Matrix probs(seq, seq);
      for (std::size_t i = 0; i < seq; ++i) {
        softmax_row(scores.row(i), i, probs.row(i), b, h);
        float* out = ctx.row(i).data() + off;
        for (std::size_t j = 0; j <= i; ++j) {
          const float p = probs(i, j);
          if (p == 0.0f) continue;
          const float* vj = v.row(j).data() + off;
          for (std::size_t e = 0; e < c.head_dim; ++e) out[e] += p * vj[e];
        }
      }
      if (hooks.capture_attention) {
        run.attn_scores.back().push_back(std::move(scores));
        run.attn_weights.back().push_back(std::move(probs));
      }
    }
    const Matrix attn_out = matmul(ctx, blk.attn_o);
    for (std::size_t i = 0; i < x.size(); ++i) x.values()[i] += attn_out.values()[i];

    const Matrix m = normalize_rows(c, x, blk.ffn_norm);
    Matrix up = matmul(m, blk.ffn_up);
    for (float& u : up.values()) u = gelu(u);
    const Matrix down = matmul(up, blk.ffn_down);
    for (std::size_t i = 0; i < x.size(); ++i) x.values()[i] += down.values()[i];

    run_residual_hooks(hooks, b + 1, x);
    if (hooks.capture_hidden) run.hidden.push_back(x);
  }

  run.logits = Matrix(seq, c.vocab_size);
  for (std::size_t p = 0; p < seq; ++p) {
    const auto normed = apply_final_norm(model, x.row(p));
    const auto logits = unembed(model, normed);
    std::copy(logits.begin(), logits.end(), run.logits.row(p).begin());
  }
  return run;
}

std::vector<float> apply_final_norm(const Model& model,
                                    std::span<const float> h) {
  std::vector<float> out(h.size());
  normalize_into(model.config, h, model.weights.final_norm, out);
  return out;
}

std::vector<float> unembed(const Model& model, std::span<const float> x) {
  const ModelConfig& c = model.config;
  std::vector<float> logits(c.vocab_size, 0.0f);
  if (c.tied_embeddings) {
    const Matrix& e = model.weights.token_embedding;
    for (std::size_t t = 0; t < c.vocab_size; ++t) {
      const auto row = e.row(t);
      float acc = 0.0f;
      for (std::size_t i = 0; i < c.d_model; ++i) acc += x[i] * row[i];
      logits[t] = acc;
    }
  } else {
    const Matrix& w = model.weights.output_embedding;
    for (std::size_t i = 0; i < c.d_model; ++i) {
      const float xi = x[i];
      const float* row = w.row(i).data();
      for (std::size_t t = 0; t < c.vocab_size; ++t) logits[t] += xi * row[t];
    }
  }
  return logits;
}

std::vector<float> token_column(const Model& model, TokenId token) {
  const ModelConfig& c = model.config;
  if (token < 0 || static_cast<std::size_t>(token) >= c.vocab_size) {
    throw ValidationError("token id " + std::to_string(token) + " out of range");
  }
  std::vector<float> col(c.d_model);
  for (std::size_t i = 0; i < c.d_model; ++i) {
    col[i] = c.tied_embeddings ? model.weights.token_embedding(token, i)
                               : model.weights.output_embedding(i, token);
  }
  return col;
}

std::vector<float> token_direction(const Model& model, TokenId token) {
  auto col = token_column(model, token);
  double ss = 0.0;
  for (float v : col) ss += static_cast<double>(v) * v;
  if (ss == 0.0) {
    throw ValidationError("output embedding of token " + std::to_string(token) +
                          " is the zero vector");
  }
  const double inv = 1.0 / std::sqrt(ss);
  for (float& v : col) v = static_cast<float>(v * inv);
  return col;
}

ModelWeights generate_toy_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Model m = allocate(config);
  std::mt19937_64 gen(seed);
  const float scale = 1.0f / std::sqrt(static_cast<float>(config.d_model));
  auto fill = [&](Matrix& mat) {
    for (float& v : mat.values()) {
      // Top 24 bits -> exact float in [0, 1).
      const float u = static_cast<float>(gen() >> 40) * 0x1p-24f;
      v = (2.0f * u - 1.0f) * scale;
    }
  };
  auto& w = m.weights;
  fill(w.token_embedding);
  fill(w.position_embedding);
  for (auto& blk : w.blocks) {
    fill(blk.attn_q);
    fill(blk.attn_k);
    fill(blk.attn_v);
    fill(blk.attn_o);
    fill(blk.ffn_up);
    fill(blk.ffn_down);
  }
  if (!config.tied_embeddings) fill(w.output_embedding);
  return std::move(m.weights);
}

namespace {

constexpr const char* kFormatName = "wordlens-weights";
constexpr int kFormatVersion = 1;

nlohmann::json config_json(const ModelConfig& c) {
  return {{"n_layers", c.n_layers},     {"n_heads", c.n_heads},
          {"d_model", c.d_model},       {"head_dim", c.head_dim},
          {"d_ff", c.d_ff},             {"vocab_size", c.vocab_size},
          {"max_seq", c.max_seq},       {"norm_kind", to_string(c.norm_kind)},
          {"tied_embeddings", c.tied_embeddings},
          {"norm_eps", c.norm_eps}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.n_layers = j.at("n_layers").get<std::size_t>();
  c.n_heads = j.at("n_heads").get<std::size_t>();
  c.d_model = j.at("d_model").get<std::size_t>();
  c.head_dim = j.at("head_dim").get<std::size_t>();
  c.d_ff = j.at("d_ff").get<std::size_t>();
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.max_seq = j.at("max_seq").get<std::size_t>();
  c.norm_kind = parse_norm_kind(j.at("norm_kind").get<std::string>());
  c.tied_embeddings = j.at("tied_embeddings").get<bool>();
  c.norm_eps = j.at("norm_eps").get<float>();
  return c;
}

void put_le(std::string& out, float v) {
  auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<char>(bits & 0xFF));
    bits >>= 8;
  }
}

float get_le(const char* p) {
  std::uint32_t bits = 0;
  for (int i = 3; i >= 0; --i) {
    bits = (bits << 8) | static_cast<unsigned char>(p[i]);
  }
  return std::bit_cast<float>(bits);
}

}  // namespace

std::string serialize_model(const Model& model) {
  model.validate();
  nlohmann::json header;
  header["format"] = kFormatName;
  header["version"] = kFormatVersion;
  header["config"] = config_json(model.config);
  header["tensors"] = nlohmann::json::array();
  std::size_t total = 0;
  const auto manifest = tensor_manifest(model);
  for (const auto& t : manifest) {
    header["tensors"].push_back({{"name", t.name}, {"shape", t.shape}});
    total += t.values.size();
  }
  std::string out = header.dump();
  out += '\n';
  out += '\0';
  out.reserve(out.size() + 4 * total);
  for (const auto& t : manifest) {
    for (float v : t.values) put_le(out, v);
  }
  return out;
}

Model deserialize_model(std::string_view bytes) {
  const std::size_t eol = bytes.find('\n');
  if (eol == std::string_view::npos || eol + 1 >= bytes.size() ||
      bytes[eol + 1] != '\0') {
    throw FormatError("weights: missing header terminator");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(0, eol));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("weights: bad header: ") + e.what());
  }
  Model model;
  try {
    if (header.at("format").get<std::string>() != kFormatName) {
      throw FormatError("weights: not a " + std::string(kFormatName) + " file");
    }
    const int version = header.at("version").get<int>();
    if (version != kFormatVersion) {
      throw FormatError("weights: unknown format version " +
                        std::to_string(version));
    }
    model = allocate(config_from_json(header.at("config")));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("weights: bad header: ") + e.what());
  }
  model.config.validate();

  const nlohmann::json listed = header.value("tensors", nlohmann::json::array());
  std::size_t index = 0;
  const char* payload = bytes.data() + eol + 2;
  std::size_t remaining = bytes.size() - eol - 2;
  auto read_tensor = [&](const std::string& name, const Shape& shape,
                         std::span<float> values) {
    if (index >= listed.size()) {
      throw FormatError("weights: manifest is missing tensor " + name);
    }
    const auto& entry = listed[index++];
    const auto got_name = entry.at("name").get<std::string>();
    const auto got_shape = entry.at("shape").get<Shape>();
    if (got_name != name) {
      throw FormatError("weights: expected tensor " + name + ", found " + got_name);
    }
    if (got_shape != shape) {
      throw FormatError("weights: shape mismatch for tensor " + name +
                        ": expected " + shape_string(shape) + ", found " +
                        shape_string(got_shape));
    }
    if (remaining < 4 * values.size()) {
      throw FormatError("weights: truncated payload in tensor " + name);
    }
    for (float& v : values) {
      v = get_le(payload);
      payload += 4;
    }
    remaining -= 4 * values.size();
  };
  try {
    for_each_tensor(model, read_tensor);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("weights: bad manifest entry: ") + e.what());
  }
  if (index != listed.size()) {
    throw FormatError("weights: manifest lists unexpected extra tensors");
  }
  if (remaining != 0) {
    throw FormatError("weights: " + std::to_string(remaining) +
                      " trailing bytes after payload");
  }
  model.validate();
  return model;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  const std::string bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("cannot write " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace wordlens
