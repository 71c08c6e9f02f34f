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

#include "fixtures.h"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace wordlens::testing {

Vocabulary fixture_vocab() {
  std::vector<std::string> tokens;
  for (int b = 0; b < 256; ++b) tokens.push_back(byte_symbol(static_cast<std::uint8_t>(b)));
  tokens.insert(tokens.end(), {"zq", "ye", "yes", "no"});
  return Vocabulary::build(tokens, {{"z", "q"}, {"y", "e"}, {"ye", "s"}, {"n", "o"}});
}

EvalRecord fixture_record(std::string id, std::string answer) {
  EvalRecord r;
  r.id = std::move(id);
  r.question = "zq";
  r.options = {{"A", "yes"}, {"B", "no"}};
  r.answer_label = std::move(answer);
  return r;
}

Model zero_model(const ModelConfig& c) {
  Model m;
  m.config = c;
  m.weights.token_embedding = Matrix(c.vocab_size, c.d_model);
  m.weights.position_embedding = Matrix(c.max_seq, c.d_model);
  for (std::size_t b = 0; b < c.n_layers; ++b) {
    BlockWeights blk;
    blk.attn_norm.assign(c.d_model, 1.0f);
    blk.attn_q = Matrix(c.d_model, c.d_model);
    blk.attn_k = Matrix(c.d_model, c.d_model);
    blk.attn_v = Matrix(c.d_model, c.d_model);
    blk.attn_o = Matrix(c.d_model, c.d_model);
    blk.ffn_norm.assign(c.d_model, 1.0f);
    blk.ffn_up = Matrix(c.d_model, c.d_ff);
    blk.ffn_down = Matrix(c.d_ff, c.d_model);
    m.weights.blocks.push_back(std::move(blk));
  }
  m.weights.final_norm.assign(c.d_model, 1.0f);
  if (!c.tied_embeddings) m.weights.output_embedding = Matrix(c.d_model, c.vocab_size);
  return m;
}

Model word_fixture_model(const Vocabulary& vocab) {
  ModelConfig c;
  c.n_layers = 2;
  c.n_heads = 1;
  c.d_model = 8;
  c.head_dim = 8;
  c.d_ff = 8;
  c.vocab_size = vocab.size();
  c.max_seq = 64;
  Model m = zero_model(c);
  auto& w = m.weights;
  const TokenId z = *vocab.find("z");
  const TokenId q = *vocab.find("q");
  for (std::size_t v = 0; v < c.vocab_size; ++v) w.token_embedding(v, 0) = 1.0f;
  w.token_embedding(z, 1) = 1.0f;
  w.token_embedding(q, 2) = 1.0f;

  auto& b0 = w.blocks[0];
  b0.attn_q(2, 0) = 3.0f;
  b0.attn_k(1, 0) = 3.0f;
  b0.attn_v(1, 3) = 1.0f;
  b0.attn_o(3, 3) = 0.5f;
  b0.ffn_up(2, 0) = 4.0f;
  b0.ffn_up(3, 0) = 4.0f;
  b0.ffn_up(0, 0) = -6.0f;
  b0.ffn_down(0, 5) = 1.5f;

  auto& b1 = w.blocks[1];
  b1.attn_q(0, 0) = 2.5f;
  b1.attn_k(5, 0) = 2.5f;
  b1.attn_v(5, 4) = 1.0f;
  b1.attn_o(4, 4) = 1.0f;

  const TokenId zq = *vocab.find("zq");
  const TokenId a = *vocab.find("A");
  const TokenId bl = *vocab.find("B");
  for (std::size_t v = 0; v < c.vocab_size; ++v) {
    const double theta = 0.37 * static_cast<double>(v);
    w.output_embedding(6, v) = static_cast<float>(0.1 * std::cos(theta));
    w.output_embedding(7, v) = static_cast<float>(0.1 * std::sin(theta));
  }
  for (TokenId t : {zq, a, bl}) {
    w.output_embedding(6, t) = 0.0f;
    w.output_embedding(7, t) = 0.0f;
  }
  w.output_embedding(5, zq) = 1.0f;
  w.output_embedding(4, a) = 1.0f;
  w.output_embedding(0, bl) = 1.0f;
  w.output_embedding(7, bl) = 0.5f;
  m.validate();
  return m;
}

Model copy_fixture_model() {
  ModelConfig c;
  c.n_layers = 1;
  c.n_heads = 1;
  c.d_model = 4;
  c.head_dim = 4;
  c.d_ff = 4;
  c.vocab_size = 16;
  c.max_seq = 32;
  Model m = zero_model(c);
  auto& w = m.weights;
  for (std::size_t v = 0; v < c.vocab_size; ++v) {
    w.token_embedding(v, 0) = 1.0f;
    const double theta = 0.5 * static_cast<double>(v);
    w.output_embedding(1, v) = static_cast<float>(std::cos(theta));
    w.output_embedding(2, v) = static_cast<float>(std::sin(theta));
  }
  w.output_embedding(1, kCopyTarget) = 0.0f;
  w.output_embedding(2, kCopyTarget) = 0.0f;
  w.output_embedding(3, kCopyTarget) = 1.0f;
  w.blocks[0].attn_v(0, 3) = 1.0f;
  w.blocks[0].attn_o(3, 3) = 2.0f;
  m.validate();
  return m;
}

Model constant_answer_model(const Vocabulary& vocab, char label) {
  ModelConfig c;
  c.n_layers = 1;
  c.n_heads = 1;
  c.d_model = 4;
  c.head_dim = 4;
  c.d_ff = 4;
  c.vocab_size = vocab.size();
  c.max_seq = 128;
  Model m = zero_model(c);
  for (std::size_t v = 0; v < c.vocab_size; ++v) m.weights.token_embedding(v, 0) = 1.0f;
  m.weights.output_embedding(0, *vocab.find(std::string(1, label))) = 1.0f;
  return m;
}

std::string random_text(std::mt19937_64& rng, std::size_t max_len, bool allow_invalid) {
  static const char* const kPieces[] = {
      "the", "cat", "natural", "gas", "Question", "Answer", ":", ".", ",", "?",
      "A", "B", "C", "D", "apple", "planet", "42", "x", "é", "ü", "ß", "中文",
      "😀", "naïve", "über", "Ω", "\xE2\x80\x94"};
  static const char* const kSpaces[] = {" ", " ", " ", "  ", "\n", "\t", " \n", "\r\n"};
  std::uniform_int_distribution<std::size_t> pieces(0, std::size(kPieces) - 1);
  std::uniform_int_distribution<std::size_t> spaces(0, std::size(kSpaces) - 1);
  std::uniform_int_distribution<int> coin(0, 9);
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::string out;
  const std::size_t target = len(rng);
  while (out.size() < target) {
    const int c = coin(rng);
    if (c < 5) {
      out += kPieces[pieces(rng)];
    } else if (c < 8) {
      out += kSpaces[spaces(rng)];
    } else if (c == 8) {
      out += static_cast<char>(std::uniform_int_distribution<int>(32, 126)(rng));
    } else if (allow_invalid) {
      out += static_cast<char>(std::uniform_int_distribution<int>(0x80, 0xFF)(rng));
    }
  }
  return out;
}

GroupStructure random_groups(std::mt19937_64& rng, std::size_t n, std::size_t vocab_size) {
  GroupStructure g;
  g.num_positions = n;
  std::uniform_int_distribution<std::size_t> run(1, 4);
  std::uniform_int_distribution<TokenId> id(0, static_cast<TokenId>(vocab_size) - 1);
  std::size_t p = 0;
  while (p < n) {
    const std::size_t len = std::min(run(rng), n - p);
    g.groups.push_back({id(rng), {p, p + len}});
    p += len;
  }
  return g;
}

std::vector<TokenId> random_tokens(std::mt19937_64& rng, std::size_t n,
                                   std::size_t vocab_size) {
  std::uniform_int_distribution<TokenId> id(0, static_cast<TokenId>(vocab_size) - 1);
  std::vector<TokenId> out(n);
  for (auto& t : out) t = id(rng);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace wordlens::testing
