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

#ifndef WORDLENS_TOKENIZER_H_
#define WORDLENS_TOKENIZER_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace wordlens {

using TokenId = std::int32_t;

// Half-open range [begin, end).
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return begin == end; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }
  friend bool operator==(const Span&, const Span&) = default;
};

// Reversible byte <-> printable code point table used for byte-level token
// strings (the space byte becomes U+0120 "Ġ", and so on). Returns the UTF-8
// encoding of the code point standing in for `b`.
const std::string& byte_symbol(std::uint8_t b);

// Inverse of byte_symbol over a whole token string. Returns nullopt if some
// code point is not in the table.
std::optional<std::string> symbols_to_bytes(std::string_view symbols);

// Raw bytes -> symbol string.
std::string bytes_to_symbols(std::string_view bytes);

// "<0x41>"-style byte fallback token string for `b`.
std::string fallback_token(std::uint8_t b);

// Byte-level BPE vocabulary: a bijection between token strings and ids
// 0..size()-1, a ranked merge list, and a token for every byte value.
// Immutable once built; safe to share across threads.
class Vocabulary {
 public:
  using Merge = std::pair<std::string, std::string>;

  // `tokens[i]` is the string of id i. Throws FormatError on duplicates or
  // unrepresentable tokens and CoverageError if a byte has no token.
  static Vocabulary build(std::vector<std::string> tokens,
                          std::vector<Merge> merges);

  // Parses the on-disk formats: a JSON object {token: id} and a merges text
  // with one "left right" pair per line (rank = index among non-comment
  // lines; lines starting with '#' are skipped).
  static Vocabulary parse(std::string_view vocab_json,
                          std::string_view merges_text);
  static Vocabulary load(const std::filesystem::path& vocab_file,
                         const std::filesystem::path& merges_file);

  // Canonical serialization; load() followed by these reproduces a file
  // written by save() byte for byte.
  std::string vocab_json() const;
  std::string merges_text() const;
  void save(const std::filesystem::path& vocab_file,
            const std::filesystem::path& merges_file) const;

  std::size_t size() const { return tokens_.size(); }
  std::size_t merge_count() const { return merges_.size(); }
  const std::vector<Merge>& merges() const { return merges_; }

  std::optional<TokenId> find(std::string_view token) const;
  const std::string& token(TokenId id) const;
  // The raw bytes a token decodes to.
  const std::string& token_bytes(TokenId id) const;
  // Direct single-byte entry if present, else the byte-fallback entry.
  TokenId byte_token(std::uint8_t b) const { return byte_tokens_[b]; }
  // Token whose bytes are exactly `bytes`, if any.
  std::optional<TokenId> find_bytes(std::string_view bytes) const;

  struct MergeRule {
    std::size_t rank = 0;
    TokenId merged = 0;
  };
  std::optional<MergeRule> merge(TokenId left, TokenId right) const;

 private:
  Vocabulary() = default;

  std::vector<std::string> tokens_;
  std::vector<std::string> token_bytes_;
  std::unordered_map<std::string, TokenId> ids_;
  std::unordered_map<std::string, TokenId> ids_by_bytes_;
  std::vector<Merge> merges_;
  std::unordered_map<std::uint64_t, MergeRule> merge_rules_;
  TokenId byte_tokens_[256] = {};
};

struct CanonicalTokenization {
  std::vector<TokenId> token_ids;
  std::vector<Span> byte_spans;

  std::size_t size() const { return token_ids.size(); }
};

// One model position per character. A character without a single-token
// entry expands to its byte tokens; those positions share a char_index.
struct CharTokenization {
  std::vector<TokenId> token_ids;
  std::vector<std::size_t> char_index;
  std::vector<Span> byte_spans;
  std::size_t num_chars = 0;

  std::size_t size() const { return token_ids.size(); }
};

// The span of model positions covered by one canonical token.
struct Group {
  TokenId token_id = 0;
  Span positions;
  friend bool operator==(const Group&, const Group&) = default;
};

struct GroupStructure {
  std::vector<Group> groups;
  // Total number of character-level positions the groups partition.
  std::size_t num_positions = 0;

  std::size_t size() const { return groups.size(); }
};

// Splits `text` into pre-tokenization chunks: a new chunk starts before every
// ASCII whitespace byte. Merges never cross chunk boundaries.
std::vector<Span> pretokenize(std::string_view text);

// Byte-level BPE: repeatedly merges the adjacent pair with the lowest merge
// rank (leftmost on ties) until no rule applies.
CanonicalTokenization bpe_encode(std::string_view text, const Vocabulary& vocab);

CharTokenization char_tokenize(std::string_view text, const Vocabulary& vocab);

// Maps every canonical token onto the character positions covering the same
// bytes. Throws AlignmentError if a canonical boundary falls inside a
// character position.
GroupStructure align_spans(const CanonicalTokenization& canonical,
                           const CharTokenization& chars);

std::string decode(std::span<const TokenId> ids, const Vocabulary& vocab);

// Unique canonical token ids in order of first appearance.
std::vector<TokenId> unique_targets(const GroupStructure& groups);

}  // namespace wordlens

#endif  // WORDLENS_TOKENIZER_H_
