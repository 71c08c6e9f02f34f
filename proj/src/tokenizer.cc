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

#include "wordlens/tokenizer.h"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include "json.hpp"
#include "wordlens/error.h"

namespace wordlens {
namespace {

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

struct ByteTable {
  std::array<std::string, 256> symbol;
  std::unordered_map<char32_t, std::uint8_t> byte_of;

  ByteTable() {
    std::array<char32_t, 256> cps{};
    std::array<bool, 256> printable{};
    for (int b = '!'; b <= '~'; ++b) printable[b] = true;
    for (int b = 0xA1; b <= 0xAC; ++b) printable[b] = true;
    for (int b = 0xAE; b <= 0xFF; ++b) printable[b] = true;
    char32_t next = 256;
    for (int b = 0; b < 256; ++b) {
      cps[b] = printable[b] ? static_cast<char32_t>(b) : next++;
      append_utf8(symbol[b], cps[b]);
      byte_of[cps[b]] = static_cast<std::uint8_t>(b);
    }
  }
};

const ByteTable& byte_table() {
  static const ByteTable table;
  return table;
}

// Length of the UTF-8 sequence starting at text[i]; 1 for invalid input so
// that stray bytes become their own character.
std::size_t utf8_length(std::string_view text, std::size_t i) {
  const auto lead = static_cast<unsigned char>(text[i]);
  std::size_t len = 1;
  if (lead >= 0xF0 && lead <= 0xF4) {
    len = 4;
  } else if (lead >= 0xE0) {
    len = lead <= 0xEF ? 3 : 1;
  } else if (lead >= 0xC2 && lead <= 0xDF) {
    len = 2;
  }
  if (i + len > text.size()) return 1;
  for (std::size_t k = 1; k < len; ++k) {
    if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) return 1;
  }
  return len;
}

// Decodes a UTF-8 string into code points; nullopt on malformed input.
std::optional<std::vector<char32_t>> code_points(std::string_view s) {
  std::vector<char32_t> out;
  for (std::size_t i = 0; i < s.size();) {
    const std::size_t len = utf8_length(s, i);
    const auto lead = static_cast<unsigned char>(s[i]);
    if (len == 1 && lead >= 0x80) return std::nullopt;
    char32_t cp = len == 1 ? lead : lead & (0xFF >> (len + 1));
    for (std::size_t k = 1; k < len; ++k) {
      cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::optional<std::uint8_t> parse_fallback(std::string_view token) {
  if (token.size() != 6 || token.substr(0, 3) != "<0x" || token[5] != '>') {
    return std::nullopt;
  }
  auto hex = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  const int hi = hex(token[3]);
  const int lo = hex(token[4]);
  if (hi < 0 || lo < 0) return std::nullopt;
  return static_cast<std::uint8_t>(hi * 16 + lo);
}

std::uint64_t pair_key(TokenId left, TokenId right) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(left)) << 32) |
         static_cast<std::uint32_t>(right);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path.string());
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("cannot write " + path.string());
}

bool is_ascii_space(char c) {
  return c == ' ' || c == '\n' || c == '\t' || c == '\r' || c == '\v' ||
         c == '\f';
}

}  // namespace

const std::string& byte_symbol(std::uint8_t b) {
  return byte_table().symbol[b];
}

std::string bytes_to_symbols(std::string_view bytes) {
  std::string out;
  for (char c : bytes) out += byte_symbol(static_cast<std::uint8_t>(c));
  return out;
}

std::optional<std::string> symbols_to_bytes(std::string_view symbols) {
  const auto cps = code_points(symbols);
  if (!cps) return std::nullopt;
  const auto& table = byte_table();
  std::string out;
  out.reserve(cps->size());
  for (char32_t cp : *cps) {
    auto it = table.byte_of.find(cp);
    if (it == table.byte_of.end()) return std::nullopt;
    out.push_back(static_cast<char>(it->second));
  }
  return out;
}

std::string fallback_token(std::uint8_t b) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "<0x%02X>", b);
  return buf;
}

Vocabulary Vocabulary::build(std::vector<std::string> tokens,
                             std::vector<Merge> merges) {
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  v.token_bytes_.reserve(v.tokens_.size());
  std::array<std::optional<TokenId>, 256> direct;
  std::array<std::optional<TokenId>, 256> fallback;
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    const auto id = static_cast<TokenId>(i);
    const std::string& tok = v.tokens_[i];
    if (tok.empty()) {
      throw FormatError("empty token string at id " + std::to_string(i));
    }
    if (!v.ids_.emplace(tok, id).second) {
      throw FormatError("duplicate token string '" + tok + "'");
    }
    std::string bytes;
    if (auto fb = parse_fallback(tok)) {
      bytes.assign(1, static_cast<char>(*fb));
      if (!fallback[*fb]) fallback[*fb] = id;
    } else if (auto decoded = symbols_to_bytes(tok)) {
      bytes = std::move(*decoded);
      if (bytes.size() == 1) direct[static_cast<std::uint8_t>(bytes[0])] = id;
    } else {
      throw FormatError("token '" + tok + "' (id " + std::to_string(i) +
                        ") is not a byte-level token");
    }
    // First id wins for byte-identical tokens (a fallback and a direct entry
    // for the same byte); the direct entry is preferred below.
    v.ids_by_bytes_.emplace(bytes, id);
    v.token_bytes_.push_back(std::move(bytes));
  }
  for (int b = 0; b < 256; ++b) {
    if (direct[b]) {
      v.byte_tokens_[b] = *direct[b];
      v.ids_by_bytes_[std::string(1, static_cast<char>(b))] = *direct[b];
    } else if (fallback[b]) {
      v.byte_tokens_[b] = *fallback[b];
    } else {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "byte 0x%02X has no token", b);
      throw CoverageError(buf);
    }
  }
  v.merges_ = std::move(merges);
  for (std::size_t rank = 0; rank < v.merges_.size(); ++rank) {
    const auto& [left, right] = v.merges_[rank];
    const auto l = v.find(left);
    const auto r = v.find(right);
    const auto m = v.find(left + right);
    const std::string what = "merge " + std::to_string(rank) + " '" + left +
                             " " + right + "'";
    if (!l || !r) throw FormatError(what + " references an unknown token");
    if (!m) throw FormatError(what + " produces a token missing from vocab");
    if (!v.merge_rules_.emplace(pair_key(*l, *r), MergeRule{rank, *m}).second) {
      throw FormatError(what + " is a duplicate");
    }
  }
  return v;
}

Vocabulary Vocabulary::parse(std::string_view vocab_json,
                             std::string_view merges_text) {
  std::set<std::string> seen_keys;
  std::string duplicate_key;
  nlohmann::json::parser_callback_t cb =
      [&](int depth, nlohmann::json::parse_event_t event,
          nlohmann::json& parsed) {
        if (event == nlohmann::json::parse_event_t::key && depth == 1) {
          const auto key = parsed.get<std::string>();
          if (!seen_keys.insert(key).second && duplicate_key.empty()) {
            duplicate_key = key;
          }
        }
        return true;
      };
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(vocab_json.begin(), vocab_json.end(), cb);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("vocab: ") + e.what());
  }
  if (!duplicate_key.empty()) {
    throw FormatError("vocab: duplicate token string '" + duplicate_key + "'");
  }
  if (!doc.is_object()) throw FormatError("vocab: expected a JSON object");
  std::vector<std::optional<std::string>> by_id(doc.size());
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_number_integer()) {
      throw FormatError("vocab: id of '" + key + "' is not an integer");
    }
    const auto id = value.get<std::int64_t>();
    if (id < 0 || static_cast<std::size_t>(id) >= by_id.size()) {
      throw FormatError("vocab: id " + std::to_string(id) + " of '" + key +
                        "' outside 0.." + std::to_string(by_id.size() - 1));
    }
    if (by_id[id]) {
      throw FormatError("vocab: duplicate id " + std::to_string(id) + " ('" +
                        *by_id[id] + "', '" + key + "')");
    }
    by_id[id] = key;
  }
  std::vector<std::string> tokens;
  tokens.reserve(by_id.size());
  for (auto& t : by_id) tokens.push_back(std::move(*t));

  std::vector<Merge> merges;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < merges_text.size()) {
    std::size_t eol = merges_text.find('\n', pos);
    if (eol == std::string_view::npos) eol = merges_text.size();
    std::string_view line = merges_text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t sp = line.find(' ');
    if (sp == std::string_view::npos || sp == 0 || sp + 1 == line.size() ||
        line.find(' ', sp + 1) != std::string_view::npos) {
      throw FormatError("merges: line " + std::to_string(line_no) +
                        " is not a 'left right' pair");
    }
    merges.emplace_back(std::string(line.substr(0, sp)),
                        std::string(line.substr(sp + 1)));
  }
  return build(std::move(tokens), std::move(merges));
}

Vocabulary Vocabulary::load(const std::filesystem::path& vocab_file,
                            const std::filesystem::path& merges_file) {
  return parse(read_file(vocab_file), read_file(merges_file));
}

std::string Vocabulary::vocab_json() const {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < tokens_.size(); ++i) doc[tokens_[i]] = i;
  return doc.dump(2) + "\n";
}

std::string Vocabulary::merges_text() const {
  std::string out = "#version: 0.2\n";
  for (const auto& [left, right] : merges_) {
    out += left;
    out += ' ';
    out += right;
    out += '\n';
  }
  return out;
}

void Vocabulary::save(const std::filesystem::path& vocab_file,
                      const std::filesystem::path& merges_file) const {
  write_file(vocab_file, vocab_json());
  write_file(merges_file, merges_text());
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<TokenId> Vocabulary::find_bytes(std::string_view bytes) const {
  auto it = ids_by_bytes_.find(std::string(bytes));
  if (it == ids_by_bytes_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw ValidationError("token id " + std::to_string(id) + " out of range");
  }
  return tokens_[id];
}

const std::string& Vocabulary::token_bytes(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw ValidationError("token id " + std::to_string(id) + " out of range");
  }
  return token_bytes_[id];
}

std::optional<Vocabulary::MergeRule> Vocabulary::merge(TokenId left,
                                                       TokenId right) const {
  auto it = merge_rules_.find(pair_key(left, right));
  if (it == merge_rules_.end()) return std::nullopt;
  return it->second;
}

std::vector<Span> pretokenize(std::string_view text) {
  std::vector<Span> chunks;
  std::size_t start = 0;
  for (std::size_t i = 1; i < text.size(); ++i) {
    if (is_ascii_space(text[i])) {
      chunks.push_back({start, i});
      start = i;
    }
  }
  if (!text.empty()) chunks.push_back({start, text.size()});
  return chunks;
}

namespace {

// Merges one pre-tokenization chunk in place. Symbols form a doubly linked
// list; candidate pairs sit in a min-heap keyed by (rank, left index), and
// entries invalidated by earlier merges are skipped when popped.
void merge_chunk(std::string_view text, Span chunk, const Vocabulary& vocab,
                 CanonicalTokenization& out) {
  const std::size_t n = chunk.size();
  std::vector<TokenId> ids(n);
  std::vector<std::size_t> end(n);
  std::vector<std::ptrdiff_t> prev(n), next(n);
  for (std::size_t i = 0; i < n; ++i) {
    ids[i] = vocab.byte_token(static_cast<std::uint8_t>(text[chunk.begin + i]));
    end[i] = chunk.begin + i + 1;
    prev[i] = static_cast<std::ptrdiff_t>(i) - 1;
    next[i] = i + 1 < n ? static_cast<std::ptrdiff_t>(i + 1) : -1;
  }

  struct Candidate {
    std::size_t rank;
    std::size_t left;
    std::size_t right;
    TokenId left_id;
    TokenId right_id;
    bool operator>(const Candidate& o) const {
      return rank != o.rank ? rank > o.rank : left > o.left;
    }
  };
  std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> heap;
  auto push = [&](std::ptrdiff_t l) {
    if (l < 0 || next[l] < 0) return;
    const auto r = static_cast<std::size_t>(next[l]);
    if (auto rule = vocab.merge(ids[l], ids[r])) {
      heap.push({rule->rank, static_cast<std::size_t>(l), r, ids[l], ids[r]});
    }
  };
  for (std::size_t i = 0; i + 1 < n; ++i) push(static_cast<std::ptrdiff_t>(i));

  std::vector<bool> alive(n, true);
  while (!heap.empty()) {
    const Candidate c = heap.top();
    heap.pop();
    if (!alive[c.left] || !alive[c.right] ||
        next[c.left] != static_cast<std::ptrdiff_t>(c.right) ||
        ids[c.left] != c.left_id || ids[c.right] != c.right_id) {
      continue;
    }
    ids[c.left] = vocab.merge(c.left_id, c.right_id)->merged;
    end[c.left] = end[c.right];
    alive[c.right] = false;
    next[c.left] = next[c.right];
    if (next[c.right] >= 0) prev[next[c.right]] = static_cast<std::ptrdiff_t>(c.left);
    push(prev[c.left]);
    push(static_cast<std::ptrdiff_t>(c.left));
  }

  std::size_t begin = chunk.begin;
  for (std::ptrdiff_t i = n > 0 ? 0 : -1; i >= 0; i = next[i]) {
    out.token_ids.push_back(ids[i]);
    out.byte_spans.push_back({begin, end[i]});
    begin = end[i];
  }
}

}  // namespace

CanonicalTokenization bpe_encode(std::string_view text,
                                 const Vocabulary& vocab) {
  CanonicalTokenization out;
  for (const Span& chunk : pretokenize(text)) {
    merge_chunk(text, chunk, vocab, out);
  }
  return out;
}

CharTokenization char_tokenize(std::string_view text, const Vocabulary& vocab) {
  CharTokenization out;
  for (std::size_t i = 0; i < text.size();) {
    const std::size_t len = utf8_length(text, i);
    const std::size_t index = out.num_chars++;
    std::optional<TokenId> whole;
    if (len == 1) {
      whole = vocab.byte_token(static_cast<std::uint8_t>(text[i]));
    } else {
      whole = vocab.find_bytes(text.substr(i, len));
    }
    if (whole) {
      out.token_ids.push_back(*whole);
      out.char_index.push_back(index);
      out.byte_spans.push_back({i, i + len});
    } else {
      for (std::size_t k = 0; k < len; ++k) {
        out.token_ids.push_back(
            vocab.byte_token(static_cast<std::uint8_t>(text[i + k])));
        out.char_index.push_back(index);
        out.byte_spans.push_back({i + k, i + k + 1});
      }
    }
    i += len;
  }
  return out;
}

GroupStructure align_spans(const CanonicalTokenization& canonical,
                           const CharTokenization& chars) {
  GroupStructure out;
  out.num_positions = chars.size();
  out.groups.reserve(canonical.size());
  std::size_t pos = 0;
  std::size_t byte = 0;
  for (std::size_t i = 0; i < canonical.size(); ++i) {
    const Span bytes = canonical.byte_spans[i];
    if (bytes.begin != byte || bytes.end <= bytes.begin) {
      throw AlignmentError("canonical token " + std::to_string(i) +
                           " does not continue the previous span");
    }
    if (pos >= chars.size() || chars.byte_spans[pos].begin != bytes.begin) {
      throw AlignmentError("canonical token " + std::to_string(i) +
                           " starts inside a character position");
    }
    const std::size_t start = pos;
    while (pos < chars.size() && chars.byte_spans[pos].end <= bytes.end) ++pos;
    if (pos == start || chars.byte_spans[pos - 1].end != bytes.end) {
      throw AlignmentError("canonical token " + std::to_string(i) +
                           " ends inside a character position");
    }
    out.groups.push_back({canonical.token_ids[i], {start, pos}});
    byte = bytes.end;
  }
  if (pos != chars.size()) {
    throw AlignmentError("tokenizations cover different amounts of text");
  }
  return out;
}

std::string decode(std::span<const TokenId> ids, const Vocabulary& vocab) {
  std::string out;
  for (TokenId id : ids) out += vocab.token_bytes(id);
  return out;
}

std::vector<TokenId> unique_targets(const GroupStructure& groups) {
  std::vector<TokenId> out;
  std::set<TokenId> seen;
  for (const Group& g : groups.groups) {
    if (seen.insert(g.token_id).second) out.push_back(g.token_id);
  }
  return out;
}

}  // namespace wordlens
