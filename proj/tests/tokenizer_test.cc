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

#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "fixtures.h"
#include "oracle/oracle.h"
#include "wordlens/error.h"
#include "wordlens/tokenizer.h"

using namespace wordlens;
using wordlens::testing::read_file;

namespace {

Vocabulary byte_vocab(std::vector<std::string> extra = {},
                      std::vector<Vocabulary::Merge> merges = {}) {
  std::vector<std::string> tokens;
  for (int b = 0; b < 256; ++b) tokens.push_back(byte_symbol(static_cast<std::uint8_t>(b)));
  tokens.insert(tokens.end(), extra.begin(), extra.end());
  return Vocabulary::build(tokens, merges);
}

Vocabulary shipped_vocab() {
  return Vocabulary::load(WORDLENS_DATA_DIR "/toy_vocab.json",
                          WORDLENS_DATA_DIR "/toy_merges.txt");
}

std::string concat_bytes(const CharTokenization& chars, const Vocabulary& v,
                         Span span) {
  std::string s;
  for (std::size_t p = span.begin; p < span.end; ++p) s += v.token_bytes(chars.token_ids[p]);
  return s;
}

}  // namespace

TEST_CASE("byte-only vocabulary loads with no merges") {
  const Vocabulary v = byte_vocab();
  CHECK(v.size() == 256);
  CHECK(v.merge_count() == 0);
  for (int b = 0; b < 256; ++b) {
    CHECK(v.token_bytes(v.byte_token(static_cast<std::uint8_t>(b))) ==
          std::string(1, static_cast<char>(b)));
  }
}

TEST_CASE("byte symbols round trip") {
  CHECK(byte_symbol(' ') == "\xC4\xA0");
  CHECK(byte_symbol('a') == "a");
  for (int b = 0; b < 256; ++b) {
    const std::string raw(1, static_cast<char>(b));
    CHECK(symbols_to_bytes(bytes_to_symbols(raw)) == raw);
  }
  CHECK(fallback_token(0xAB) == "<0xAB>");
}

TEST_CASE("duplicate ids and strings are format errors") {
  std::string json = "{";
  for (int b = 0; b < 256; ++b) {
    nlohmann::json key = byte_symbol(static_cast<std::uint8_t>(b));
    json += key.dump() + ":" + std::to_string(b) + ",";
  }
  CHECK_THROWS_AS(Vocabulary::parse(json + "\"ab\":5}", ""), FormatError);
  CHECK_THROWS_AS(Vocabulary::parse(json + "\"a\":256}", ""), FormatError);
  CHECK_THROWS_AS(Vocabulary::parse(json + "\"ab\":300}", ""), FormatError);
  CHECK_NOTHROW(Vocabulary::parse(json + "\"ab\":256}", "a b\n"));
  CHECK_THROWS_AS(Vocabulary::parse(json + "\"ab\":256}", "a c\n"), FormatError);
  CHECK_THROWS_AS(Vocabulary::parse("{not json", ""), FormatError);
}

TEST_CASE("missing byte is a coverage error unless a fallback exists") {
  std::vector<std::string> tokens;
  for (int b = 0; b < 256; ++b) {
    if (b != 0xFF) tokens.push_back(byte_symbol(static_cast<std::uint8_t>(b)));
  }
  CHECK_THROWS_AS(Vocabulary::build(tokens, {}), CoverageError);
  tokens.push_back("<0xFF>");
  const Vocabulary v = Vocabulary::build(tokens, {});
  CHECK(v.token(v.byte_token(0xFF)) == "<0xFF>");
  CHECK(decode(bpe_encode("\xFF", v).token_ids, v) == "\xFF");
}

TEST_CASE("shipped vocabulary round trips byte for byte") {
  const Vocabulary v = shipped_vocab();
  CHECK(v.size() == 356);
  CHECK(v.merge_count() == 100);
  CHECK(v.vocab_json() == read_file(WORDLENS_DATA_DIR "/toy_vocab.json"));
  CHECK(v.merges_text() == read_file(WORDLENS_DATA_DIR "/toy_merges.txt"));
  const Vocabulary again = Vocabulary::parse(v.vocab_json(), v.merges_text());
  CHECK(again.vocab_json() == v.vocab_json());
}

TEST_CASE("bpe edge cases") {
  const Vocabulary v = wordlens::testing::fixture_vocab();
  CHECK(bpe_encode("", v).size() == 0);
  const auto one = bpe_encode("yes", v);
  REQUIRE(one.size() == 1);
  CHECK(v.token(one.token_ids[0]) == "yes");
  const auto spaced = bpe_encode(" yes no", v);
  REQUIRE(spaced.size() == 4);
  CHECK(v.token(spaced.token_ids[1]) == "yes");
  CHECK(spaced.byte_spans[3] == Span{5, 7});
}

TEST_CASE("pretokenize splits before every whitespace byte") {
  const auto spans = pretokenize("ab  c\nd");
  REQUIRE(spans.size() == 4);
  CHECK(spans[0] == Span{0, 2});
  CHECK(spans[1] == Span{2, 3});
  CHECK(spans[2] == Span{3, 5});
  CHECK(spans[3] == Span{5, 7});
}

TEST_CASE("bpe matches the naive oracle on 50 random strings") {
  const Vocabulary v = shipped_vocab();
  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    const std::string text = wordlens::testing::random_text(rng, 80);
    CHECK(bpe_encode(text, v).token_ids == oracle::bpe(text, v));
  }
}

TEST_CASE("merge priority is by rank, not by position") {
  // "abc": "b c" outranks "a b", so the result is a + bc.
  const Vocabulary v = byte_vocab({"bc", "ab"}, {{"b", "c"}, {"a", "b"}});
  const auto ids = bpe_encode("abc", v).token_ids;
  REQUIRE(ids.size() == 2);
  CHECK(v.token(ids[1]) == "bc");
  CHECK(ids == oracle::bpe("abc", v));
  // Repeated pairs merge leftmost first.
  const Vocabulary w = byte_vocab({"aa"}, {{"a", "a"}});
  const auto run = bpe_encode("aaa", w).token_ids;
  REQUIRE(run.size() == 2);
  CHECK(w.token(run[0]) == "aa");
}

TEST_CASE("char tokenization") {
  const Vocabulary v = shipped_vocab();
  const auto abc = char_tokenize("abc", v);
  CHECK(abc.token_ids ==
        std::vector<TokenId>{v.byte_token('a'), v.byte_token('b'), v.byte_token('c')});
  CHECK(abc.num_chars == 3);
  CHECK(char_tokenize("", v).size() == 0);

  const auto accent = char_tokenize("xé", v);
  CHECK(accent.size() == 3);
  CHECK(accent.num_chars == 2);
  CHECK(accent.char_index == std::vector<std::size_t>{0, 1, 1});
}

TEST_CASE("multibyte character with its own token takes one position") {
  const std::string e_acute = bytes_to_symbols("é");
  const std::string first = byte_symbol(0xC3);
  const std::string second = byte_symbol(0xA9);
  const Vocabulary v = byte_vocab({e_acute}, {{first, second}});
  const auto chars = char_tokenize("café", v);
  CHECK(chars.size() == 4);
  CHECK(v.token_bytes(chars.token_ids[3]) == "é");
  const auto groups = align_spans(bpe_encode("café", v), chars);
  CHECK(groups.size() == 4);
  CHECK(groups.groups[3].positions == Span{3, 4});
}

TEST_CASE("natural gas groups") {
  const std::vector<std::string> extra = {"na", "nat", "natu", "natur", "natura",
                                          "natural", "\xC4\xA0g", "\xC4\xA0ga",
                                          "\xC4\xA0gas"};
  const Vocabulary v = byte_vocab(
      extra, {{"n", "a"}, {"na", "t"}, {"nat", "u"}, {"natu", "r"}, {"natur", "a"},
              {"natura", "l"}, {"\xC4\xA0", "g"}, {"\xC4\xA0g", "a"}, {"\xC4\xA0ga", "s"}});
  const std::string text = "natural gas";
  const auto canon = bpe_encode(text, v);
  REQUIRE(canon.size() == 2);
  const auto chars = char_tokenize(text, v);
  const auto groups = align_spans(canon, chars);
  REQUIRE(groups.size() == 2);
  CHECK(groups.groups[0].positions == Span{0, 7});
  CHECK(groups.groups[1].positions == Span{7, 11});
  CHECK(v.token_bytes(groups.groups[1].token_id) == " gas");
  CHECK(unique_targets(groups).size() == 2);
}

TEST_CASE("single-token text forms one group") {
  const Vocabulary v = wordlens::testing::fixture_vocab();
  const auto groups = align_spans(bpe_encode("yes", v), char_tokenize("yes", v));
  REQUIRE(groups.size() == 1);
  CHECK(groups.groups[0].positions == Span{0, 3});
}

TEST_CASE("misaligned tokenizations raise an alignment error") {
  const Vocabulary v = shipped_vocab();
  auto canon = bpe_encode("ab", v);
  auto chars = char_tokenize("abc", v);
  CHECK_THROWS_AS(align_spans(canon, chars), AlignmentError);
  // Byte tokens of a fallback character line up with its byte positions.
  CHECK(align_spans(bpe_encode("é", v), char_tokenize("é", v)).size() == 2);
  // With a one-token "é" the same split falls inside a single position.
  const Vocabulary single = byte_vocab({bytes_to_symbols("é")},
                                       {{byte_symbol(0xC3), byte_symbol(0xA9)}});
  CanonicalTokenization split;
  split.token_ids = {single.byte_token(0xC3), single.byte_token(0xA9)};
  split.byte_spans = {{0, 1}, {1, 2}};
  CHECK_THROWS_AS(align_spans(split, char_tokenize("é", single)), AlignmentError);
}

TEST_CASE("round trip and partition on random strings with stray bytes") {
  const Vocabulary v = shipped_vocab();
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const std::string text = wordlens::testing::random_text(rng, 60, true);
    const auto canon = bpe_encode(text, v);
    const auto chars = char_tokenize(text, v);
    CHECK(decode(canon.token_ids, v) == text);
    CHECK(decode(chars.token_ids, v) == text);
    const auto groups = align_spans(canon, chars);
    REQUIRE(groups.size() == canon.size());
    std::size_t cursor = 0;
    for (const Group& g : groups.groups) {
      CHECK(g.positions.begin == cursor);
      CHECK(!g.positions.empty());
      CHECK(concat_bytes(chars, v, g.positions) == v.token_bytes(g.token_id));
      cursor = g.positions.end;
    }
    CHECK(cursor == chars.size());
  }
}
