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

#ifndef WORDLENS_TESTS_FIXTURES_H_
#define WORDLENS_TESTS_FIXTURES_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "wordlens/harness.h"
#include "wordlens/model.h"
#include "wordlens/tokenizer.h"

namespace wordlens::testing {

// 256 byte tokens followed by "zq", "ye", "yes" and "no".
Vocabulary fixture_vocab();

// Question "zq" with options A "yes" and B "no".
EvalRecord fixture_record(std::string id = "fx-0", std::string answer = "A");

// Config with every tensor zero and every norm scale one.
Model zero_model(const ModelConfig& config);

// Two-block model over fixture_vocab() that answers A only when the "zq"
// direction is written at the q position. Block 0 forms it by attending
// from q to z inside the group; block 1 copies it to the last position.
Model word_fixture_model(const Vocabulary& vocab);

// Vocab 16, one block. Every position embeds to e0 and the block copies it
// into e3, which is the output column of kCopyTarget only.
inline constexpr TokenId kCopyTarget = 7;
Model copy_fixture_model();

// Always prefers the token `label` (other output columns are zero).
Model constant_answer_model(const Vocabulary& vocab, char label);

// Short strings mixing ASCII words, whitespace runs, multibyte characters
// and (when allow_invalid) stray continuation bytes.
std::string random_text(std::mt19937_64& rng, std::size_t max_len,
                        bool allow_invalid = false);

// Groups that partition [0, n) into random runs over the given vocab size.
GroupStructure random_groups(std::mt19937_64& rng, std::size_t n,
                             std::size_t vocab_size);

std::vector<TokenId> random_tokens(std::mt19937_64& rng, std::size_t n,
                                   std::size_t vocab_size);

std::string read_file(const std::string& path);

}  // namespace wordlens::testing

#endif  // WORDLENS_TESTS_FIXTURES_H_
