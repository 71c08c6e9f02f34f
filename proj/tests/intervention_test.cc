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

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "fixtures.h"
#include "oracle/oracle.h"
#include "wordlens/error.h"
#include "wordlens/intervention.h"

using namespace wordlens;

namespace {

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += double(a[i]) * b[i];
  return s;
}

double norm(std::span<const float> a) { return std::sqrt(dot(a, a)); }

struct WordFixture {
  Vocabulary vocab = wordlens::testing::fixture_vocab();
  Model model = wordlens::testing::word_fixture_model(vocab);
  PreparedExample example = prepare_example(wordlens::testing::fixture_record(), vocab);
  TokenId zq = *vocab.find("zq");
  TokenId yes = *vocab.find("yes");
};

std::string answer_with(const WordFixture& f, const HookSet& hooks) {
  const auto s = score_options(f.model, f.example, TokenizerMode::kCharacter, hooks);
  return f.example.record.options[s.chosen].label;
}

InterventionSpec explicit_spec(std::size_t l0, TokenId t) {
  InterventionSpec spec;
  spec.start_layer = l0;
  spec.target_mode = TargetMode::kExplicitList;
  spec.explicit_targets = {t};
  return spec;
}

Model toy(std::uint64_t seed) {
  ModelConfig c;
  c.n_layers = 3;
  c.n_heads = 2;
  c.d_model = 16;
  c.head_dim = 8;
  c.d_ff = 32;
  c.vocab_size = 260;
  c.max_seq = 128;
  return Model{c, generate_toy_model(c, seed)};
}

}  // namespace

TEST_CASE("subspace removal worked cases") {
  const std::vector<float> w{1, 0, 0};
  CHECK(remove_token_subspace(std::vector<float>{3, 4, 5}, w) == std::vector<float>{0, 4, 5});
  CHECK(remove_token_subspace(std::vector<float>{0, 2, 0}, w) == std::vector<float>{0, 2, 0});
  CHECK(remove_token_subspace(std::vector<float>{7, 0, 0}, w) == std::vector<float>{0, 0, 0});
  const std::vector<float> unnorm{2, 0, 0};
  CHECK_THROWS_AS(remove_token_subspace(std::vector<float>{1, 1, 1}, unnorm), ValidationError);
  // Raw mode subtracts <h,w>w with the unnormalized column.
  CHECK(remove_token_subspace(std::vector<float>{1, 1, 1}, unnorm, false) ==
        std::vector<float>{-3, 1, 1});
  CHECK_THROWS_AS(remove_token_subspace(std::vector<float>{1, 1}, w), ValidationError);
}

TEST_CASE("subspace removal matches the oracle, is orthogonal and idempotent") {
  std::mt19937_64 rng(4);
  std::normal_distribution<float> normal;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<float> h(32), raw(32);
    for (auto& v : h) v = 10.0f * normal(rng);
    for (auto& v : raw) v = normal(rng);
    const double n = norm(raw);
    std::vector<float> w(32);
    for (std::size_t i = 0; i < 32; ++i) w[i] = static_cast<float>(raw[i] / n);
    if (std::abs(norm(w) - 1.0) > 1e-6) continue;
    const auto once = remove_token_subspace(h, w);
    const auto ref = oracle::project_out(h, w);
    for (std::size_t i = 0; i < 32; ++i) CHECK(std::abs(once[i] - ref[i]) <= 1e-4);
    CHECK(std::abs(dot(once, w)) <= 1e-4 * (1.0 + norm(once)));
    const auto twice = remove_token_subspace(once, w);
    for (std::size_t i = 0; i < 32; ++i) CHECK(std::abs(twice[i] - once[i]) <= 1e-6);
  }
}

TEST_CASE("spec validation and sentinel") {
  InterventionSpec spec;
  CHECK_NOTHROW(spec.validate(2));
  spec.start_layer = 3;
  CHECK_NOTHROW(spec.validate(2));
  spec.start_layer = 4;
  CHECK_THROWS_AS(spec.validate(2), ConfigError);
  spec = InterventionSpec{};
  spec.end_layer = 3;
  CHECK_THROWS_AS(spec.validate(2), ConfigError);
  spec = InterventionSpec{};
  spec.target_mode = TargetMode::kExplicitList;
  CHECK_THROWS_AS(spec.validate(2), ConfigError);
  CHECK(parse_target_mode("recovered_at_start") == TargetMode::kRecoveredAtStart);
  CHECK_THROWS_AS(parse_target_mode("some"), ConfigError);
}

TEST_CASE("target resolution") {
  WordFixture f;
  const auto all = resolve_targets(InterventionSpec{}, f.example.groups, f.model);
  CHECK(all == unique_targets(f.example.groups));
  CHECK(resolve_targets(explicit_spec(0, f.zq), f.example.groups, f.model) ==
        std::vector<TokenId>{f.zq});
  CHECK_THROWS_AS(resolve_targets(explicit_spec(0, *f.vocab.find("ye")), f.example.groups,
                                  f.model),
                  ConfigError);

  InterventionSpec rec;
  rec.target_mode = TargetMode::kRecoveredAtStart;
  rec.start_layer = 1;
  CHECK_THROWS_AS(resolve_targets(rec, f.example.groups, f.model), ConfigError);
  const CapturedRun clean = character_run(f.model, f.example);
  const auto found = resolve_targets(rec, f.example.groups, f.model, &clean);
  CHECK(std::find(found.begin(), found.end(), f.zq) != found.end());
  rec.start_layer = 0;
  const auto early = resolve_targets(rec, f.example.groups, f.model, &clean);
  CHECK(std::find(early.begin(), early.end(), f.zq) == early.end());
}

TEST_CASE("word fixture: the answer depends on the zq direction only") {
  WordFixture f;
  CHECK(answer_with(f, {}) == "A");
  CHECK(score_options(f.model, f.example, TokenizerMode::kCanonical).chosen == 1);
  for (std::size_t l0 : {0, 1}) {
    CAPTURE(l0);
    CHECK(answer_with(f, build_intervention_hooks(explicit_spec(l0, f.zq), f.example.groups,
                                                  f.model)) == "B");
  }
  for (std::size_t l0 : {2, 3}) {
    CAPTURE(l0);
    CHECK(answer_with(f, build_intervention_hooks(explicit_spec(l0, f.zq), f.example.groups,
                                                  f.model)) == "A");
  }
  CHECK(answer_with(f, build_intervention_hooks(explicit_spec(0, f.yes), f.example.groups,
                                                f.model)) == "A");
  InterventionSpec all;
  CHECK(answer_with(f, build_intervention_hooks(all, f.example.groups, f.model)) == "B");
}

TEST_CASE("word fixture engine run agrees with the oracle") {
  WordFixture f;
  const auto& tokens = f.example.chars.token_ids;
  const CapturedRun run = forward(f.model, tokens);
  const oracle::Run ref = oracle::forward(f.model, tokens);
  for (std::size_t p = 0; p < tokens.size(); ++p) {
    for (std::size_t t = 0; t < f.model.config.vocab_size; ++t) {
      CHECK(std::abs(run.logits(p, t) - ref.logits[p][t]) <= 1e-4);
    }
  }
}

TEST_CASE("post-conditions on a random model") {
  const Vocabulary vocab = wordlens::testing::fixture_vocab();
  const Model m = toy(31);
  const PreparedExample ex = prepare_example(wordlens::testing::fixture_record(), vocab);
  const auto& tokens = ex.chars.token_ids;
  HookSet capture;
  capture.capture_hidden = true;
  const CapturedRun clean = forward(m, tokens, capture);

  for (std::size_t l0 = 0; l0 <= 3; ++l0) {
    InterventionSpec spec;
    spec.start_layer = l0;
    HookSet hooks = build_intervention_hooks(spec, ex.groups, m);
    hooks.merge(capture);
    const CapturedRun run = forward(m, tokens, hooks);
    for (const Group& g : ex.groups.groups) {
      const auto w = token_direction(m, g.token_id);
      for (std::size_t l = l0; l <= 3; ++l) {
        for (std::size_t p = g.positions.begin; p < g.positions.end; ++p) {
          const auto h = run.hidden[l].row(p);
          CHECK(std::abs(dot(h, w)) <= 1e-4 * (1.0 + norm(h)));
        }
      }
    }
    // Everything before l0 is untouched; at l0 only intervened rows move.
    for (std::size_t l = 0; l < l0 && l <= 3; ++l) CHECK(run.hidden[l] == clean.hidden[l]);
  }

  // Locality at l0 with a single target: other positions are bit exact.
  const TokenId zq = *vocab.find("zq");
  const CapturedRun one =
      forward(m, tokens, build_intervention_hooks(explicit_spec(1, zq), ex.groups, m)
                             .merge(capture));
  Span span;
  for (const Group& g : ex.groups.groups) {
    if (g.token_id == zq) span = g.positions;
  }
  for (std::size_t p = 0; p < tokens.size(); ++p) {
    if (span.contains(p)) continue;
    const auto a = one.hidden[1].row(p);
    const auto b = clean.hidden[1].row(p);
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
  }
}

TEST_CASE("empty target resolution leaves the run bit identical") {
  const Vocabulary vocab = wordlens::testing::fixture_vocab();
  const Model m = toy(32);
  const PreparedExample ex = prepare_example(wordlens::testing::fixture_record(), vocab);
  HookSet capture;
  capture.capture_hidden = true;
  const CapturedRun clean = forward(m, ex.chars.token_ids, capture);

  InterventionSpec sentinel;
  sentinel.start_layer = 4;
  const HookSet none = build_intervention_hooks(sentinel, ex.groups, m);
  CHECK(none.residual.empty());
  CHECK(forward(m, ex.chars.token_ids, HookSet(none).merge(capture)) == clean);

  GroupStructure empty_groups;
  empty_groups.num_positions = ex.chars.size();
  const HookSet no_targets = build_intervention_hooks(InterventionSpec{}, empty_groups, m);
  CHECK(forward(m, ex.chars.token_ids, HookSet(no_targets).merge(capture)) == clean);
}

TEST_CASE("factory only touches character mode; sweep has L+1 rows") {
  WordFixture f;
  const auto factory = intervention_factory(f.model, explicit_spec(0, f.zq));
  CHECK(factory(f.example, TokenizerMode::kCanonical).residual.empty());
  CHECK(!factory(f.example, TokenizerMode::kCharacter).residual.empty());

  const std::vector<PreparedExample> examples{f.example};
  const auto rows = intervention_layer_sweep(f.model, examples, explicit_spec(0, f.zq));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].accuracy == 0.0);
  CHECK(rows[1].accuracy == 0.0);
  CHECK(rows[2].accuracy == 1.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].start_layer == i);
    CHECK(rows[i].recovery_at_start >= 0.0);
    CHECK(rows[i].recovery_at_start <= 1.0);
  }
  InterventionSpec rec;
  rec.target_mode = TargetMode::kRecoveredAtStart;
  const auto rec_rows = intervention_layer_sweep(f.model, examples, rec);
  CHECK(rec_rows[1].accuracy == 0.0);
}

TEST_CASE("recovered_at_start matches a brute-force recomputation") {
  const Vocabulary vocab = wordlens::testing::fixture_vocab();
  const PreparedExample ex = prepare_example(wordlens::testing::fixture_record(), vocab);
  for (std::uint64_t seed : {51, 52, 53}) {
    const Model m = toy(seed);
    const CapturedRun clean = character_run(m, ex);
    for (std::size_t l0 = 0; l0 <= 3; ++l0) {
      for (std::size_t k : {1, 5, 20}) {
        InterventionSpec spec;
        spec.start_layer = l0;
        spec.target_mode = TargetMode::kRecoveredAtStart;
        spec.detection_k = k;
        std::set<TokenId> decoded;
        for (std::size_t p = 0; p < clean.hidden[l0].rows(); ++p) {
          for (TokenId t : oracle::topk(m, clean.hidden[l0].row(p), k)) decoded.insert(t);
        }
        std::vector<TokenId> want;
        for (TokenId t : unique_targets(ex.groups)) {
          if (decoded.count(t)) want.push_back(t);
        }
        CHECK(resolve_targets(spec, ex.groups, m, &clean) == want);
      }
    }
  }
}

TEST_CASE("non-finite input is rejected; intervening changes a random run") {
  const std::vector<float> w{1, 0};
  CHECK_THROWS_AS(remove_token_subspace(std::vector<float>{NAN, 1}, w), ValidationError);
  CHECK_THROWS_AS(remove_token_subspace(std::vector<float>{1, 1}, std::vector<float>{INFINITY, 0}),
                  ValidationError);
  const Vocabulary vocab = wordlens::testing::fixture_vocab();
  const PreparedExample ex = prepare_example(wordlens::testing::fixture_record(), vocab);
  const Model m = toy(54);
  CHECK(!(forward(m, ex.chars.token_ids, build_intervention_hooks({}, ex.groups, m)).logits ==
          forward(m, ex.chars.token_ids).logits));
}
