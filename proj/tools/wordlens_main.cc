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

// wordlens: command-line driver for tokenization dumps, evaluation, recovery
// profiles, interventions, in-group masking and Table-1-style reports.
//
// Exit codes: 0 success, 1 validation/format error, 2 I/O error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "wordlens/attention_mask.h"
#include "wordlens/error.h"
#include "wordlens/harness.h"
#include "wordlens/intervention.h"
#include "wordlens/model.h"
#include "wordlens/recovery.h"
#include "wordlens/report.h"
#include "wordlens/tokenizer.h"

namespace wordlens {
namespace {

struct CommonArgs {
  std::string model;
  std::string vocab;
  std::string merges;
  std::string dataset;
  std::string out;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_model,
                bool needs_dataset,
                std::vector<std::string> formats = {"csv", "json"}) {
  auto* m = cmd->add_option("--model", args.model, "Weight file");
  if (needs_model) m->required();
  cmd->add_option("--vocab", args.vocab, "Vocabulary JSON")->required();
  cmd->add_option("--merges", args.merges, "Merges text")->required();
  auto* d = cmd->add_option("--dataset", args.dataset, "JSONL dataset");
  if (needs_dataset) d->required();
  cmd->add_option("--out", args.out, "Output file (default stdout)");
  cmd->add_option("--format", args.format, "Output format")
      ->check(CLI::IsMember(formats))
      ->capture_default_str();
}

void emit(const CommonArgs& args, const std::string& text) {
  if (args.out.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  std::ofstream out(args.out, std::ios::binary);
  if (!out) throw IoError("cannot open " + args.out + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("cannot write " + args.out);
}

struct Loaded {
  Vocabulary vocab;
  std::optional<Model> model;
  std::vector<PreparedExample> examples;
};

Loaded load_inputs(const CommonArgs& args) {
  Loaded in{Vocabulary::load(args.vocab, args.merges), std::nullopt, {}};
  if (!args.model.empty()) {
    in.model = load_model(args.model);
    check_compatible(*in.model, in.vocab);
  }
  if (!args.dataset.empty()) {
    const auto records = load_dataset(args.dataset);
    in.examples = prepare_dataset(records, in.vocab);
  }
  return in;
}

std::string eval_output(const EvalResult& r, TokenizerMode mode,
                        const std::string& format) {
  std::fprintf(stderr, "%s accuracy %s (%zu/%zu)\n", to_string(mode),
               format_fixed(r.accuracy).c_str(), r.correct, r.total);
  return format == "json" ? eval_json(r, mode) : eval_csv(r);
}

std::string tokenize_output(const std::string& text, const Vocabulary& vocab,
                            const std::string& format) {
  const auto canonical = bpe_encode(text, vocab);
  const auto chars = char_tokenize(text, vocab);
  const auto groups = align_spans(canonical, chars);
  if (format == "json") {
    nlohmann::ordered_json j;
    j["text"] = text;
    j["canonical"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < canonical.size(); ++i) {
      j["canonical"].push_back({{"id", canonical.token_ids[i]},
                                {"token", vocab.token(canonical.token_ids[i])},
                                {"byte_begin", canonical.byte_spans[i].begin},
                                {"byte_end", canonical.byte_spans[i].end}});
    }
    j["chars"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < chars.size(); ++i) {
      j["chars"].push_back({{"id", chars.token_ids[i]},
                            {"token", vocab.token(chars.token_ids[i])},
                            {"char_index", chars.char_index[i]}});
    }
    j["groups"] = nlohmann::ordered_json::array();
    for (const auto& g : groups.groups) {
      j["groups"].push_back({{"token_id", g.token_id},
                             {"start", g.positions.begin},
                             {"end", g.positions.end}});
    }
    return j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
  }
  std::string s = "group,token_id,token,start,end\n";
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& g = groups.groups[i];
    s += std::to_string(i) + "," + std::to_string(g.token_id) + "," +
         csv_field(vocab.token(g.token_id)) + "," +
         std::to_string(g.positions.begin) + "," +
         std::to_string(g.positions.end) + "\n";
  }
  return s;
}

int run(int argc, char** argv) {
  CLI::App app{"wordlens: word recovery analysis on toy transformers"};
  app.require_subcommand(1);

  // tokenize
  CommonArgs tok_args;
  std::string text;
  auto* tok = app.add_subcommand("tokenize", "Dump canonical/character tokenization and spans");
  add_common(tok, tok_args, false, false);
  tok->add_option("--text", text, "Text to tokenize")->required();

  // eval
  CommonArgs eval_args;
  std::string mode_name = "canonical";
  auto* eval = app.add_subcommand("eval", "Multiple-choice accuracy");
  add_common(eval, eval_args, true, true);
  eval->add_option("--mode", mode_name)
      ->check(CLI::IsMember({"canonical", "character"}))
      ->capture_default_str();

  // recovery
  CommonArgs rec_args;
  std::size_t rec_k = kDefaultTopK;
  bool sweep_k = false;
  bool in_group = false;
  auto* rec = app.add_subcommand("recovery", "Layerwise word recovery profile");
  add_common(rec, rec_args, true, true);
  rec->add_option("--k", rec_k, "Top-K")->capture_default_str();
  rec->add_flag("--sweep-k", sweep_k, "Profiles for K in {1,2,3,5,10,20}");
  rec->add_flag("--in-group", in_group, "Also report in-group recovery");

  // intervene
  CommonArgs int_args;
  InterventionSpec ispec;
  std::string target_mode = "all_canonical";
  std::optional<std::size_t> int_end;
  bool raw_direction = false;
  bool int_sweep = false;
  std::size_t int_k = kDefaultTopK;
  auto* inter = app.add_subcommand("intervene", "Remove token directions from the residual stream");
  add_common(inter, int_args, true, true);
  inter->add_option("--l0", ispec.start_layer, "First hook layer (L + 1 = none)")
      ->capture_default_str();
  inter->add_option("--end-layer", int_end, "Last hook layer (default L)");
  inter->add_option("--target-mode", target_mode)
      ->check(CLI::IsMember({"all_canonical", "recovered_at_start", "explicit_list"}))
      ->capture_default_str();
  inter->add_option("--targets", ispec.explicit_targets, "Token ids for explicit_list");
  inter->add_option("--detection-k", ispec.detection_k)->capture_default_str();
  inter->add_flag("--raw-direction", raw_direction, "Use the unnormalized W_out column");
  inter->add_flag("--sweep", int_sweep, "Sweep l0 over 0..L");
  inter->add_option("--k", int_k, "Top-K for recovery_at_l0")->capture_default_str();

  // mask
  CommonArgs mask_args;
  MaskSpec mspec;
  std::optional<std::size_t> mask_l0, mask_l1, first_n;
  std::vector<std::size_t> heads;
  bool mask_sweep = false;
  std::size_t mask_k = kDefaultTopK;
  auto* mask = app.add_subcommand("mask", "In-group attention masking");
  add_common(mask, mask_args, true, true);
  mask->add_option("--l0", mask_l0, "First masked block (default 0)");
  mask->add_option("--l1", mask_l1, "Last masked block (default L - 1)");
  mask->add_flag("--mask-diagonal", mspec.mask_diagonal, "Also mask self-attention inside groups");
  mask->add_option("--heads", heads, "Head subset (default all)");
  mask->add_flag("--sweep", mask_sweep, "Accuracy for masking from each block");
  mask->add_option("--first-n", first_n, "Masked vs baseline recovery, first N blocks");
  mask->add_option("--k", mask_k, "Top-K for recovery")->capture_default_str();

  // report
  CommonArgs rep_args;
  rep_args.format = "table";
  std::size_t rep_k = kDefaultTopK;
  std::string dataset_name = "synthetic";
  std::string model_name = "toy";
  auto* rep = app.add_subcommand("report", "Canon / Char delta / Recovery summary");
  add_common(rep, rep_args, true, true, {"table", "csv", "json"});
  rep->add_option("--k", rep_k)->capture_default_str();
  rep->add_option("--dataset-name", dataset_name)->capture_default_str();
  rep->add_option("--model-name", model_name)->capture_default_str();

  // gen-toy
  ModelConfig cfg;
  cfg.d_ff = 0;
  std::uint64_t seed = 7;
  std::string norm = "rms";
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-toy", "Write a deterministic toy model");
  gen->add_option("--layers", cfg.n_layers)->capture_default_str();
  gen->add_option("--heads", cfg.n_heads)->capture_default_str();
  gen->add_option("--dim", cfg.d_model)->capture_default_str();
  gen->add_option("--vocab", cfg.vocab_size)->capture_default_str();
  gen->add_option("--seed", seed)->capture_default_str();
  gen->add_option("--max-seq", cfg.max_seq)->capture_default_str();
  gen->add_option("--ff", cfg.d_ff, "Feed-forward width (default 4 * dim)");
  gen->add_option("--norm", norm)->check(CLI::IsMember({"rms", "layer"}))->capture_default_str();
  gen->add_flag("--tied", cfg.tied_embeddings, "Tie input and output embeddings");
  gen->add_option("--out", gen_out, "Weight file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (*tok) {
    const auto vocab = Vocabulary::load(tok_args.vocab, tok_args.merges);
    emit(tok_args, tokenize_output(text, vocab, tok_args.format));
  } else if (*eval) {
    const auto in = load_inputs(eval_args);
    const auto mode = parse_tokenizer_mode(mode_name);
    const auto r = evaluate(*in.model, in.examples, mode);
    emit(eval_args, eval_output(r, mode, eval_args.format));
  } else if (*rec) {
    const auto in = load_inputs(rec_args);
    std::vector<std::size_t> ks = {rec_k};
    if (sweep_k) ks.assign(std::begin(kSweepKs), std::end(kSweepKs));
    auto profiles = dataset_recovery(*in.model, in.examples, ks);
    for (auto& p : profiles) {
      if (!in_group) p.per_layer_group.clear();
      std::fprintf(stderr, "K=%zu max recovery %s at layer %zu\n", p.k,
                   format_fixed(p.max_score).c_str(), p.max_layer);
    }
    emit(rec_args, rec_args.format == "json" ? profiles_json(profiles)
                                             : profiles_csv(profiles));
  } else if (*inter) {
    const auto in = load_inputs(int_args);
    ispec.target_mode = parse_target_mode(target_mode);
    ispec.end_layer = int_end;
    ispec.normalize_direction = !raw_direction;
    ispec.validate(in.model->config.n_layers);
    if (int_sweep) {
      const auto rows = intervention_layer_sweep(*in.model, in.examples, ispec, int_k);
      emit(int_args, int_args.format == "json" ? intervention_sweep_json(rows)
                                               : intervention_sweep_csv(rows));
    } else {
      const auto r = evaluate(*in.model, in.examples, TokenizerMode::kCharacter,
                              intervention_factory(*in.model, ispec));
      emit(int_args, eval_output(r, TokenizerMode::kCharacter, int_args.format));
    }
  } else if (*mask) {
    const auto in = load_inputs(mask_args);
    const std::size_t n_layers = in.model->config.n_layers;
    if (!heads.empty()) mspec.heads = heads;
    if (mask_sweep) {
      const auto rows = masking_layer_sweep(*in.model, in.examples, mspec);
      emit(mask_args, mask_args.format == "json" ? mask_sweep_json(rows)
                                                 : mask_sweep_csv(rows));
    } else if (first_n) {
      const auto r = masked_recovery(*in.model, in.examples, *first_n, mask_k);
      emit(mask_args, mask_args.format == "json"
                          ? masked_recovery_json(r, *first_n)
                          : masked_recovery_csv(r));
    } else {
      mspec.start_layer = mask_l0.value_or(0);
      mspec.end_layer = mask_l1.value_or(n_layers == 0 ? 0 : n_layers - 1);
      if (n_layers == 0 && !mask_l0) mspec.start_layer = 1;
      const auto r = evaluate(*in.model, in.examples, TokenizerMode::kCharacter,
                              mask_factory(*in.model, mspec));
      emit(mask_args, eval_output(r, TokenizerMode::kCharacter, mask_args.format));
    }
  } else if (*rep) {
    const auto in = load_inputs(rep_args);
    const EvalReport r =
        full_report(*in.model, in.examples, rep_k, dataset_name, model_name);
    if (rep_args.format == "json") {
      emit(rep_args, report_json(r));
    } else if (rep_args.format == "csv") {
      emit(rep_args, report_csv(r));
    } else {
      emit(rep_args, report_table(std::span(&r, 1)));
    }
  } else if (*gen) {
    cfg.norm_kind = parse_norm_kind(norm);
    if (cfg.n_heads == 0 || cfg.d_model % cfg.n_heads != 0) {
      throw ValidationError("--dim must be a multiple of --heads");
    }
    cfg.head_dim = cfg.d_model / cfg.n_heads;
    if (cfg.d_ff == 0) cfg.d_ff = 4 * cfg.d_model;
    Model model{cfg, generate_toy_model(cfg, seed)};
    save_model(model, gen_out);
  }
  return 0;
}

}  // namespace
}  // namespace wordlens

int main(int argc, char** argv) {
  try {
    return wordlens::run(argc, argv);
  } catch (const wordlens::IoError& e) {
    std::fprintf(stderr, "wordlens: %s\n", e.what());
    return 2;
  } catch (const wordlens::Error& e) {
    std::fprintf(stderr, "wordlens: %s\n", e.what());
    return 1;
  }
}
