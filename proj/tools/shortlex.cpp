// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Every subcommand is a thin wrapper over one call of
// the C interface; options can also come from a key=value config file given
// with --config (command-line flags win).

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "shortlex/shortlex.h"

namespace {

constexpr const char* kFormats = R"(File formats:
  corpus      plain text, one sentence per line, tokens separated by spaces;
              parallel corpora are two line-aligned files
  merges      first line "#shortlex-bpe v1", then one "left right" pair per line
  vocab       one token per line, id = line number; the first four lines are
              <pad> <unk> <bos> <eos>
  lexicon     TSV "source<TAB>target<TAB>probability", grouped by source,
              descending probability, 6 decimals
  checkpoint  .slxm: "SHORTLEX-MODEL v1", key=value config lines, a blank
              line, then per array a "name rows cols" line and rows*cols
              little-endian float32 values
  eval set    TSV "source<TAB>reference[<TAB>s:e<TAB>s:e]" with half-open
              token spans on the source and reference sides
  bow dump    one line per sentence, selected tokens tab-separated, sorted
  side file   per line "vocab_size<TAB>score<TAB>encode_ms<TAB>select_ms<TAB>decode_ms"
  sweep csv   "selector,param,avg_vocab_size,recall_sentence,recall_span")";

// Failure raised after a C call; carries the process exit code.
struct Failure {
  int code;
};

int exit_code(slx_status s) {
  switch (s) {
    case SLX_OK: return 0;
    case SLX_ERR_INVALID_INPUT:
    case SLX_ERR_IO:
    case SLX_ERR_FORMAT: return 1;
    default: return 2;
  }
}

void check(slx_status s) {
  if (s == SLX_OK) return;
  std::cerr << "shortlex: " << slx_status_name(s) << ": " << slx_last_error() << '\n';
  throw Failure{exit_code(s)};
}

struct Str {
  char* p = nullptr;
  ~Str() { slx_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct Handles {
  slx_vocab* vocab = nullptr;
  slx_lexicon* lexicon = nullptr;
  slx_model* model = nullptr;
  ~Handles() {
    slx_model_free(model);
    slx_lexicon_free(lexicon);
    slx_vocab_free(vocab);
  }
};

// Options shared by commands that load a model and choose a selector.
struct SelectorArgs {
  std::string model;
  std::string vocab;
  std::string selector = "none";
  double lambda = 0.9;
  std::size_t k = 200;
  std::string lexicon;
  std::string precision = "double";
  std::size_t beam = 5;
  double alpha = 1.0;
  std::size_t max_length = 0;

  void add(CLI::App* app, bool need_model, bool beam_opts, bool selector_opts = true) {
    auto* m = app->add_option("--model", model, "Model checkpoint (.slxm)");
    if (need_model) m->required();
    m->check(CLI::ExistingFile);
    app->add_option("--vocab", vocab, "Vocabulary file (default: the path recorded in the checkpoint)")
        ->check(CLI::ExistingFile);
    if (selector_opts) {
      app->add_option("--selector", selector, "Vocabulary selector")
          ->check(CLI::IsMember({"none", "nvs", "align"}))
          ->capture_default_str();
      app->add_option("--lambda", lambda, "NVS threshold in [0, 1)")->capture_default_str();
      app->add_option("--k", k, "Lexicon entries per source token")->capture_default_str();
      app->add_option("--lexicon", lexicon, "Lexicon TSV for the align selector")->check(CLI::ExistingFile);
    }
    app->add_option("--precision", precision, "Inference precision")
        ->check(CLI::IsMember({"double", "float"}))
        ->capture_default_str();
    if (beam_opts) {
      app->add_option("--beam", beam, "Beam size")->capture_default_str();
      app->add_option("--alpha", alpha, "Length normalization exponent")->capture_default_str();
      app->add_option("--max-length", max_length, "Output length limit (0: 2*source+10)")->capture_default_str();
    }
  }

  slx_selector make_selector() const {
    slx_selector s;
    slx_selector_init(&s);
    s.kind = selector == "nvs" ? SLX_SELECTOR_NVS : selector == "align" ? SLX_SELECTOR_ALIGN : SLX_SELECTOR_NONE;
    s.lambda = lambda;
    s.k = k;
    return s;
  }

  slx_beam_options make_beam() const {
    slx_beam_options b;
    slx_beam_options_init(&b);
    b.beam = beam;
    b.alpha = alpha;
    b.max_length = max_length;
    return b;
  }

  // Resolves the vocabulary path, falling back to the checkpoint's record.
  std::string vocab_path() const {
    if (!vocab.empty()) return vocab;
    if (model.empty()) {
      std::cerr << "shortlex: --vocab is required without --model\n";
      throw Failure{1};
    }
    Str report;
    check(slx_inspect_checkpoint(model.c_str(), 0, &report.p));
    std::istringstream in(report.str());
    std::string line;
    while (std::getline(in, line)) {
      if (line.rfind("meta.vocab\t", 0) == 0) return line.substr(11);
    }
    std::cerr << "shortlex: the checkpoint records no vocabulary; pass --vocab\n";
    throw Failure{1};
  }

  // Loads what the selector needs; the model only when present or required.
  void load(Handles& h, bool need_model) const {
    check(slx_vocab_load(vocab_path().c_str(), &h.vocab));
    if (!model.empty() || need_model) {
      auto p = precision == "float" ? SLX_PRECISION_FLOAT : SLX_PRECISION_DOUBLE;
      check(slx_model_load(model.c_str(), h.vocab, p, &h.model));
    }
    if (selector == "align") {
      if (lexicon.empty()) {
        std::cerr << "shortlex: --selector align needs --lexicon\n";
        throw Failure{1};
      }
      check(slx_lexicon_load(lexicon.c_str(), h.vocab, &h.lexicon));
    }
  }
};

std::vector<const char*> c_strings(const std::vector<std::string>& v) {
  std::vector<const char*> out;
  for (const auto& s : v) out.push_back(s.c_str());
  return out;
}

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

// Logs the fully resolved configuration of the selected subcommand.
void log_config(const CLI::App& app) {
  const CLI::App* leaf = &app;
  std::string path;
  while (true) {
    auto subs = leaf->get_subcommands();
    if (subs.empty()) break;
    leaf = subs.front();
    path += (path.empty() ? "" : " ") + leaf->get_name();
  }
  std::cerr << "# shortlex " << path << '\n';
  for (const CLI::Option* o : leaf->get_options()) {
    if (o->get_name() == "--help" || o->get_name() == "-h" || o->get_lnames().empty()) continue;
    std::string value;
    auto results = o->results();
    if (!results.empty()) {
      for (std::size_t i = 0; i < results.size(); ++i) value += (i ? "," : "") + results[i];
    } else {
      value = o->get_default_str();
    }
    std::cerr << "#   " << o->get_lnames().front() << " = " << value << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shortlex: vocabulary selection for neural machine translation"};
  app.footer(kFormats);
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file; command-line flags take precedence");
  app.set_version_flag("--version", std::string(slx_version()));

  std::function<void()> action;

  // bpe learn | apply
  auto* bpe = app.add_subcommand("bpe", "Byte-pair encoding")->require_subcommand(1);
  std::vector<std::string> bpe_inputs;
  std::size_t bpe_merges = 10000;
  std::string bpe_out, bpe_codes, bpe_in, bpe_output;
  auto* bpe_learn = bpe->add_subcommand("learn", "Learn merges from raw text (lowercased, punctuation split)");
  bpe_learn->add_option("--input", bpe_inputs, "Raw text files")->required()->check(CLI::ExistingFile);
  bpe_learn->add_option("--merges", bpe_merges, "Number of merges")->capture_default_str();
  bpe_learn->add_option("--out", bpe_out, "Merges file to write")->required();
  bpe_learn->callback([&] {
    action = [&] {
      auto in = c_strings(bpe_inputs);
      check(slx_bpe_learn(in.data(), in.size(), bpe_merges, bpe_out.c_str()));
    };
  });
  auto* bpe_apply = bpe->add_subcommand("apply", "Segment raw text into subwords");
  bpe_apply->add_option("--merges", bpe_codes, "Merges file")->required()->check(CLI::ExistingFile);
  bpe_apply->add_option("--input", bpe_in, "Raw text file")->required()->check(CLI::ExistingFile);
  bpe_apply->add_option("--output", bpe_output, "Subword file to write")->required();
  bpe_apply->callback([&] {
    action = [&] { check(slx_bpe_apply(bpe_codes.c_str(), bpe_in.c_str(), bpe_output.c_str())); };
  });

  // vocab build
  auto* vocab = app.add_subcommand("vocab", "Vocabulary files")->require_subcommand(1);
  std::vector<std::string> vocab_inputs;
  std::string vocab_out;
  auto* vocab_build = vocab->add_subcommand("build", "Build a joint vocabulary from subword files");
  vocab_build->add_option("--input", vocab_inputs, "Subword files")->required()->check(CLI::ExistingFile);
  vocab_build->add_option("--out", vocab_out, "Vocabulary file to write")->required();
  vocab_build->callback([&] {
    action = [&] {
      auto in = c_strings(vocab_inputs);
      check(slx_vocab_build(in.data(), in.size(), vocab_out.c_str()));
    };
  });

  // clean
  auto* clean = app.add_subcommand("clean", "Filter a parallel corpus");
  std::string clean_src, clean_tgt, clean_out_src, clean_out_tgt, clean_log;
  slx_clean_options clean_opts;
  slx_clean_options_init(&clean_opts);
  clean->add_option("--src", clean_src, "Source file")->required()->check(CLI::ExistingFile);
  clean->add_option("--tgt", clean_tgt, "Target file")->required()->check(CLI::ExistingFile);
  clean->add_option("--out-src", clean_out_src, "Kept source lines")->required();
  clean->add_option("--out-tgt", clean_out_tgt, "Kept target lines")->required();
  clean->add_option("--rejections", clean_log, "TSV of dropped lines and the rule that fired");
  clean->add_option("--max-ratio", clean_opts.max_ratio, "Maximum length ratio")->capture_default_str();
  clean->add_option("--max-overlap", clean_opts.max_overlap, "Maximum token overlap")->capture_default_str();
  clean->add_option("--max-len", clean_opts.max_len, "Maximum tokens per side")->capture_default_str();
  clean->callback([&] {
    action = [&] {
      std::size_t kept = 0, dropped = 0;
      check(slx_clean(clean_src.c_str(), clean_tgt.c_str(), clean_out_src.c_str(), clean_out_tgt.c_str(),
                      opt(clean_log), &clean_opts, &kept, &dropped));
      std::cerr << "kept " << kept << ", dropped " << dropped << '\n';
    };
  });

  // align train
  auto* align = app.add_subcommand("align", "Word alignment")->require_subcommand(1);
  std::string align_src, align_tgt, align_vocab, align_out, align_adapt_src, align_adapt_tgt;
  slx_align_options align_opts;
  slx_align_options_init(&align_opts);
  auto* align_train = align->add_subcommand("train", "Train translation probabilities by EM");
  align_train->add_option("--src", align_src, "Source subword file")->required()->check(CLI::ExistingFile);
  align_train->add_option("--tgt", align_tgt, "Target subword file")->required()->check(CLI::ExistingFile);
  align_train->add_option("--vocab", align_vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  align_train->add_option("--out", align_out, "Alignment model to write")->required();
  align_train->add_option("--iters", align_opts.iterations, "EM iterations")->capture_default_str();
  align_train->add_option("--diagonal-tension", align_opts.diagonal_tension, "Diagonal prior strength (0: off)")
      ->capture_default_str();
  align_train->add_option("--threads", align_opts.threads, "E-step threads")->capture_default_str();
  align_train->add_option("--adapt-src", align_adapt_src, "Adaptation source file")->check(CLI::ExistingFile);
  align_train->add_option("--adapt-tgt", align_adapt_tgt, "Adaptation target file")->check(CLI::ExistingFile);
  align_train->add_option("--upsample", align_opts.upsample, "Copies of the adaptation data")->capture_default_str();
  align_train->callback([&] {
    action = [&] {
      align_opts.adapt_src = opt(align_adapt_src);
      align_opts.adapt_tgt = opt(align_adapt_tgt);
      check(slx_align_train(align_src.c_str(), align_tgt.c_str(), align_vocab.c_str(), &align_opts,
                            align_out.c_str()));
    };
  });

  // lexicon extract
  auto* lexicon = app.add_subcommand("lexicon", "Translation lexicons")->require_subcommand(1);
  std::string lex_model, lex_vocab, lex_out;
  std::size_t lex_kmax = 1000;
  auto* lex_extract = lexicon->add_subcommand("extract", "Top-k lexicon from an alignment model");
  lex_extract->add_option("--model", lex_model, "Alignment model")->required()->check(CLI::ExistingFile);
  lex_extract->add_option("--vocab", lex_vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  lex_extract->add_option("--k-max", lex_kmax, "Entries kept per source token")->capture_default_str();
  lex_extract->add_option("--out", lex_out, "Lexicon TSV to write")->required();
  lex_extract->callback([&] {
    action = [&] { check(slx_lexicon_extract(lex_model.c_str(), lex_vocab.c_str(), lex_kmax, lex_out.c_str())); };
  });

  // train
  auto* train = app.add_subcommand("train", "Train the translation model with the selection head");
  std::string tr_src, tr_tgt, tr_vsrc, tr_vtgt, tr_vocab, tr_out, tr_log, tr_pos = "1000";
  slx_train_options tr_opts;
  slx_train_options_init(&tr_opts);
  train->add_option("--src", tr_src, "Source subword file")->required()->check(CLI::ExistingFile);
  train->add_option("--tgt", tr_tgt, "Target subword file")->required()->check(CLI::ExistingFile);
  train->add_option("--valid-src", tr_vsrc, "Validation source")->check(CLI::ExistingFile);
  train->add_option("--valid-tgt", tr_vtgt, "Validation target")->check(CLI::ExistingFile);
  train->add_option("--vocab", tr_vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  train->add_option("--out", tr_out, "Checkpoint to write")->required();
  train->add_option("--log", tr_log, "Training log TSV");
  train->add_option("--steps", tr_opts.steps, "Optimizer steps")->capture_default_str();
  train->add_option("--batch-tokens", tr_opts.batch_tokens, "Target tokens per batch")->capture_default_str();
  train->add_option("--lr", tr_opts.lr, "Peak learning rate")->capture_default_str();
  train->add_option("--warmup", tr_opts.warmup, "Linear warmup steps")->capture_default_str();
  train->add_option("--seed", tr_opts.seed, "Random seed")->capture_default_str();
  train->add_option("--validate-every", tr_opts.validate_every, "Steps between validations")->capture_default_str();
  train->add_option("--d-model", tr_opts.model.d_model, "Hidden size")->capture_default_str();
  train->add_option("--encoder-layers", tr_opts.model.encoder_layers, "Encoder layers")->capture_default_str();
  train->add_option("--decoder-layers", tr_opts.model.decoder_layers, "Decoder layers")->capture_default_str();
  train->add_option("--heads", tr_opts.model.heads, "Attention heads")->capture_default_str();
  train->add_option("--ffn", tr_opts.model.ffn, "Feed-forward size")->capture_default_str();
  train->add_option("--label-smoothing", tr_opts.model.label_smoothing, "Label smoothing")->capture_default_str();
  train->add_option("--pos-weight", tr_pos, "Positive weight: a number >= 1, auto or auto:x")->capture_default_str();
  train->add_option("--dropout", tr_opts.model.dropout, "Dropout rate")->capture_default_str();
  train->callback([&] {
    action = [&] {
      tr_opts.model.pos_weight = tr_pos.c_str();
      tr_opts.log = opt(tr_log);
      check(slx_train(tr_src.c_str(), tr_tgt.c_str(), opt(tr_vsrc), opt(tr_vtgt), tr_vocab.c_str(), &tr_opts,
                      tr_out.c_str()));
    };
  });

  // finetune
  auto* finetune = app.add_subcommand("finetune", "Fine-tune the selection head on adaptation data");
  std::string ft_model, ft_vocab, ft_src, ft_tgt, ft_out;
  slx_finetune_options ft_opts;
  slx_finetune_options_init(&ft_opts);
  bool ft_full = false;
  finetune->add_option("--model", ft_model, "Checkpoint to start from")->required()->check(CLI::ExistingFile);
  finetune->add_option("--vocab", ft_vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  finetune->add_option("--src", ft_src, "Adaptation source")->required()->check(CLI::ExistingFile);
  finetune->add_option("--tgt", ft_tgt, "Adaptation target")->required()->check(CLI::ExistingFile);
  finetune->add_option("--out", ft_out, "Checkpoint to write")->required();
  finetune->add_option("--epochs", ft_opts.epochs, "Epochs")->capture_default_str();
  finetune->add_option("--lr", ft_opts.lr, "Learning rate")->capture_default_str();
  finetune->add_option("--batch-tokens", ft_opts.batch_tokens, "Target tokens per batch")->capture_default_str();
  finetune->add_option("--seed", ft_opts.seed, "Random seed")->capture_default_str();
  finetune->add_flag("--full-model", ft_full, "Also update the translation model (joint loss)");
  finetune->callback([&] {
    action = [&] {
      ft_opts.full_model = ft_full ? 1 : 0;
      check(slx_finetune(ft_model.c_str(), ft_vocab.c_str(), ft_src.c_str(), ft_tgt.c_str(), &ft_opts,
                         ft_out.c_str()));
    };
  });

  // translate
  auto* translate = app.add_subcommand("translate", "Beam-search translation of subword input");
  SelectorArgs tl;
  std::string tl_in, tl_out, tl_side;
  tl.add(translate, true, true);
  translate->add_option("--input", tl_in, "Subword source file")->required()->check(CLI::ExistingFile);
  translate->add_option("--output", tl_out, "Translations (subword markers removed)")->required();
  translate->add_option("--side", tl_side, "Per-line metrics file");
  translate->callback([&] {
    action = [&] {
      Handles h;
      tl.load(h, true);
      auto sel = tl.make_selector();
      sel.lexicon = h.lexicon;
      auto beam = tl.make_beam();
      slx_translate_summary s{};
      check(slx_translate_file(h.model, &sel, &beam, tl_in.c_str(), tl_out.c_str(), opt(tl_side), &s));
      std::fprintf(stderr, "translated %zu sentences, avg vocab size %.2f, %.1f ms\n", s.sentences, s.avg_vocab_size,
                   s.total_ms);
    };
  });

  // bow
  auto* bow = app.add_subcommand("bow", "Dump the selected vocabulary per sentence");
  SelectorArgs bw;
  std::string bw_in, bw_out;
  bw.add(bow, true, false);
  bow->add_option("--input", bw_in, "Subword source file")->required()->check(CLI::ExistingFile);
  bow->add_option("--output", bw_out, "Bag-of-words dump")->required();
  bow->callback([&] {
    action = [&] {
      Handles h;
      bw.load(h, true);
      auto sel = bw.make_selector();
      sel.lexicon = h.lexicon;
      check(slx_bow_file(h.model, &sel, bw_in.c_str(), bw_out.c_str()));
    };
  });

  // bench recall | sweep | latency | context
  auto* bench = app.add_subcommand("bench", "Benchmarks")->require_subcommand(1);
  SelectorArgs br, bs, bl, bc;
  std::string br_eval, bs_eval, bs_out, bs_grid = "default", bl_in, bl_out, bc_eval, bc_out;
  bool br_micro = false, bs_micro = false;
  std::size_t bl_reps = 30;
  std::vector<double> bc_lambdas{0.9, 0.99};

  auto* b_recall = bench->add_subcommand("recall", "Recall and average vocabulary size of a selector");
  br.add(b_recall, false, false);
  b_recall->add_option("--eval", br_eval, "Eval set TSV")->required()->check(CLI::ExistingFile);
  b_recall->add_flag("--micro", br_micro, "Micro-average over tokens instead of sentences");
  b_recall->callback([&] {
    action = [&] {
      Handles h;
      br.load(h, br.selector != "align");
      auto sel = br.make_selector();
      sel.lexicon = h.lexicon;
      slx_recall r{};
      check(slx_bench_recall(h.model, h.vocab, &sel, br_eval.c_str(), br_micro ? 1 : 0, &r));
      std::printf("sentences\t%zu\navg_vocab_size\t%.4f\nrecall_sentence\t%.4f\n", r.sentences, r.avg_vocab_size,
                  r.recall_sentence);
      if (r.recall_span >= 0) std::printf("recall_span\t%.4f\n", r.recall_span);
    };
  });

  auto* b_sweep = bench->add_subcommand("sweep", "Recall against vocabulary size over a parameter grid");
  bs.add(b_sweep, false, false);
  b_sweep->add_option("--eval", bs_eval, "Eval set TSV")->required()->check(CLI::ExistingFile);
  b_sweep->add_option("--grid", bs_grid, "\"default\" or comma-separated values")->capture_default_str();
  b_sweep->add_option("--output", bs_out, "CSV to write (default: stdout)");
  b_sweep->add_flag("--micro", bs_micro, "Micro-average over tokens instead of sentences");
  b_sweep->callback([&] {
    action = [&] {
      if (bs.selector == "none") {
        std::cerr << "shortlex: sweeps need --selector nvs or align\n";
        throw Failure{1};
      }
      std::vector<double> grid;
      if (bs_grid != "default") {
        std::stringstream ss(bs_grid);
        std::string item;
        while (std::getline(ss, item, ',')) {
          try {
            grid.push_back(std::stod(item));
          } catch (const std::exception&) {
            std::cerr << "shortlex: --grid: bad value '" << item << "'\n";
            throw Failure{1};
          }
        }
      }
      Handles h;
      bs.load(h, bs.selector == "nvs");
      auto sel = bs.make_selector();
      sel.lexicon = h.lexicon;
      std::string out = bs_out.empty() ? "/dev/stdout" : bs_out;
      check(slx_bench_sweep(h.model, h.vocab, &sel, bs_eval.c_str(), grid.data(), grid.size(), bs_micro ? 1 : 0,
                            out.c_str()));
    };
  });

  auto* b_latency = bench->add_subcommand("latency", "Batch-1 decoding latency with confidence intervals");
  bl.precision = "float";
  bl.add(b_latency, true, true);
  b_latency->add_option("--input", bl_in, "Subword source file")->required()->check(CLI::ExistingFile);
  b_latency->add_option("--repetitions", bl_reps, "Timed passes after one warm-up pass")->capture_default_str();
  b_latency->add_option("--output", bl_out, "Report to write (default: stdout)");
  b_latency->callback([&] {
    action = [&] {
      Handles h;
      bl.load(h, true);
      auto sel = bl.make_selector();
      sel.lexicon = h.lexicon;
      auto beam = bl.make_beam();
      std::string out = bl_out.empty() ? "/dev/stdout" : bl_out;
      check(slx_bench_latency(h.model, &sel, &beam, bl_in.c_str(), bl_reps, out.c_str()));
    };
  });

  auto* b_context = bench->add_subcommand("context", "Selection with and without sentence context");
  bc.add(b_context, true, false, false);
  b_context->add_option("--eval", bc_eval, "Eval set TSV with spans")->required()->check(CLI::ExistingFile);
  b_context->add_option("--lambdas", bc_lambdas, "Thresholds")->delimiter(',')->capture_default_str();
  b_context->add_option("--output", bc_out, "Report to write (default: stdout)");
  b_context->callback([&] {
    action = [&] {
      Handles h;
      bc.load(h, true);
      std::string out = bc_out.empty() ? "/dev/stdout" : bc_out;
      check(slx_bench_context(h.model, bc_eval.c_str(), bc_lambdas.data(), bc_lambdas.size(), out.c_str()));
    };
  });

  // eval bleu
  auto* eval = app.add_subcommand("eval", "Translation quality")->require_subcommand(1);
  std::string ev_hyp, ev_ref;
  auto* eval_bleu = eval->add_subcommand("bleu", "Corpus BLEU-4 (13a tokenization, exponential smoothing)");
  eval_bleu->add_option("--hyp", ev_hyp, "Hypotheses, one per line")->required()->check(CLI::ExistingFile);
  eval_bleu->add_option("--ref", ev_ref, "References, one per line")->required()->check(CLI::ExistingFile);
  eval_bleu->callback([&] {
    action = [&] {
      slx_bleu b{};
      check(slx_eval_bleu(ev_hyp.c_str(), ev_ref.c_str(), &b));
      std::printf("BLEU = %.2f %.1f/%.1f/%.1f/%.1f (BP = %.3f hyp_len = %zu ref_len = %zu)\n", b.score,
                  b.precisions[0], b.precisions[1], b.precisions[2], b.precisions[3], b.brevity_penalty,
                  b.hyp_length, b.ref_length);
    };
  });

  // inspect checkpoint
  auto* inspect = app.add_subcommand("inspect", "Artifact inspection")->require_subcommand(1);
  std::string in_model;
  std::size_t in_k = 0;
  auto* inspect_ckpt = inspect->add_subcommand("checkpoint", "Config and parameter counts of a checkpoint");
  inspect_ckpt->add_option("--model", in_model, "Checkpoint")->required()->check(CLI::ExistingFile);
  inspect_ckpt->add_option("--lexicon-k", in_k, "Also report the size of a top-k lexicon over the target vocabulary");
  inspect_ckpt->callback([&] {
    action = [&] {
      Str report;
      check(slx_inspect_checkpoint(in_model.c_str(), in_k, &report.p));
      std::cout << report.str();
    };
  });

  // synth
  auto* synth = app.add_subcommand("synth", "Write the synthetic reversal task");
  std::string sy_out;
  slx_synth_options sy_opts;
  slx_synth_options_init(&sy_opts);
  synth->add_option("--out", sy_out, "Output directory")->required();
  synth->add_option("--seed", sy_opts.seed, "Random seed")->capture_default_str();
  synth->add_option("--train-pairs", sy_opts.train_pairs, "Training pairs")->capture_default_str();
  synth->add_option("--test-sentences", sy_opts.test_sentences, "Test sentences")->capture_default_str();
  synth->add_option("--adapt-pairs", sy_opts.adapt_pairs, "Adaptation pairs")->capture_default_str();
  synth->callback([&] {
    action = [&] { check(slx_synth(sy_out.c_str(), &sy_opts)); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  try {
    log_config(app);
    if (action) action();
  } catch (const Failure& f) {
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "shortlex: internal error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
