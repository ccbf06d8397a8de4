// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

// Measurement: reference-token recall, average vocabulary size, selector
// sweeps, corpus BLEU, and the context vs. no-context selection comparison.

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shortlex/aligner.hpp"
#include "shortlex/corpus.hpp"
#include "shortlex/inference.hpp"
#include "shortlex/selection.hpp"

namespace shortlex {

// Half-open token range.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct EvalText {
  std::vector<std::string> source;
  std::vector<std::string> reference;
  std::optional<TokenSpan> source_span;
  std::optional<TokenSpan> reference_span;
};

struct EvalItem {
  std::vector<TokenId> source;
  std::vector<TokenId> reference;  // no EOS
  std::optional<TokenSpan> source_span;
  std::optional<TokenSpan> reference_span;

  bool has_spans() const { return source_span.has_value() && reference_span.has_value(); }
};

// TSV "source<TAB>reference[<TAB>s:e<TAB>r:e]". Throws kFormat on malformed
// lines or spans outside their sentence.
std::vector<EvalText> read_eval_tsv(const std::filesystem::path& path);
void write_eval_tsv(const std::filesystem::path& path, std::span<const EvalText> items);
EvalItem encode_eval(const Vocabulary& vocab, const EvalText& text);
std::vector<EvalItem> encode_eval(const Vocabulary& vocab, std::span<const EvalText> texts);

enum class RecallScope { kSentence, kSpan };
enum class Averaging { kMacro, kMicro };

// Unique reference ids in scope, specials removed (EOS included).
std::vector<TokenId> scoped_reference(const EvalItem& item, RecallScope scope);

// Percentage of scoped reference ids contained in the bag. Returns nullopt
// when the scope holds no countable token. Throws kInvalidInput for span
// scope on an item without spans.
std::optional<double> recall(const BagOfWords& bow, const EvalItem& item, RecallScope scope);

// Macro: mean of per-sentence recalls (sentences with empty scope skipped).
// Micro: pooled hits over pooled reference tokens.
double corpus_recall(std::span<const BagOfWords> bows, std::span<const EvalItem> items, RecallScope scope,
                     Averaging averaging = Averaging::kMacro);

double avg_vocab_size(std::span<const BagOfWords> bows);

struct BenchRecord {
  SelectorTag tag;
  double avg_vocab_size = 0.0;
  double recall_sentence = 0.0;
  std::optional<double> recall_span;
  std::optional<double> bleu;
};

// 0.99, 0.9, 0.5, 0.1, 0.01, 1e-3, 1e-4, 1e-5, 1e-6.
std::vector<double> default_lambda_grid();
// 100..1000 step 100, 2000..10000 step 1000, each capped at min(k_max, V);
// duplicates after capping are dropped.
std::vector<std::size_t> default_k_grid(std::size_t k_max, std::size_t vocab_size);

// Pre-sigmoid selection logits for every item's source.
std::vector<std::vector<double>> nvs_logits_for(const InferenceModel<double>& model, std::span<const EvalItem> items);

std::vector<BenchRecord> sweep_nvs(std::span<const std::vector<double>> logits, std::span<const EvalItem> items,
                                   std::span<const double> lambdas, Averaging averaging = Averaging::kMacro);
std::vector<BenchRecord> sweep_align(const TranslationLexicon& lexicon, std::span<const EvalItem> items,
                                     std::span<const std::size_t> ks, Averaging averaging = Averaging::kMacro);

// Header "selector,param,avg_vocab_size,recall_sentence,recall_span".
void write_sweep_csv(std::ostream& out, std::span<const BenchRecord> records);

// True when records are ordered so that avg vocab size and sentence (and span)
// recall never decrease from one record to the next.
bool sweep_is_monotone(std::span<const BenchRecord> records);

// Baseline 13a-style tokenization used for BLEU.
std::vector<std::string> tokenize_13a(std::string_view line);

struct BleuResult {
  double score = 0.0;
  double brevity_penalty = 0.0;
  double precisions[4] = {0, 0, 0, 0};  // percentages after smoothing
  std::size_t hyp_length = 0;
  std::size_t ref_length = 0;
};

// Corpus BLEU-4 with exponential smoothing of zero n-gram counts. Throws
// kInvalidInput on a line-count mismatch.
BleuResult corpus_bleu(std::span<const std::string> hypotheses, std::span<const std::string> references);

struct ContextFlags {
  bool all_contextual = false;
  bool all_noncontextual = false;
  bool exclusive_contextual = false;
  bool exclusive_noncontextual = false;
};

struct ContextSummary {
  double lambda = 0.0;
  std::size_t sentences = 0;
  double all_contextual = 0.0;  // percentages
  double all_noncontextual = 0.0;
  double excl_contextual = 0.0;
  double excl_noncontextual = 0.0;
  std::vector<ContextFlags> flags;
  std::vector<std::size_t> contextual_sizes;
  std::vector<std::size_t> noncontextual_sizes;
};

// Splits a token sequence into words: runs ending in a token that carries the
// end-of-word marker (a trailing partial word forms its own run).
std::vector<TokenSpan> word_runs(std::span<const TokenId> tokens, const Vocabulary& vocab);

// Contextual bag: threshold on the whole sentence's encoding. Non-contextual
// bag: union of thresholds on each word encoded alone. Flags use the span
// reference tokens; throws kInvalidInput when an item lacks spans.
std::vector<ContextSummary> context_compare(const InferenceModel<double>& model, const Vocabulary& vocab,
                                            std::span<const EvalItem> items, std::span<const double> lambdas);

// Per-sentence flag TSV followed by a summary block shaped like
// "            context  no-context" rows for All and All excl per lambda.
void write_context_report(std::ostream& out, std::span<const ContextSummary> summaries);

}  // namespace shortlex
