// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shortlex/bench.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

namespace shortlex {
namespace {

BagOfWords bag(std::vector<TokenId> ids) { return BagOfWords(std::move(ids), {SelectorTag::Kind::kNone, 0}); }

TEST(Bleu, HandComputedNoSmoothing) {
  // Matches per order: 4/5, 3/4, 2/3, 1/2 with equal lengths.
  std::vector<std::string> hyp{"a b c d e"}, ref{"a b c d f"};
  auto r = corpus_bleu(hyp, ref);
  double expected = 100.0 * std::pow(0.8 * 0.75 * (2.0 / 3.0) * 0.5, 0.25);
  EXPECT_NEAR(r.score, expected, 1e-9);
  EXPECT_NEAR(r.score, 66.87, 0.01);
  EXPECT_DOUBLE_EQ(r.brevity_penalty, 1.0);
}

TEST(Bleu, ExponentialSmoothingOfZeroOrders) {
  // 1-grams 3/5; no higher-order match. Each zero order doubles the divisor.
  std::vector<std::string> hyp{"a b c d e"}, ref{"a x c y e"};
  auto r = corpus_bleu(hyp, ref);
  double p[4] = {0.6, 1.0 / (2 * 4), 1.0 / (4 * 3), 1.0 / (8 * 2)};
  double expected = 100.0 * std::exp((std::log(p[0]) + std::log(p[1]) + std::log(p[2]) + std::log(p[3])) / 4);
  EXPECT_NEAR(r.score, expected, 1e-9);
  EXPECT_NEAR(r.precisions[1], 12.5, 1e-12);
}

TEST(Bleu, BrevityPenaltyAndIdentity) {
  std::vector<std::string> same{"the cat sat on the mat"};
  EXPECT_NEAR(corpus_bleu(same, same).score, 100.0, 1e-9);
  std::vector<std::string> hyp{"the cat sat on"}, ref{"the cat sat on the mat"};
  auto r = corpus_bleu(hyp, ref);
  EXPECT_NEAR(r.brevity_penalty, std::exp(1.0 - 6.0 / 4.0), 1e-12);
  EXPECT_NEAR(r.score, 100.0 * std::exp(1.0 - 6.0 / 4.0), 1e-9);
}

TEST(Bleu, LengthMismatchThrows) {
  std::vector<std::string> a{"x"}, b{"x", "y"};
  EXPECT_THROW(corpus_bleu(a, b), Error);
}

TEST(Tokenize13a, SplitsPunctuation) {
  EXPECT_EQ(tokenize_13a("Hello, world."), (std::vector<std::string>{"Hello", ",", "world", "."}));
  EXPECT_EQ(tokenize_13a("3.5 and 1,000"), (std::vector<std::string>{"3.5", "and", "1,000"}));
  EXPECT_EQ(tokenize_13a("a&amp;b (x)"), (std::vector<std::string>{"a", "&", "b", "(", "x", ")"}));
  EXPECT_EQ(tokenize_13a("2-3"), (std::vector<std::string>{"2", "-", "3"}));
}

EvalItem item(std::vector<TokenId> ref, std::optional<TokenSpan> span = std::nullopt) {
  EvalItem it;
  it.source = {4};
  it.reference = std::move(ref);
  if (span) {
    it.source_span = TokenSpan{0, 1};
    it.reference_span = span;
  }
  return it;
}

TEST(Recall, SpecialsExcludedAndDuplicatesCountedOnce) {
  auto it = item({5, 6, 6, kEosId, kUnkId});
  EXPECT_EQ(scoped_reference(it, RecallScope::kSentence), (std::vector<TokenId>{5, 6}));
  EXPECT_DOUBLE_EQ(*recall(bag({5}), it, RecallScope::kSentence), 50.0);
}

TEST(Recall, SpanAndSentenceDisagree) {
  // Everything but the annotated word is covered: high sentence recall, zero
  // span recall.
  auto it = item({5, 6, 7, 8, 9}, TokenSpan{2, 3});
  auto b = bag({5, 6, 8, 9});
  EXPECT_DOUBLE_EQ(*recall(b, it, RecallScope::kSentence), 80.0);
  EXPECT_DOUBLE_EQ(*recall(b, it, RecallScope::kSpan), 0.0);
}

TEST(Recall, MacroVersusMicroAndEmptyScope) {
  std::vector<EvalItem> items{item({5}), item({6, 7, 8, 9}), item({kEosId})};
  std::vector<BagOfWords> bows{bag({5}), bag({6}), bag({})};
  EXPECT_FALSE(recall(bows[2], items[2], RecallScope::kSentence).has_value());
  EXPECT_DOUBLE_EQ(corpus_recall(bows, items, RecallScope::kSentence, Averaging::kMacro), (100.0 + 25.0) / 2);
  EXPECT_DOUBLE_EQ(corpus_recall(bows, items, RecallScope::kSentence, Averaging::kMicro), 100.0 * 2 / 5);
  EXPECT_THROW(corpus_recall(bows, items, RecallScope::kSpan), Error);
}

TEST(Grids, LambdaAndK) {
  auto l = default_lambda_grid();
  ASSERT_EQ(l.size(), 9u);
  EXPECT_DOUBLE_EQ(l.front(), 0.99);
  EXPECT_DOUBLE_EQ(l.back(), 1e-6);
  auto k = default_k_grid(1000, 50000);
  EXPECT_EQ(k.size(), 10u);
  EXPECT_EQ(default_k_grid(10000, 50000).size(), 19u);
  EXPECT_EQ(default_k_grid(250, 50000), (std::vector<std::size_t>{100, 200, 250}));
  EXPECT_EQ(default_k_grid(1000, 60), (std::vector<std::size_t>{60}));
}

TEST(Sweep, NvsMonotoneAndCsv) {
  // Six sentences with random-looking logits over V=12.
  std::vector<EvalItem> items;
  std::vector<std::vector<double>> logits;
  for (int s = 0; s < 6; ++s) {
    items.push_back(item({static_cast<TokenId>(4 + s), static_cast<TokenId>(5 + s)}, TokenSpan{0, 1}));
    std::vector<double> l(12);
    for (int v = 0; v < 12; ++v) l[v] = std::sin(1.7 * v + 0.9 * s) * 8.0;
    logits.push_back(l);
  }
  auto grid = default_lambda_grid();
  auto records = sweep_nvs(logits, items, grid);
  ASSERT_EQ(records.size(), grid.size());
  EXPECT_TRUE(sweep_is_monotone(records));
  EXPECT_TRUE(records.front().recall_span.has_value());
  std::vector<BenchRecord> reversed(records.rbegin(), records.rend());
  if (reversed.front().avg_vocab_size != reversed.back().avg_vocab_size) EXPECT_FALSE(sweep_is_monotone(reversed));

  std::ostringstream csv;
  write_sweep_csv(csv, records);
  std::istringstream in(csv.str());
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  EXPECT_EQ(header, "selector,param,avg_vocab_size,recall_sentence,recall_span");
  EXPECT_EQ(first.rfind("nvs,0.99,", 0), 0u);
}

TEST(Sweep, AlignMonotone) {
  std::vector<std::vector<TranslationEntry>> rows(8);
  rows[4] = {{5, 0.5}, {6, 0.3}, {7, 0.2}};
  rows[5] = {{7, 0.6}, {6, 0.4}};
  TranslationLexicon lex(rows, 3);
  std::vector<EvalItem> items{item({5, 7}), item({6})};
  items[1].source = {5};
  std::vector<std::size_t> ks{1, 2, 3};
  auto records = sweep_align(lex, items, ks);
  EXPECT_TRUE(sweep_is_monotone(records));
  EXPECT_DOUBLE_EQ(records[0].recall_sentence, (50.0 + 0.0) / 2);
  EXPECT_DOUBLE_EQ(records[1].recall_sentence, (50.0 + 100.0) / 2);
  EXPECT_DOUBLE_EQ(records[2].recall_sentence, 100.0);
  EXPECT_FALSE(records[0].recall_span.has_value());
}

class EvalTsv : public ::testing::Test {
 protected:
  std::filesystem::path path = std::filesystem::temp_directory_path() / "shortlex_eval_test.tsv";
  void TearDown() override { std::filesystem::remove(path); }
};

TEST_F(EvalTsv, RoundTripWithSpans) {
  std::vector<EvalText> items(2);
  items[0].source = {"a</w>", "b</w>"};
  items[0].reference = {"x</w>"};
  items[1].source = {"c</w>", "d</w>", "e</w>"};
  items[1].reference = {"y</w>", "z</w>"};
  items[1].source_span = TokenSpan{1, 3};
  items[1].reference_span = TokenSpan{0, 1};
  write_eval_tsv(path, items);
  auto back = read_eval_tsv(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].source, items[0].source);
  EXPECT_FALSE(back[0].source_span.has_value());
  EXPECT_EQ(back[1].source_span, items[1].source_span);
  EXPECT_EQ(back[1].reference_span, items[1].reference_span);
}

TEST_F(EvalTsv, BadSpansAreFormatErrors) {
  for (const char* line : {"a b\tx\t0:3\t0:1", "a b\tx\t1:1\t0:1", "a b\tx\tfoo\t0:1", "a b\tx\t0:1"}) {
    std::vector<std::string> lines{line};
    write_lines(path, lines);
    try {
      read_eval_tsv(path);
      ADD_FAILURE() << "accepted: " << line;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kFormat) << line;
    }
  }
}

TEST(WordRuns, GroupsSubwordsByMarker) {
  std::vector<std::string> toks{"ab", "c</w>", "d</w>", "e"};
  auto vocab = Vocabulary::from_tokens(toks);
  auto ids = vocab.encode(toks);
  auto runs = word_runs(ids, vocab);
  ASSERT_EQ(runs.size(), 3u);
  EXPECT_EQ(runs[0], (TokenSpan{0, 2}));
  EXPECT_EQ(runs[1], (TokenSpan{2, 3}));
  EXPECT_EQ(runs[2], (TokenSpan{3, 4}));
}

TEST(ContextCompare, FlagsAreConsistent) {
  std::vector<std::string> toks{"a</w>", "b</w>", "c</w>", "x</w>", "y</w>"};
  auto vocab = Vocabulary::from_tokens(toks);
  ModelConfig config;
  config.src_vocab = vocab.size();
  config.tgt_vocab = vocab.size();
  config.d_model = 8;
  config.heads = 2;
  config.ffn = 16;
  config.encoder_layers = 1;
  config.decoder_layers = 1;
  auto params = ModelParams::initialize(config, 5);
  InferenceModel<double> model(params);
  std::vector<EvalItem> items;
  for (int s = 0; s < 4; ++s) {
    EvalItem it;
    it.source = {4, static_cast<TokenId>(5 + s % 2), 6};
    it.reference = {7, 8};
    it.source_span = TokenSpan{1, 2};
    it.reference_span = TokenSpan{static_cast<std::size_t>(s % 2), static_cast<std::size_t>(s % 2 + 1)};
    items.push_back(it);
  }
  std::vector<double> lambdas{0.9, 0.99, 0.0};
  auto out = context_compare(model, vocab, items, lambdas);
  ASSERT_EQ(out.size(), 3u);
  for (const auto& s : out) {
    for (const auto& f : s.flags) {
      EXPECT_EQ(f.exclusive_contextual, f.all_contextual && !f.all_noncontextual);
      EXPECT_EQ(f.exclusive_noncontextual, f.all_noncontextual && !f.all_contextual);
    }
    EXPECT_LE(s.excl_contextual, s.all_contextual);
  }
  // Selecting everything leaves nothing exclusive.
  EXPECT_DOUBLE_EQ(out[2].all_contextual, 100.0);
  EXPECT_DOUBLE_EQ(out[2].all_noncontextual, 100.0);
  std::ostringstream report;
  write_context_report(report, out);
  EXPECT_NE(report.str().find("All excl"), std::string::npos);

  items[0].reference_span.reset();
  EXPECT_THROW(context_compare(model, vocab, items, lambdas), Error);
}

}  // namespace
}  // namespace shortlex
