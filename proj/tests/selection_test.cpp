// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shortlex/selection.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

namespace shortlex {
namespace {

const std::vector<TokenId> kSpecials{kPadId, kUnkId, kBosId, kEosId};

std::vector<TokenId> with_specials(std::vector<TokenId> ids) {
  ids.insert(ids.begin(), kSpecials.begin(), kSpecials.end());
  return ids;
}

// a=4 b=5 ; x=6 y=7 z=8
TranslationLexicon toy_lexicon() {
  std::vector<std::vector<TranslationEntry>> rows(6);
  rows[4] = {{6, 0.6}, {7, 0.4}};
  rows[5] = {{7, 0.7}, {8, 0.3}};
  return TranslationLexicon(rows, 2);
}

TEST(SelectAlign, UnionOfTopK) {
  auto lex = toy_lexicon();
  std::vector<TokenId> src{4, 5};
  EXPECT_EQ(select_align(lex, src, 1).ids(), with_specials({6, 7}));
  EXPECT_EQ(select_align(lex, src, 2).ids(), with_specials({6, 7, 8}));
  EXPECT_TRUE(select_align(lex, src, 1).is_subset_of(select_align(lex, src, 2)));
  EXPECT_EQ(select_align(lex, src, 1).tag().to_string(), "align(1)");
}

TEST(SelectAlign, UnknownSourceContributesNothing) {
  std::size_t unknown = 0;
  std::vector<TokenId> src{11};
  auto bow = select_align(toy_lexicon(), src, 1, &unknown);
  EXPECT_EQ(bow.ids(), kSpecials);
  EXPECT_EQ(unknown, 1u);
}

TEST(SelectAlign, KBounds) {
  std::vector<TokenId> src{4};
  EXPECT_THROW(select_align(toy_lexicon(), src, 3), Error);
  EXPECT_THROW(select_align(toy_lexicon(), src, 0), Error);
}

TEST(SelectNvs, Threshold) {
  std::vector<double> z{0.95, 0.3, 0.991};
  // Ids 0..2 are specials anyway; shift the example past them.
  std::vector<double> shifted{0, 0, 0, 0, 0.95, 0.3, 0.991};
  EXPECT_EQ(select_nvs(shifted, 0.9).ids(), with_specials({4, 6}));
  EXPECT_EQ(select_nvs(shifted, 0.99).ids(), with_specials({6}));
  std::vector<double> tie{0, 0, 0, 0, 0.5};
  EXPECT_EQ(select_nvs(tie, 0.5).ids(), kSpecials);  // strict inequality
  EXPECT_THROW(select_nvs(z, 1.0), Error);
  EXPECT_THROW(select_nvs(z, -0.1), Error);
  EXPECT_EQ(*select_nvs(shifted, 0.9).score(6), 0.991);
}

TEST(SelectNvs, LogitsAgreeWithProbabilities) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 4.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> logits(40), z(40);
    for (std::size_t i = 0; i < 40; ++i) {
      logits[i] = n(rng);
      z[i] = sigmoid(logits[i]);
    }
    for (double lambda : {0.5, 0.9, 0.1, 1e-3}) {
      EXPECT_EQ(select_nvs_logits(logits, lambda).ids(), select_nvs(z, lambda).ids());
    }
  }
  std::vector<double> extreme{-900, -900, -900, -900, -900, 5};
  EXPECT_EQ(select_nvs_logits(extreme, 0.0).size(), 6u);
}

TEST(SelectNvs, MonotoneInLambda) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> z(100);
  for (double& v : z) v = u(rng);
  std::vector<double> grid{0.99, 0.9, 0.5, 0.1, 0.01, 1e-3};
  for (std::size_t i = 1; i < grid.size(); ++i) {
    EXPECT_TRUE(select_nvs(z, grid[i - 1]).is_subset_of(select_nvs(z, grid[i])));
  }
}

TEST(BagOfWords, SpecialsAlwaysPresentAndSorted) {
  BagOfWords b({9, 7, 7, 5}, SelectorTag{});
  EXPECT_EQ(b.ids(), with_specials({5, 7, 9}));
  for (TokenId s : kSpecials) EXPECT_TRUE(b.contains(s));
  EXPECT_EQ(BagOfWords::full(10).size(), 10u);
}

TEST(Mapping, Examples) {
  BagOfWords b({7, 9}, SelectorTag{});
  auto m = build_mapping(b, 10);
  EXPECT_EQ(m.inverse, (std::vector<TokenId>{0, 1, 2, 3, 7, 9}));
  EXPECT_EQ(m.forward[7], 4);
  EXPECT_EQ(m.forward[9], 5);
  EXPECT_EQ(m.forward[8], -1);
  for (std::size_t r = 0; r < m.reduced_size(); ++r) EXPECT_EQ(m.forward[m.inverse[r]], static_cast<int>(r));
  auto id = build_mapping(BagOfWords::full(10), 10);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(id.forward[i], i);
  EXPECT_THROW(build_mapping(b, 8), Error);
}

ModelParams small_params(std::size_t vocab, std::uint64_t seed) {
  ModelConfig c;
  c.d_model = 8;
  c.encoder_layers = 1;
  c.decoder_layers = 1;
  c.heads = 2;
  c.ffn = 8;
  c.src_vocab = c.tgt_vocab = vocab;
  ModelParams p = ModelParams::initialize(c, seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 1);
  for (double& v : p.get("out.b").values()) v = n(rng);
  return p;
}

TEST(RestrictProjection, IdentityAndGather) {
  ModelParams p = small_params(12, 1);
  auto full = restrict_projection(p, build_mapping(BagOfWords::full(12), 12));
  EXPECT_EQ(full.w, p.get("out.w"));
  EXPECT_EQ(full.b, p.get("out.b"));
  auto red = restrict_projection(p, build_mapping(BagOfWords({10}, SelectorTag{}), 12));
  EXPECT_EQ(red.w.rows(), 5u);
  for (std::size_t c = 0; c < 8; ++c) EXPECT_EQ(red.w(4, c), p.get("out.w")(10, c));
}

TEST(RestrictProjection, ReducedSoftmaxExample) {
  // Logits (1, 2, 3) restricted to ids {0, 2}.
  auto r = softmax(std::vector<double>{1, 3});
  EXPECT_NEAR(r[0], 0.1192, 1e-4);
  EXPECT_NEAR(r[1], 0.8808, 1e-4);
}

TEST(RestrictProjection, EqualsMaskedFullSoftmax) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1);
  std::bernoulli_distribution keep(0.3);
  for (int trial = 0; trial < 100; ++trial) {
    ModelParams p = small_params(30, trial);
    std::vector<double> h(8);
    for (double& v : h) v = n(rng);
    std::vector<TokenId> ids;
    for (TokenId i = 4; i < 30; ++i) {
      if (keep(rng)) ids.push_back(i);
    }
    auto mapping = build_mapping(BagOfWords(ids, SelectorTag{}), 30);
    auto red = restrict_projection(p, mapping);
    const Matrix& W = p.get("out.w");
    const Matrix& b = p.get("out.b");
    std::vector<double> full(30), masked(30), reduced(mapping.reduced_size());
    for (std::size_t v = 0; v < 30; ++v) {
      full[v] = b(0, v);
      for (std::size_t c = 0; c < 8; ++c) full[v] += W(v, c) * h[c];
      masked[v] = mapping.forward[v] >= 0 ? full[v] : -std::numeric_limits<double>::infinity();
    }
    for (std::size_t r = 0; r < reduced.size(); ++r) {
      reduced[r] = red.b(0, r);
      for (std::size_t c = 0; c < 8; ++c) reduced[r] += red.w(r, c) * h[c];
    }
    auto pm = softmax(masked);
    auto pr = softmax(reduced);
    for (std::size_t r = 0; r < reduced.size(); ++r) EXPECT_NEAR(pr[r], pm[mapping.inverse[r]], 1e-6);
  }
}

TEST(BowDump, SortedTokensTabSeparated) {
  Vocabulary v = Vocabulary::from_tokens(std::vector<std::string>{"zeta", "alpha"});
  BagOfWords b({4, 5}, SelectorTag{});
  EXPECT_EQ(format_bow(b, v), "<bos>\t<eos>\t<pad>\t<unk>\talpha\tzeta");
  auto path = std::filesystem::temp_directory_path() / "shortlex_bow.txt";
  write_bow_dump(path, std::vector<BagOfWords>{b, b}, v);
  EXPECT_EQ(read_lines(path).size(), 2u);
}

}  // namespace
}  // namespace shortlex
