// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shortlex/corpus.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

namespace shortlex {
namespace {

namespace fs = std::filesystem;

std::vector<std::string> toks(std::initializer_list<const char*> xs) {
  return {xs.begin(), xs.end()};
}

fs::path temp_path(const std::string& name) {
  auto dir = fs::temp_directory_path() / "shortlex_corpus_test";
  fs::create_directories(dir);
  return dir / name;
}

TEST(Tokenize, Rules) {
  EXPECT_EQ(tokenize("Hello, world"), toks({"hello", ",", "world"}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_EQ(tokenize("a  b"), toks({"a", "b"}));
  EXPECT_EQ(tokenize("a  b"), tokenize("a  b"));
}

TEST(Vocabulary, SpecialsAndInverse) {
  Vocabulary v;
  EXPECT_EQ(v.size(), 4u);
  EXPECT_EQ(v.lookup("<pad>"), kPadId);
  EXPECT_EQ(v.lookup("<eos>"), kEosId);
  TokenId x = v.add("x");
  EXPECT_EQ(v.add("x"), x);
  EXPECT_EQ(v.token(x), "x");
  EXPECT_EQ(v.lookup("never-seen"), kUnkId);
  for (TokenId id = 0; id < static_cast<TokenId>(v.size()); ++id) EXPECT_EQ(v.lookup(v.token(id)), id);
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  auto corpus = std::vector<std::vector<std::string>>{toks({"b", "a", "b"}), toks({"c", "b"})};
  Vocabulary v = build_vocabulary(corpus);
  EXPECT_EQ(v.token(4), "b");
  auto p = temp_path("vocab.txt");
  v.save(p);
  Vocabulary w = Vocabulary::load(p);
  EXPECT_EQ(v.tokens(), w.tokens());
}

TEST(Vocabulary, LoadRejectsMissingSpecials) {
  auto p = temp_path("bad_vocab.txt");
  std::ofstream(p) << "a\nb\n";
  EXPECT_THROW(Vocabulary::load(p), Error);
}

TEST(Bpe, FirstMergeTieBreak) {
  auto corpus = std::vector<std::vector<std::string>>{toks({"low", "low", "lower"})};
  BpeModel m = bpe_learn(corpus, 1);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m.merges()[0], (MergePair{"l", "o"}));
}

TEST(Bpe, RepeatedWord) {
  auto corpus = std::vector<std::vector<std::string>>{toks({"aa", "aa", "aa"})};
  BpeModel m = bpe_learn(corpus, 1);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m.merges()[0].left, "a");
  EXPECT_EQ(m.merges()[0].right.substr(0, 1), "a");
}

TEST(Bpe, ZeroMergesIsCharacterLevel) {
  auto corpus = std::vector<std::vector<std::string>>{toks({"abc"})};
  BpeModel m = bpe_learn(corpus, 0);
  EXPECT_EQ(m.size(), 0u);
  EXPECT_EQ(m.apply("abc"), toks({"a", "b", "c</w>"}));
}

TEST(Bpe, ApplySingleMerge) {
  BpeModel m(std::vector<MergePair>{{"l", "o"}});
  EXPECT_EQ(m.apply("low"), toks({"lo", "w</w>"}));
}

TEST(Bpe, RoundTripAndDeterminism) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> len(1, 8), ch(0, 5);
  std::vector<std::vector<std::string>> corpus(30);
  for (auto& s : corpus) {
    for (int w = 0; w < 6; ++w) {
      std::string word;
      for (int i = len(rng); i > 0; --i) word += static_cast<char>('a' + ch(rng));
      s.push_back(word);
    }
  }
  BpeModel a = bpe_learn(corpus, 40);
  BpeModel b = bpe_learn(corpus, 40);
  EXPECT_EQ(a.merges(), b.merges());
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& mp : a.merges()) EXPECT_TRUE(seen.insert({mp.left, mp.right}).second);
  for (const auto& s : corpus) {
    for (const auto& w : s) {
      auto sub = a.apply(w);
      EXPECT_EQ(strip_markers(sub), w);
    }
  }
  auto p = temp_path("merges.txt");
  a.save(p);
  std::ifstream in(p);
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first, "#shortlex-bpe v1");
  EXPECT_EQ(BpeModel::load(p).merges(), a.merges());
}

TEST(Bpe, Utf8CharactersStayWhole) {
  BpeModel m;
  auto sub = m.apply("ün");
  ASSERT_EQ(sub.size(), 2u);
  EXPECT_EQ(sub[0], "ü");
}

std::vector<std::string> n_tokens(std::size_t n, const std::string& prefix) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

TEST(Clean, Rules) {
  std::vector<TextPair> pairs{
      {n_tokens(10, "s"), n_tokens(21, "t")},
      {n_tokens(5, "x"), n_tokens(5, "x")},
      {n_tokens(101, "s"), n_tokens(50, "t")},
      {{}, n_tokens(3, "t")},
      {n_tokens(10, "s"), n_tokens(12, "t")},
  };
  auto r = clean_pairs(pairs);
  ASSERT_EQ(r.rejected.size(), 4u);
  EXPECT_EQ(r.rejected[0].rule, CleanRule::kRatio);
  EXPECT_EQ(r.rejected[1].rule, CleanRule::kOverlap);
  EXPECT_EQ(r.rejected[2].rule, CleanRule::kLength);
  EXPECT_EQ(r.rejected[3].rule, CleanRule::kEmpty);
  EXPECT_EQ(r.kept, std::vector<std::size_t>{4});
}

TEST(Clean, KeepsPairsWithinMargins) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> len(1, 60);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t a = len(rng);
    std::size_t b = std::max<std::size_t>(1, static_cast<std::size_t>(a * 1.2));
    TextPair p{n_tokens(a, "s"), n_tokens(b, "t")};
    if (a > 0) p.target[0] = p.source[0];
    double overlap = token_overlap(p.source, p.target);
    if (overlap >= 0.69) continue;
    auto r = clean_pairs(std::vector<TextPair>{p});
    EXPECT_EQ(r.kept.size(), 1u) << a << " " << b;
  }
}

TEST(Clean, OverlapIsMinNormalized) {
  EXPECT_DOUBLE_EQ(token_overlap(toks({"a", "b"}), toks({"a", "c", "d", "e"})), 0.5);
}

TEST(Bow, Examples) {
  auto b = extract_bow(std::vector<TokenId>{5, 7, 5, 3}, 10);
  EXPECT_EQ(b.positives, 3u);
  EXPECT_TRUE(b.contains(3));
  EXPECT_TRUE(b.contains(5));
  EXPECT_TRUE(b.contains(7));
  EXPECT_FALSE(b.contains(6));
  EXPECT_EQ(extract_bow(std::vector<TokenId>{3}, 4).positives, 1u);
  EXPECT_EQ(extract_bow(std::vector<TokenId>{9, 9, 9, 9, 3}, 10).positives, 2u);
}

TEST(Bow, PositivesEqualUniqueTargets) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> id(4, 30), len(0, 12);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<TokenId> t;
    for (int i = len(rng); i > 0; --i) t.push_back(id(rng));
    t.push_back(kEosId);
    auto b = extract_bow(t, 31);
    EXPECT_LE(b.positives, t.size());
    EXPECT_EQ(b.positives, std::set<TokenId>(t.begin(), t.end()).size());
  }
}

TEST(Parallel, ReadAndMismatch) {
  auto s = temp_path("s.txt"), t = temp_path("t.txt"), u = temp_path("u.txt");
  std::ofstream(s) << "a b\nc\n";
  std::ofstream(t) << "x\ny z\n";
  std::ofstream(u) << "x\n";
  auto pairs = read_parallel(s, t);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[1].target, toks({"y", "z"}));
  try {
    read_parallel(s, u);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
  }
  EXPECT_THROW(read_lines(temp_path("missing.txt")), Error);
}

TEST(Parallel, EncodeAppendsEos) {
  Vocabulary v = Vocabulary::from_tokens(toks({"a", "x"}));
  auto p = make_sentence_pair(v, toks({"a"}), toks({"x", "q"}));
  EXPECT_EQ(p.source, (std::vector<TokenId>{4}));
  EXPECT_EQ(p.target, (std::vector<TokenId>{5, kUnkId, kEosId}));
}

}  // namespace
}  // namespace shortlex
