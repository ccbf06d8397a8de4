// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

// Generator for a small reversal-with-substitution translation task. Every
// source word has a fixed target word and the target is the mapped source in
// reverse order, with two twists:
//  - a sentence containing a trigger word translates some words to an
//    alternate target word (context-dependent choice);
//  - certain adjacent source word pairs ("idioms") translate to a single
//    target token, and are rare in the base training data.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "shortlex/bench.hpp"
#include "shortlex/corpus.hpp"

namespace shortlex {

struct SynthOptions {
  std::uint64_t seed = 17;
  std::size_t train_pairs = 20000;
  std::size_t valid_pairs = 500;
  std::size_t test_sentences = 500;
  std::size_t adapt_pairs = 300;
  std::size_t idiom_test_sentences = 300;
  std::size_t context_test_sentences = 300;
  std::size_t min_words = 3;
  std::size_t max_words = 10;
  double trigger_rate = 0.3;
  double idiom_rate = 0.015;  // share of base sentences with an idiom
  // Sampling weight of words that take part in idioms, relative to 1.
  double idiom_word_weight = 0.35;
};

class SynthTask {
 public:
  static constexpr std::size_t kPlainWords = 44;
  static constexpr std::size_t kTriggers = 4;
  static constexpr std::size_t kAlternates = 16;
  static constexpr std::size_t kIdioms = 8;

  SynthTask();

  const Vocabulary& vocab() const noexcept { return vocab_; }

  // Deterministic reference translation of a source word sequence.
  std::vector<std::string> translate(const std::vector<std::string>& source) const;
  // Same, also reporting for each source position the target position it
  // produced (an idiom's two words share one).
  std::vector<std::string> translate(const std::vector<std::string>& source,
                                     std::vector<std::size_t>& target_of) const;

  bool is_trigger(const std::string& word) const;
  bool has_alternate(const std::string& word) const;
  // Index of the idiom starting at source[i], or -1.
  int idiom_at(const std::vector<std::string>& source, std::size_t i) const;

  static std::string source_word(std::size_t i);
  static std::string trigger_word(std::size_t i);
  static std::string target_word(std::size_t i);
  static std::string alternate_word(std::size_t i);
  static std::string idiom_token(std::size_t i);

 private:
  Vocabulary vocab_;
};

struct SynthData {
  std::vector<TextPair> train;
  std::vector<TextPair> valid;
  std::vector<EvalText> test;
  std::vector<TextPair> adapt;         // every pair contains an idiom
  std::vector<EvalText> idiom_test;    // spans mark the idiom
  std::vector<EvalText> context_test;  // spans mark a word whose translation depends on a trigger
};

SynthData generate_synth(const SynthTask& task, const SynthOptions& options);

// Writes vocab.txt, {train,valid,adapt}.{src,tgt}, test.tsv, idiom_test.tsv
// and context_test.tsv under `dir`.
void write_synth(const std::filesystem::path& dir, const SynthTask& task, const SynthData& data);

}  // namespace shortlex
