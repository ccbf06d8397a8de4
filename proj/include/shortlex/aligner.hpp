// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

// Word alignment by EM (IBM Model 1 with an exponential diagonal prior) and
// the top-k translation lexicons extracted from it.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "shortlex/corpus.hpp"

namespace shortlex {

struct AlignOptions {
  std::size_t iterations = 5;
  // 0 turns the prior off (plain Model 1).
  double diagonal_tension = 4.0;
  double prune_below = 1e-9;
  std::size_t threads = 1;
};

struct TranslationEntry {
  TokenId target = 0;
  double prob = 0.0;
  friend bool operator==(const TranslationEntry&, const TranslationEntry&) = default;
};

class AlignModel {
 public:
  AlignModel() = default;

  // Rows indexed by source id; each row sorted by target id.
  using Row = std::vector<TranslationEntry>;

  double prob(TokenId source, TokenId target) const;
  std::span<const TranslationEntry> row(TokenId source) const;
  std::size_t source_rows() const noexcept { return table_.size(); }
  double diagonal_tension() const noexcept { return diagonal_tension_; }
  // Corpus log-likelihood measured in each iteration's E-step.
  const std::vector<double>& log_likelihood() const noexcept { return log_likelihood_; }

  void save(const std::filesystem::path& path, const Vocabulary& vocab) const;
  static AlignModel load(const std::filesystem::path& path, const Vocabulary& vocab);

  friend bool operator==(const AlignModel&, const AlignModel&) = default;

 private:
  friend AlignModel em_train(std::span<const SentencePair>, const AlignOptions&);
  std::vector<Row> table_;
  double diagonal_tension_ = 0.0;
  std::vector<double> log_likelihood_;
};

// Trains source->target translation probabilities t(target | source). Special
// tokens (EOS included) are dropped from both sides before alignment. Throws
// kInvalidInput on an empty corpus or zero iterations.
AlignModel em_train(std::span<const SentencePair> pairs, const AlignOptions& options);

// Trains on base followed by `upsample` copies of the adaptation corpus.
AlignModel adapt_lexicon(std::span<const SentencePair> base, std::span<const SentencePair> adapt,
                         std::size_t upsample, const AlignOptions& options);

class TranslationLexicon {
 public:
  TranslationLexicon() = default;
  // Sorts every list by probability descending, ties by target id ascending.
  TranslationLexicon(std::vector<std::vector<TranslationEntry>> by_source, std::size_t k_max);

  std::span<const TranslationEntry> entries(TokenId source) const;
  std::size_t k_max() const noexcept { return k_max_; }
  std::size_t source_rows() const noexcept { return by_source_.size(); }
  // Total stored (target, probability) entries.
  std::size_t entry_count() const;

  TranslationLexicon truncated(std::size_t k) const;

  // TSV "source<TAB>target<TAB>probability", grouped by source, probabilities
  // with six decimals.
  void save(const std::filesystem::path& path, const Vocabulary& vocab) const;
  // K_max of a loaded lexicon is its longest list.
  static TranslationLexicon load(const std::filesystem::path& path, const Vocabulary& vocab);

 private:
  std::vector<std::vector<TranslationEntry>> by_source_;
  std::size_t k_max_ = 0;
};

TranslationLexicon extract_lexicon(const AlignModel& model, std::size_t k_max);

// Numbers stored by a dense top-k lexicon over a vocabulary of V sources.
inline std::uint64_t lexicon_float_count(std::uint64_t k, std::uint64_t vocab_size) {
  return k * vocab_size;
}

}  // namespace shortlex
