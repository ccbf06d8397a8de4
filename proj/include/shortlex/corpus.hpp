// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

// Text side of the pipeline: tokenization, byte-pair encoding, the id
// vocabulary, parallel-corpus cleaning and bag-of-words targets.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "shortlex/error.hpp"

namespace shortlex {

using TokenId = std::int32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr TokenId kBosId = 2;
inline constexpr TokenId kEosId = 3;
inline constexpr std::size_t kNumSpecials = 4;

inline constexpr std::string_view kEndOfWord = "</w>";

inline bool is_special(TokenId id) { return id >= 0 && id < static_cast<TokenId>(kNumSpecials); }

// Lowercases ASCII, splits on whitespace and splits ASCII punctuation into
// separate tokens. Non-ASCII bytes pass through untouched.
std::vector<std::string> tokenize(std::string_view text);

std::vector<std::string> split_whitespace(std::string_view text);
std::string join(std::span<const std::string> parts, std::string_view sep = " ");

// Concatenates subwords and turns end-of-word markers back into spaces.
std::string strip_markers(std::span<const std::string> subwords);

class Vocabulary {
 public:
  // Starts with the four reserved tokens <pad> <unk> <bos> <eos>.
  Vocabulary();

  // Tokens are appended in order after the specials; duplicates are ignored.
  static Vocabulary from_tokens(std::span<const std::string> tokens);

  TokenId add(const std::string& token);
  std::optional<TokenId> find(std::string_view token) const;
  // Unknown tokens map to kUnkId.
  TokenId lookup(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  std::vector<TokenId> encode(std::span<const std::string> tokens) const;
  std::vector<std::string> decode(std::span<const TokenId> ids, bool skip_specials = true) const;

  // True when the token closes a word (carries the end-of-word marker).
  bool ends_word(TokenId id) const;

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// Counts tokens over the corpus and assigns ids by descending frequency, ties
// broken by token string.
Vocabulary build_vocabulary(std::span<const std::vector<std::string>> corpus);

struct MergePair {
  std::string left;
  std::string right;
  friend bool operator==(const MergePair&, const MergePair&) = default;
};

class BpeModel {
 public:
  BpeModel() = default;
  explicit BpeModel(std::vector<MergePair> merges);

  const std::vector<MergePair>& merges() const noexcept { return merges_; }
  std::size_t size() const noexcept { return merges_.size(); }

  // Segments one word. The final subword carries the end-of-word marker.
  std::vector<std::string> apply(std::string_view word) const;
  std::vector<std::string> apply_sentence(std::span<const std::string> words) const;

  void save(const std::filesystem::path& path) const;
  static BpeModel load(const std::filesystem::path& path);

 private:
  std::vector<MergePair> merges_;
  std::unordered_map<std::string, std::size_t> rank_;
};

// Greedy merge learning over word types. Each iteration merges the most
// frequent adjacent pair; equal counts go to the lexicographically smallest
// (left, right). Stops early when no pair remains.
BpeModel bpe_learn(std::span<const std::vector<std::string>> corpus, std::size_t merges);

struct TextPair {
  std::vector<std::string> source;
  std::vector<std::string> target;
};

enum class CleanRule { kEmpty, kLength, kRatio, kOverlap };
const char* to_string(CleanRule rule);

struct CleanOptions {
  double max_ratio = 1.5;
  double max_overlap = 0.70;
  std::size_t max_len = 100;
};

struct Rejection {
  std::size_t index = 0;
  CleanRule rule = CleanRule::kEmpty;
};

struct CleanResult {
  std::vector<std::size_t> kept;
  std::vector<Rejection> rejected;
};

// |unique(a) ∩ unique(b)| / min(|unique(a)|, |unique(b)|).
double token_overlap(std::span<const std::string> a, std::span<const std::string> b);

// Rules are checked in the order empty, length, ratio, overlap; the first one
// that fires is logged.
CleanResult clean_pairs(std::span<const TextPair> pairs, const CleanOptions& options = {});

struct SentencePair {
  std::vector<TokenId> source;
  std::vector<TokenId> target;  // ends with kEosId
};

// Encodes both sides and appends EOS to the target.
SentencePair make_sentence_pair(const Vocabulary& vocab, std::span<const std::string> source,
                                std::span<const std::string> target);

struct BowTarget {
  std::vector<std::uint8_t> bits;
  std::size_t positives = 0;

  std::size_t vocab_size() const noexcept { return bits.size(); }
  bool contains(TokenId id) const { return bits.at(static_cast<std::size_t>(id)) != 0; }
};

// Marks every target id except PAD and BOS; EOS counts.
BowTarget extract_bow(std::span<const TokenId> target, std::size_t vocab_size);
inline BowTarget extract_bow(const SentencePair& pair, std::size_t vocab_size) {
  return extract_bow(pair.target, vocab_size);
}

std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, std::span<const std::string> lines);

// Reads two line-aligned files of space-separated tokens.
std::vector<TextPair> read_parallel(const std::filesystem::path& source,
                                    const std::filesystem::path& target);
std::vector<SentencePair> encode_parallel(const Vocabulary& vocab, std::span<const TextPair> pairs);

}  // namespace shortlex
