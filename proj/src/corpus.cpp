// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shortlex/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <tuple>

#include "shortlex/error.hpp"

namespace shortlex {

namespace {

constexpr std::string_view kSpecialTokens[kNumSpecials] = {"<pad>", "<unk>", "<bos>", "<eos>"};
constexpr std::string_view kMergesHeader = "#shortlex-bpe v1";

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_ascii_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

// Splits a string into UTF-8 characters; malformed bytes become single units.
std::vector<std::string> utf8_chars(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if (c >= 0xF0) len = 4;
    else if (c >= 0xE0) len = 3;
    else if (c >= 0xC0) len = 2;
    len = std::min(len, s.size() - i);
    std::size_t j = 1;
    while (j < len && (static_cast<unsigned char>(s[i + j]) & 0xC0) == 0x80) ++j;
    out.emplace_back(s.substr(i, j));
    i += j;
  }
  return out;
}

std::string pair_key(std::string_view left, std::string_view right) {
  std::string key;
  key.reserve(left.size() + right.size() + 1);
  key.append(left);
  key.push_back('\x1f');
  key.append(right);
  return key;
}

void merge_in_place(std::vector<std::string>& symbols, const std::string& left,
                    const std::string& right) {
  std::vector<std::string> out;
  out.reserve(symbols.size());
  for (std::size_t i = 0; i < symbols.size();) {
    if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
      out.push_back(left + right);
      i += 2;
    } else {
      out.push_back(std::move(symbols[i]));
      ++i;
    }
  }
  symbols = std::move(out);
}

std::vector<std::string> initial_symbols(std::string_view word) {
  auto chars = utf8_chars(word);
  if (!chars.empty()) chars.back().append(kEndOfWord);
  return chars;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (is_space(c)) {
      flush();
    } else if (is_ascii_punct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  flush();
  return out;
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string join(std::span<const std::string> parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

std::string strip_markers(std::span<const std::string> subwords) {
  std::string out;
  for (const auto& sw : subwords) {
    if (sw.size() >= kEndOfWord.size() &&
        sw.compare(sw.size() - kEndOfWord.size(), kEndOfWord.size(), kEndOfWord) == 0) {
      out.append(sw, 0, sw.size() - kEndOfWord.size());
      out.push_back(' ');
    } else {
      out.append(sw);
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() {
  for (auto s : kSpecialTokens) add(std::string(s));
}

Vocabulary Vocabulary::from_tokens(std::span<const std::string> tokens) {
  Vocabulary v;
  for (const auto& t : tokens) v.add(t);
  return v;
}

TokenId Vocabulary::add(const std::string& token) {
  require(!token.empty(), ErrorKind::kInvalidInput, "empty vocabulary token");
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  auto id = static_cast<TokenId>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::lookup(std::string_view token) const { return find(token).value_or(kUnkId); }

const std::string& Vocabulary::token(TokenId id) const {
  require(id >= 0 && static_cast<std::size_t>(id) < tokens_.size(), ErrorKind::kInvalidInput,
          "token id " + std::to_string(id) + " out of range " + std::to_string(tokens_.size()));
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<TokenId> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(lookup(t));
  return out;
}

std::vector<std::string> Vocabulary::decode(std::span<const TokenId> ids, bool skip_specials) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId id : ids) {
    if (skip_specials && is_special(id)) continue;
    out.push_back(token(id));
  }
  return out;
}

bool Vocabulary::ends_word(TokenId id) const {
  const std::string& t = token(id);
  return t.size() >= kEndOfWord.size() &&
         t.compare(t.size() - kEndOfWord.size(), kEndOfWord.size(), kEndOfWord) == 0;
}

void Vocabulary::save(const std::filesystem::path& path) const { write_lines(path, tokens_); }

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  auto lines = read_lines(path);
  require(lines.size() >= kNumSpecials, ErrorKind::kFormat,
          path.string() + ": vocabulary shorter than the reserved tokens");
  for (std::size_t i = 0; i < kNumSpecials; ++i) {
    require(lines[i] == kSpecialTokens[i], ErrorKind::kFormat,
            path.string() + ": line " + std::to_string(i + 1) + " must be " +
                std::string(kSpecialTokens[i]));
  }
  Vocabulary v;
  for (std::size_t i = kNumSpecials; i < lines.size(); ++i) {
    require(!lines[i].empty(), ErrorKind::kFormat,
            path.string() + ": empty token on line " + std::to_string(i + 1));
    require(!v.find(lines[i]).has_value(), ErrorKind::kFormat,
            path.string() + ": duplicate token '" + lines[i] + "'");
    v.add(lines[i]);
  }
  return v;
}

Vocabulary build_vocabulary(std::span<const std::vector<std::string>> corpus) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& sentence : corpus) {
    for (const auto& t : sentence) ++counts[t];
  }
  std::vector<std::pair<std::string, std::size_t>> ordered(counts.begin(), counts.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  for (const auto& [tok, n] : ordered) v.add(tok);
  return v;
}

// ---------------------------------------------------------------------------
// BPE

BpeModel::BpeModel(std::vector<MergePair> merges) : merges_(std::move(merges)) {
  for (std::size_t i = 0; i < merges_.size(); ++i) {
    bool inserted = rank_.emplace(pair_key(merges_[i].left, merges_[i].right), i).second;
    require(inserted, ErrorKind::kFormat,
            "duplicate merge pair '" + merges_[i].left + " " + merges_[i].right + "'");
  }
}

std::vector<std::string> BpeModel::apply(std::string_view word) const {
  auto symbols = initial_symbols(word);
  while (symbols.size() > 1) {
    std::size_t best_rank = merges_.size();
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      auto it = rank_.find(pair_key(symbols[i], symbols[i + 1]));
      if (it != rank_.end() && it->second < best_rank) best_rank = it->second;
    }
    if (best_rank == merges_.size()) break;
    merge_in_place(symbols, merges_[best_rank].left, merges_[best_rank].right);
  }
  return symbols;
}

std::vector<std::string> BpeModel::apply_sentence(std::span<const std::string> words) const {
  std::vector<std::string> out;
  std::unordered_map<std::string, std::vector<std::string>> cache;
  for (const auto& w : words) {
    auto it = cache.find(w);
    if (it == cache.end()) it = cache.emplace(w, apply(w)).first;
    out.insert(out.end(), it->second.begin(), it->second.end());
  }
  return out;
}

void BpeModel::save(const std::filesystem::path& path) const {
  std::vector<std::string> lines;
  lines.reserve(merges_.size() + 1);
  lines.emplace_back(kMergesHeader);
  for (const auto& m : merges_) lines.push_back(m.left + " " + m.right);
  write_lines(path, lines);
}

BpeModel BpeModel::load(const std::filesystem::path& path) {
  auto lines = read_lines(path);
  require(!lines.empty() && lines[0] == kMergesHeader, ErrorKind::kFormat,
          path.string() + ": missing '" + std::string(kMergesHeader) + "' header");
  std::vector<MergePair> merges;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto parts = split_whitespace(lines[i]);
    require(parts.size() == 2, ErrorKind::kFormat,
            path.string() + ": line " + std::to_string(i + 1) + " is not a 'left right' pair");
    merges.push_back({parts[0], parts[1]});
  }
  return BpeModel(std::move(merges));
}

BpeModel bpe_learn(std::span<const std::vector<std::string>> corpus, std::size_t merges) {
  std::map<std::string, std::size_t> word_counts;
  for (const auto& sentence : corpus) {
    for (const auto& w : sentence) ++word_counts[w];
  }
  struct WordType {
    std::vector<std::string> symbols;
    std::size_t count;
  };
  std::vector<WordType> words;
  words.reserve(word_counts.size());
  for (const auto& [w, n] : word_counts) words.push_back({initial_symbols(w), n});

  std::vector<MergePair> learned;
  learned.reserve(merges);
  for (std::size_t m = 0; m < merges; ++m) {
    std::map<std::pair<std::string, std::string>, std::size_t> pair_counts;
    for (const auto& wt : words) {
      for (std::size_t i = 0; i + 1 < wt.symbols.size(); ++i) {
        pair_counts[{wt.symbols[i], wt.symbols[i + 1]}] += wt.count;
      }
    }
    if (pair_counts.empty()) break;
    // std::map iterates in lexicographic order, so the first maximum wins ties.
    auto best = pair_counts.begin();
    for (auto it = pair_counts.begin(); it != pair_counts.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    MergePair mp{best->first.first, best->first.second};
    for (auto& wt : words) merge_in_place(wt.symbols, mp.left, mp.right);
    learned.push_back(std::move(mp));
  }
  return BpeModel(std::move(learned));
}

// ---------------------------------------------------------------------------
// Cleaning

const char* to_string(CleanRule rule) {
  switch (rule) {
    case CleanRule::kEmpty: return "empty";
    case CleanRule::kLength: return "length";
    case CleanRule::kRatio: return "ratio";
    case CleanRule::kOverlap: return "overlap";
  }
  return "unknown";
}

double token_overlap(std::span<const std::string> a, std::span<const std::string> b) {
  std::set<std::string_view> ua(a.begin(), a.end());
  std::set<std::string_view> ub(b.begin(), b.end());
  if (ua.empty() || ub.empty()) return 0.0;
  std::size_t common = 0;
  for (auto t : ua) common += ub.count(t);
  return static_cast<double>(common) / static_cast<double>(std::min(ua.size(), ub.size()));
}

CleanResult clean_pairs(std::span<const TextPair> pairs, const CleanOptions& options) {
  CleanResult result;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    std::size_t ls = p.source.size();
    std::size_t lt = p.target.size();
    std::optional<CleanRule> rule;
    if (ls == 0 || lt == 0) {
      rule = CleanRule::kEmpty;
    } else if (ls > options.max_len || lt > options.max_len) {
      rule = CleanRule::kLength;
    } else if (static_cast<double>(std::max(ls, lt)) / static_cast<double>(std::min(ls, lt)) >
               options.max_ratio) {
      rule = CleanRule::kRatio;
    } else if (token_overlap(p.source, p.target) > options.max_overlap) {
      rule = CleanRule::kOverlap;
    }
    if (rule) {
      result.rejected.push_back({i, *rule});
    } else {
      result.kept.push_back(i);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Pairs and bags of words

SentencePair make_sentence_pair(const Vocabulary& vocab, std::span<const std::string> source,
                                std::span<const std::string> target) {
  require(!source.empty() && !target.empty(), ErrorKind::kInvalidInput,
          "sentence pair needs tokens on both sides");
  SentencePair p;
  p.source = vocab.encode(source);
  p.target = vocab.encode(target);
  p.target.push_back(kEosId);
  return p;
}

BowTarget extract_bow(std::span<const TokenId> target, std::size_t vocab_size) {
  BowTarget bow;
  bow.bits.assign(vocab_size, 0);
  for (TokenId id : target) {
    require(id >= 0 && static_cast<std::size_t>(id) < vocab_size, ErrorKind::kInvalidInput,
            "target id " + std::to_string(id) + " outside vocabulary of size " +
                std::to_string(vocab_size));
    if (id == kPadId || id == kBosId) continue;
    auto& bit = bow.bits[static_cast<std::size_t>(id)];
    if (bit == 0) {
      bit = 1;
      ++bow.positives;
    }
  }
  return bow;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::kIo, "cannot open '" + path.string() + "' for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_lines(const std::filesystem::path& path, std::span<const std::string> lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorKind::kIo, "cannot open '" + path.string() + "' for writing");
  for (const auto& l : lines) out << l << '\n';
  require(out.good(), ErrorKind::kIo, "write to '" + path.string() + "' failed");
}

std::vector<TextPair> read_parallel(const std::filesystem::path& source,
                                    const std::filesystem::path& target) {
  auto src = read_lines(source);
  auto tgt = read_lines(target);
  require(src.size() == tgt.size(), ErrorKind::kFormat,
          "parallel files differ in line count: '" + source.string() + "' has " +
              std::to_string(src.size()) + ", '" + target.string() + "' has " +
              std::to_string(tgt.size()));
  std::vector<TextPair> pairs(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    pairs[i].source = split_whitespace(src[i]);
    pairs[i].target = split_whitespace(tgt[i]);
  }
  return pairs;
}

std::vector<SentencePair> encode_parallel(const Vocabulary& vocab, std::span<const TextPair> pairs) {
  std::vector<SentencePair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(make_sentence_pair(vocab, p.source, p.target));
  return out;
}

}  // namespace shortlex
