// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shortlex/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace shortlex {

std::string SelectorTag::to_string() const {
  char buf[64];
  switch (kind) {
    case Kind::kNone: return "none";
    case Kind::kAlign: std::snprintf(buf, sizeof(buf), "align(%g)", param); return buf;
    case Kind::kNvs: std::snprintf(buf, sizeof(buf), "nvs(%g)", param); return buf;
  }
  return "unknown";
}

BagOfWords::BagOfWords(std::vector<TokenId> ids, SelectorTag tag, std::vector<double> scores)
    : tag_(tag) {
  for (TokenId s = 0; s < static_cast<TokenId>(kNumSpecials); ++s) ids.push_back(s);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  require(ids.front() >= 0, ErrorKind::kInvalidInput, "negative token id in bag of words");
  if (!scores.empty()) {
    require(static_cast<std::size_t>(ids.back()) < scores.size(), ErrorKind::kShape,
            "bag of words scores shorter than the selected ids");
    scores_.reserve(ids.size());
    for (TokenId id : ids) scores_.push_back(scores[static_cast<std::size_t>(id)]);
  }
  ids_ = std::move(ids);
}

BagOfWords BagOfWords::full(std::size_t vocab_size) {
  std::vector<TokenId> ids(vocab_size);
  for (std::size_t i = 0; i < vocab_size; ++i) ids[i] = static_cast<TokenId>(i);
  return BagOfWords(std::move(ids), SelectorTag{});
}

bool BagOfWords::contains(TokenId id) const { return std::binary_search(ids_.begin(), ids_.end(), id); }

std::optional<double> BagOfWords::score(TokenId id) const {
  if (scores_.empty()) return std::nullopt;
  auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
  if (it == ids_.end() || *it != id) return std::nullopt;
  return scores_[static_cast<std::size_t>(it - ids_.begin())];
}

bool BagOfWords::is_subset_of(const BagOfWords& other) const {
  return std::includes(other.ids_.begin(), other.ids_.end(), ids_.begin(), ids_.end());
}

BagOfWords select_align(const TranslationLexicon& lexicon, std::span<const TokenId> source, std::size_t k,
                        std::size_t* unknown_sources) {
  require(k >= 1, ErrorKind::kInvalidInput, "align selector needs k >= 1");
  require(k <= lexicon.k_max(), ErrorKind::kInvalidInput,
          "k=" + std::to_string(k) + " exceeds the lexicon's K_max=" + std::to_string(lexicon.k_max()));
  std::vector<TokenId> ids;
  std::size_t unknown = 0;
  for (TokenId s : source) {
    auto entries = lexicon.entries(s);
    if (entries.empty()) {
      if (!is_special(s)) ++unknown;
      continue;
    }
    std::size_t n = std::min(k, entries.size());
    for (std::size_t i = 0; i < n; ++i) ids.push_back(entries[i].target);
  }
  if (unknown_sources != nullptr) *unknown_sources = unknown;
  return BagOfWords(std::move(ids), SelectorTag{SelectorTag::Kind::kAlign, static_cast<double>(k)});
}

namespace {

void check_lambda(double lambda) {
  require(lambda >= 0.0 && lambda < 1.0, ErrorKind::kInvalidInput, "lambda must lie in [0, 1)");
}

}  // namespace

BagOfWords select_nvs(std::span<const double> z, double lambda) {
  check_lambda(lambda);
  std::vector<TokenId> ids;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] > lambda) ids.push_back(static_cast<TokenId>(i));
  }
  return BagOfWords(std::move(ids), SelectorTag{SelectorTag::Kind::kNvs, lambda},
                    std::vector<double>(z.begin(), z.end()));
}

BagOfWords select_nvs_logits(std::span<const double> logits, double lambda) {
  check_lambda(lambda);
  const double cut =
      lambda == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(lambda) - std::log1p(-lambda);
  std::vector<TokenId> ids;
  std::vector<double> z(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    z[i] = sigmoid(logits[i]);
    if (logits[i] > cut) ids.push_back(static_cast<TokenId>(i));
  }
  return BagOfWords(std::move(ids), SelectorTag{SelectorTag::Kind::kNvs, lambda}, std::move(z));
}

VocabMapping build_mapping(const BagOfWords& bow, std::size_t vocab_size) {
  require(bow.size() > 0, ErrorKind::kInvalidInput, "empty bag of words");
  require(static_cast<std::size_t>(bow.ids().back()) < vocab_size, ErrorKind::kInvalidInput,
          "bag of words holds an id outside the vocabulary");
  VocabMapping m;
  m.forward.assign(vocab_size, -1);
  m.inverse = bow.ids();
  for (std::size_t r = 0; r < m.inverse.size(); ++r) {
    m.forward[static_cast<std::size_t>(m.inverse[r])] = static_cast<std::int32_t>(r);
  }
  return m;
}

ReducedProjection restrict_projection(const ModelParams& params, const VocabMapping& mapping) {
  const Matrix& w = params.at(params.layout().out_w);
  const Matrix& b = params.at(params.layout().out_b);
  require(mapping.full_size() == w.rows(), ErrorKind::kShape, "mapping and projection differ in size");
  ReducedProjection out{Matrix(mapping.reduced_size(), w.cols()), Matrix(1, mapping.reduced_size())};
  for (std::size_t r = 0; r < mapping.reduced_size(); ++r) {
    auto id = static_cast<std::size_t>(mapping.inverse[r]);
    auto src = w.row(id);
    std::copy(src.begin(), src.end(), out.w.row(r).begin());
    out.b(0, r) = b(0, id);
  }
  return out;
}

template <typename Real>
ReducedProjectionT<Real> restrict_projection(const InferenceModel<Real>& model, const VocabMapping& mapping) {
  const auto& w = model.output_weight();
  const auto& b = model.output_bias();
  require(mapping.full_size() == static_cast<std::size_t>(w.rows()), ErrorKind::kShape,
          "mapping and projection differ in size");
  const auto n = static_cast<Eigen::Index>(mapping.reduced_size());
  ReducedProjectionT<Real> out;
  out.w.resize(n, w.cols());
  out.b.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    Eigen::Index id = mapping.inverse[static_cast<std::size_t>(r)];
    out.w.row(r) = w.row(id);
    out.b(r) = b(id);
  }
  return out;
}

template ReducedProjectionT<float> restrict_projection(const InferenceModel<float>&, const VocabMapping&);
template ReducedProjectionT<double> restrict_projection(const InferenceModel<double>&, const VocabMapping&);

std::string format_bow(const BagOfWords& bow, const Vocabulary& vocab) {
  std::vector<std::string> tokens;
  tokens.reserve(bow.size());
  for (TokenId id : bow.ids()) tokens.push_back(vocab.token(id));
  std::sort(tokens.begin(), tokens.end());
  return join(tokens, "\t");
}

void write_bow_dump(const std::filesystem::path& path, std::span<const BagOfWords> bows, const Vocabulary& vocab) {
  std::vector<std::string> lines;
  lines.reserve(bows.size());
  for (const auto& b : bows) lines.push_back(format_bow(b, vocab));
  write_lines(path, lines);
}

}  // namespace shortlex
