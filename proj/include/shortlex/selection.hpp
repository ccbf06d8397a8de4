// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

// Vocabulary selectors (none, alignment lexicon top-k, NVS threshold), the
// per-sentence id remapping, and the reduced output projection.

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shortlex/aligner.hpp"
#include "shortlex/corpus.hpp"
#include "shortlex/inference.hpp"
#include "shortlex/model.hpp"

namespace shortlex {

struct SelectorTag {
  enum class Kind { kNone, kAlign, kNvs };
  Kind kind = Kind::kNone;
  double param = 0.0;  // k for align, lambda for nvs

  // "none", "align(200)", "nvs(0.9)".
  std::string to_string() const;
  friend bool operator==(const SelectorTag&, const SelectorTag&) = default;
};

class BagOfWords {
 public:
  BagOfWords() = default;
  // Sorts, deduplicates and adds the four reserved ids. `scores`, when given,
  // is indexed by full-vocabulary id; only the selected entries are kept.
  BagOfWords(std::vector<TokenId> ids, SelectorTag tag, std::vector<double> scores = {});
  static BagOfWords full(std::size_t vocab_size);

  const std::vector<TokenId>& ids() const noexcept { return ids_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool contains(TokenId id) const;
  const SelectorTag& tag() const noexcept { return tag_; }
  // Score of a full-vocabulary id, when the selector produced scores.
  std::optional<double> score(TokenId id) const;

  bool is_subset_of(const BagOfWords& other) const;

 private:
  std::vector<TokenId> ids_;
  std::vector<double> scores_;  // parallel to ids_, or empty
  SelectorTag tag_;
};

// Union of the top-k lexicon targets of every source token. Source ids with no
// lexicon entries are counted in *unknown_sources. Throws kInvalidInput when
// k is 0 or exceeds the lexicon's K_max.
BagOfWords select_align(const TranslationLexicon& lexicon, std::span<const TokenId> source, std::size_t k,
                        std::size_t* unknown_sources = nullptr);

// {i : z_i > lambda} plus the reserved ids. Lambda must lie in [0, 1).
BagOfWords select_nvs(std::span<const double> z, double lambda);
// Same rule applied to pre-sigmoid logits: z_i > lambda iff logit_i > logit(lambda).
// Lambda = 0 keeps every id.
BagOfWords select_nvs_logits(std::span<const double> logits, double lambda);

struct VocabMapping {
  std::vector<std::int32_t> forward;  // full id -> reduced index, -1 if absent
  std::vector<TokenId> inverse;       // reduced index -> full id

  std::size_t reduced_size() const noexcept { return inverse.size(); }
  std::size_t full_size() const noexcept { return forward.size(); }
};

VocabMapping build_mapping(const BagOfWords& bow, std::size_t vocab_size);

// Rows of W and entries of b gathered by the mapping's inverse array.
struct ReducedProjection {
  Matrix w;
  Matrix b;
};
ReducedProjection restrict_projection(const ModelParams& params, const VocabMapping& mapping);

template <typename Real>
struct ReducedProjectionT {
  EigenRowMajor<Real> w;
  Eigen::Matrix<Real, 1, Eigen::Dynamic> b;
};
template <typename Real>
ReducedProjectionT<Real> restrict_projection(const InferenceModel<Real>& model, const VocabMapping& mapping);

// One line per sentence: the selected tokens, tab-separated, sorted by string.
std::string format_bow(const BagOfWords& bow, const Vocabulary& vocab);
void write_bow_dump(const std::filesystem::path& path, std::span<const BagOfWords> bows, const Vocabulary& vocab);

}  // namespace shortlex
