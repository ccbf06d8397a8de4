// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

// Length-normalized beam search over a full or reduced output vocabulary, a
// per-sentence translator with stage timings, and the latency protocol.

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "shortlex/aligner.hpp"
#include "shortlex/inference.hpp"
#include "shortlex/selection.hpp"

namespace shortlex {

struct BeamConfig {
  std::size_t beam = 5;
  double alpha = 1.0;
  // Maximum output length is multiplier * source length + offset, unless
  // max_length is non-zero.
  std::size_t length_multiplier = 2;
  std::size_t length_offset = 10;
  std::size_t max_length = 0;

  std::size_t max_output_length(std::size_t source_length) const;
  void validate() const;
};

struct StageTimes {
  double encode_ms = 0.0;
  double select_ms = 0.0;
  double decode_ms = 0.0;
  double total_ms() const { return encode_ms + select_ms + decode_ms; }
};

struct DecodeResult {
  std::vector<TokenId> tokens;  // ends with EOS unless the length limit was hit
  double score = 0.0;           // length-normalized log-probability
  double log_prob = 0.0;
  StageTimes times;
  std::size_t vocab_size = 0;   // |V̄| used by the decoder steps
};

// Next-token log-probabilities for a set of live hypotheses. Columns index a
// fixed output vocabulary; `vocabulary()` maps them to full ids in ascending
// order.
class StepScorer {
 public:
  virtual ~StepScorer() = default;
  virtual std::span<const TokenId> vocabulary() const = 0;
  // Starts a sentence with a single empty hypothesis.
  virtual void reset() = 0;
  // One row per live hypothesis; `last` holds each hypothesis' previous token
  // (BOS at the first step).
  virtual void score(std::span<const TokenId> last, EigenRowMajor<double>& log_probs) = 0;
  // Replaces the live hypotheses by copies of the given parents, in order.
  virtual void reorder(std::span<const std::size_t> parents) = 0;
};

// Beam search with beam shrinking as hypotheses finish. Candidates are ranked
// by accumulated log-probability, ties going to the lower token id and then
// the lower parent index; the final pick maximizes log_prob / length^alpha.
// Throws kInvalidInput when the scorer's vocabulary lacks EOS.
DecodeResult beam_search(StepScorer& scorer, std::size_t max_length, const BeamConfig& config);

// Log-probability of a fixed continuation (teacher forcing). Returns -inf when
// a token is outside the scorer's vocabulary.
double sequence_log_prob(StepScorer& scorer, std::span<const TokenId> tokens);

// Scorer backed by the network, with either the full projection or a reduced
// one gathered once for the sentence.
template <typename Real>
class ModelScorer final : public StepScorer {
 public:
  // Full vocabulary.
  ModelScorer(const InferenceModel<Real>& model, const typename InferenceModel<Real>::Mat& encoded);
  // Restricted to the mapping's ids.
  ModelScorer(const InferenceModel<Real>& model, const typename InferenceModel<Real>::Mat& encoded,
              const VocabMapping& mapping, ReducedProjectionT<Real> projection);

  std::span<const TokenId> vocabulary() const override { return vocab_; }
  void reset() override;
  void score(std::span<const TokenId> last, EigenRowMajor<double>& log_probs) override;
  void reorder(std::span<const std::size_t> parents) override;

 private:
  const InferenceModel<Real>& model_;
  typename InferenceModel<Real>::Memory memory_;
  std::vector<TokenId> vocab_;
  std::optional<ReducedProjectionT<Real>> reduced_;
  std::vector<typename InferenceModel<Real>::State> states_;
};

struct SelectorConfig {
  SelectorTag::Kind kind = SelectorTag::Kind::kNone;
  double lambda = 0.9;
  std::size_t k = 200;
  const TranslationLexicon* lexicon = nullptr;
};

// Encode, select, decode for one sentence at batch size 1, each stage timed
// with a monotonic clock.
template <typename Real>
class Translator {
 public:
  Translator(const InferenceModel<Real>& model, SelectorConfig selector, BeamConfig beam);

  DecodeResult translate(std::span<const TokenId> source) const;
  // Selection alone (encodes the source when the selector needs it).
  BagOfWords select(std::span<const TokenId> source) const;

 private:
  const InferenceModel<Real>& model_;
  SelectorConfig selector_;
  BeamConfig beam_;
};

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;  // 95% normal-approximation half-width
};

// Normal-approximation 95% interval of the mean of `values`.
MeanCi mean_ci(std::span<const double> values);
// Nearest-rank percentile (q in (0, 100]).
double percentile(std::vector<double> values, double q);

struct StageLatency {
  MeanCi mean_ms;  // mean over repetitions of the per-repetition mean
  MeanCi p90_ms;   // mean over repetitions of the per-repetition p90
};

struct LatencySummary {
  std::size_t repetitions = 0;
  std::size_t sentences = 0;
  double avg_vocab_size = 0.0;
  StageLatency encode;
  StageLatency select;
  StageLatency decode;
  StageLatency total;
};

// Runs `decode(i)` for every sentence index once as warm-up, then
// `repetitions` timed passes, and aggregates the stage times the decode
// function reports.
LatencySummary time_runs(const std::function<DecodeResult(std::size_t)>& decode, std::size_t sentences,
                         std::size_t repetitions);

template <typename Real>
LatencySummary time_decode(const Translator<Real>& translator, std::span<const std::vector<TokenId>> sources,
                           std::size_t repetitions);

extern template class ModelScorer<float>;
extern template class ModelScorer<double>;
extern template class Translator<float>;
extern template class Translator<double>;

}  // namespace shortlex
