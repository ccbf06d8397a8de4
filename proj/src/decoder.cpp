// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shortlex/decoder.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace shortlex {

std::size_t BeamConfig::max_output_length(std::size_t source_length) const {
  if (max_length != 0) return max_length;
  return length_multiplier * source_length + length_offset;
}

void BeamConfig::validate() const {
  require(beam >= 1, ErrorKind::kInvalidInput, "beam size must be >= 1");
  require(length_multiplier + length_offset >= 1 || max_length >= 1, ErrorKind::kInvalidInput,
          "maximum output length must be >= 1");
  require(std::isfinite(alpha) && alpha >= 0.0, ErrorKind::kInvalidInput, "alpha must be finite and >= 0");
}

namespace {

struct Hypothesis {
  std::vector<TokenId> tokens;
  double log_prob = 0.0;
};

struct Candidate {
  double log_prob;
  std::size_t column;
  TokenId token;
  std::size_t parent;
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  if (a.token != b.token) return a.token < b.token;
  return a.parent < b.parent;
}

double normalized(const Hypothesis& h, double alpha) {
  return h.log_prob / std::pow(static_cast<double>(h.tokens.size()), alpha);
}

}  // namespace

DecodeResult beam_search(StepScorer& scorer, std::size_t max_length, const BeamConfig& config) {
  config.validate();
  require(max_length >= 1, ErrorKind::kInvalidInput, "maximum output length must be >= 1");
  auto vocab = scorer.vocabulary();
  require(std::binary_search(vocab.begin(), vocab.end(), kEosId), ErrorKind::kInvalidInput,
          "decoder vocabulary does not contain EOS");
  const std::size_t cols = vocab.size();

  scorer.reset();
  std::vector<Hypothesis> live(1);
  std::vector<Hypothesis> finished;
  EigenRowMajor<double> lp;
  std::vector<std::size_t> order(cols);
  std::vector<Candidate> pool;

  while (!live.empty() && finished.size() < config.beam) {
    std::vector<TokenId> last;
    last.reserve(live.size());
    for (const auto& h : live) last.push_back(h.tokens.empty() ? kBosId : h.tokens.back());
    scorer.score(last, lp);
    require(static_cast<std::size_t>(lp.rows()) == live.size() && static_cast<std::size_t>(lp.cols()) == cols,
            ErrorKind::kShape, "scorer returned the wrong shape");

    const std::size_t width = config.beam - finished.size();
    pool.clear();
    for (std::size_t i = 0; i < live.size(); ++i) {
      // Columns ascend with token id, so ranking by (score, column) is the
      // same as ranking by (score, token id).
      std::iota(order.begin(), order.end(), std::size_t{0});
      auto by_score = [&](std::size_t a, std::size_t b) {
        double x = lp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a));
        double y = lp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b));
        return x != y ? x > y : a < b;
      };
      std::size_t keep = std::min(width, cols);
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(), by_score);
      for (std::size_t c = 0; c < keep; ++c) {
        std::size_t col = order[c];
        pool.push_back({live[i].log_prob + lp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col)), col,
                        vocab[col], i});
      }
    }
    std::size_t take = std::min(width, pool.size());
    std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take), pool.end(), better);

    std::vector<Hypothesis> next;
    std::vector<std::size_t> parents;
    for (std::size_t c = 0; c < take; ++c) {
      const Candidate& cand = pool[c];
      Hypothesis h = live[cand.parent];
      h.tokens.push_back(cand.token);
      h.log_prob = cand.log_prob;
      if (cand.token == kEosId || h.tokens.size() >= max_length) {
        finished.push_back(std::move(h));
      } else {
        next.push_back(std::move(h));
        parents.push_back(cand.parent);
      }
    }
    live = std::move(next);
    if (!live.empty()) scorer.reorder(parents);
  }

  const Hypothesis* best = nullptr;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const auto& h : finished) {
    double s = normalized(h, config.alpha);
    if (best == nullptr || s > best_score) {
      best = &h;
      best_score = s;
    }
  }
  require(best != nullptr, ErrorKind::kInternal, "beam search finished without a hypothesis");
  DecodeResult r;
  r.tokens = best->tokens;
  r.log_prob = best->log_prob;
  r.score = best_score;
  r.vocab_size = cols;
  return r;
}

double sequence_log_prob(StepScorer& scorer, std::span<const TokenId> tokens) {
  auto vocab = scorer.vocabulary();
  scorer.reset();
  EigenRowMajor<double> lp;
  double total = 0.0;
  TokenId prev = kBosId;
  for (TokenId t : tokens) {
    TokenId last[] = {prev};
    scorer.score(last, lp);
    auto it = std::lower_bound(vocab.begin(), vocab.end(), t);
    if (it == vocab.end() || *it != t) return -std::numeric_limits<double>::infinity();
    total += lp(0, static_cast<Eigen::Index>(it - vocab.begin()));
    prev = t;
  }
  return total;
}

// ---------------------------------------------------------------------------
// ModelScorer

template <typename Real>
ModelScorer<Real>::ModelScorer(const InferenceModel<Real>& model, const typename InferenceModel<Real>::Mat& encoded)
    : model_(model), memory_(model.prepare_memory(encoded)) {
  vocab_.resize(model.vocab_size());
  std::iota(vocab_.begin(), vocab_.end(), TokenId{0});
}

template <typename Real>
ModelScorer<Real>::ModelScorer(const InferenceModel<Real>& model, const typename InferenceModel<Real>::Mat& encoded,
                               const VocabMapping& mapping, ReducedProjectionT<Real> projection)
    : model_(model), memory_(model.prepare_memory(encoded)), vocab_(mapping.inverse), reduced_(std::move(projection)) {
  require(static_cast<std::size_t>(reduced_->w.rows()) == vocab_.size(), ErrorKind::kShape,
          "reduced projection and mapping differ in size");
}

template <typename Real>
void ModelScorer<Real>::reset() {
  states_.assign(1, model_.initial_state());
}

template <typename Real>
void ModelScorer<Real>::score(std::span<const TokenId> last, EigenRowMajor<double>& log_probs) {
  require(last.size() == states_.size(), ErrorKind::kShape, "one previous token per live hypothesis");
  using Mat = typename InferenceModel<Real>::Mat;
  Mat h = model_.step(memory_, states_, last);
  Mat logits;
  if (reduced_) {
    logits = h * reduced_->w.transpose();
    logits.rowwise() += reduced_->b;
  } else {
    logits = h * model_.output_weight().transpose();
    logits.rowwise() += model_.output_bias();
  }
  log_probs.resize(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    double mx = static_cast<double>(logits.row(r).maxCoeff());
    double sum = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      double v = static_cast<double>(logits(r, c)) - mx;
      log_probs(r, c) = v;
      sum += std::exp(v);
    }
    double lse = std::log(sum);
    log_probs.row(r).array() -= lse;
  }
}

template <typename Real>
void ModelScorer<Real>::reorder(std::span<const std::size_t> parents) {
  std::vector<typename InferenceModel<Real>::State> next;
  next.reserve(parents.size());
  for (std::size_t p : parents) next.push_back(states_.at(p));
  states_ = std::move(next);
}

// ---------------------------------------------------------------------------
// Translator

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

}  // namespace

template <typename Real>
Translator<Real>::Translator(const InferenceModel<Real>& model, SelectorConfig selector, BeamConfig beam)
    : model_(model), selector_(selector), beam_(beam) {
  beam_.validate();
  if (selector_.kind == SelectorTag::Kind::kAlign) {
    require(selector_.lexicon != nullptr, ErrorKind::kInvalidInput, "align selector needs a lexicon");
  }
}

template <typename Real>
BagOfWords Translator<Real>::select(std::span<const TokenId> source) const {
  switch (selector_.kind) {
    case SelectorTag::Kind::kNone: return BagOfWords::full(model_.vocab_size());
    case SelectorTag::Kind::kAlign: return select_align(*selector_.lexicon, source, selector_.k);
    case SelectorTag::Kind::kNvs: {
      auto logits = model_.nvs_logits(model_.encode(source));
      std::vector<double> l(logits.begin(), logits.end());
      return select_nvs_logits(l, selector_.lambda);
    }
  }
  fail(ErrorKind::kInternal, "unknown selector");
}

template <typename Real>
DecodeResult Translator<Real>::translate(std::span<const TokenId> source) const {
  auto t0 = Clock::now();
  auto encoded = model_.encode(source);
  auto t1 = Clock::now();
  std::optional<VocabMapping> mapping;
  std::optional<ReducedProjectionT<Real>> projection;
  if (selector_.kind != SelectorTag::Kind::kNone) {
    BagOfWords bow;
    if (selector_.kind == SelectorTag::Kind::kNvs) {
      auto logits = model_.nvs_logits(encoded);
      std::vector<double> l(logits.begin(), logits.end());
      bow = select_nvs_logits(l, selector_.lambda);
    } else {
      bow = select_align(*selector_.lexicon, source, selector_.k);
    }
    mapping = build_mapping(bow, model_.vocab_size());
    projection = restrict_projection(model_, *mapping);
  }
  auto t2 = Clock::now();
  std::size_t max_len = beam_.max_output_length(source.size());
  DecodeResult r;
  if (mapping) {
    ModelScorer<Real> scorer(model_, encoded, *mapping, std::move(*projection));
    r = beam_search(scorer, max_len, beam_);
  } else {
    ModelScorer<Real> scorer(model_, encoded);
    r = beam_search(scorer, max_len, beam_);
  }
  auto t3 = Clock::now();
  r.times = {elapsed_ms(t0, t1), elapsed_ms(t1, t2), elapsed_ms(t2, t3)};
  return r;
}

// ---------------------------------------------------------------------------
// Latency

MeanCi mean_ci(std::span<const double> values) {
  require(!values.empty(), ErrorKind::kInvalidInput, "mean_ci of an empty sample");
  const double n = static_cast<double>(values.size());
  double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  double sd = std::sqrt(ss / (n - 1.0));
  return {mean, 1.96 * sd / std::sqrt(n)};
}

double percentile(std::vector<double> values, double q) {
  require(!values.empty(), ErrorKind::kInvalidInput, "percentile of an empty sample");
  require(q > 0.0 && q <= 100.0, ErrorKind::kInvalidInput, "percentile must lie in (0, 100]");
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(q / 100.0 * static_cast<double>(values.size())));
  return values[std::max<std::size_t>(rank, 1) - 1];
}

LatencySummary time_runs(const std::function<DecodeResult(std::size_t)>& decode, std::size_t sentences,
                         std::size_t repetitions) {
  require(repetitions >= 1, ErrorKind::kInvalidInput, "repetitions must be >= 1");
  require(sentences >= 1, ErrorKind::kInvalidInput, "latency needs at least one sentence");
  for (std::size_t i = 0; i < sentences; ++i) decode(i);  // warm-up, discarded

  std::vector<double> means[4], p90s[4];
  double vocab_total = 0.0;
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    std::vector<double> stage[4];
    for (std::size_t i = 0; i < sentences; ++i) {
      DecodeResult r = decode(i);
      stage[0].push_back(r.times.encode_ms);
      stage[1].push_back(r.times.select_ms);
      stage[2].push_back(r.times.decode_ms);
      stage[3].push_back(r.times.total_ms());
      vocab_total += static_cast<double>(r.vocab_size);
    }
    for (int s = 0; s < 4; ++s) {
      means[s].push_back(std::accumulate(stage[s].begin(), stage[s].end(), 0.0) / static_cast<double>(sentences));
      p90s[s].push_back(percentile(stage[s], 90.0));
    }
  }
  LatencySummary out;
  out.repetitions = repetitions;
  out.sentences = sentences;
  out.avg_vocab_size = vocab_total / static_cast<double>(sentences * repetitions);
  StageLatency* stages[4] = {&out.encode, &out.select, &out.decode, &out.total};
  for (int s = 0; s < 4; ++s) *stages[s] = {mean_ci(means[s]), mean_ci(p90s[s])};
  return out;
}

template <typename Real>
LatencySummary time_decode(const Translator<Real>& translator, std::span<const std::vector<TokenId>> sources,
                           std::size_t repetitions) {
  return time_runs([&](std::size_t i) { return translator.translate(sources[i]); }, sources.size(), repetitions);
}

template class ModelScorer<float>;
template class ModelScorer<double>;
template class Translator<float>;
template class Translator<double>;
template LatencySummary time_decode(const Translator<float>&, std::span<const std::vector<TokenId>>, std::size_t);
template LatencySummary time_decode(const Translator<double>&, std::span<const std::vector<TokenId>>, std::size_t);

}  // namespace shortlex
