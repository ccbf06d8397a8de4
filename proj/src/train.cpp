// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shortlex/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "shortlex/rng.hpp"

namespace shortlex {

Adam::Adam(const ModelParams& params, AdamOptions options) : options_(options) {
  require(options_.lr > 0.0, ErrorKind::kInvalidInput, "learning rate must be > 0");
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_.emplace_back(params.at(i).rows(), params.at(i).cols());
    v_.emplace_back(params.at(i).rows(), params.at(i).cols());
  }
}

double Adam::learning_rate(std::size_t step) const {
  if (options_.warmup == 0 || step >= options_.warmup) return options_.lr;
  return options_.lr * static_cast<double>(step) / static_cast<double>(options_.warmup);
}

void Adam::update(ModelParams& params, std::span<const Matrix> grads, const std::vector<bool>& trainable) {
  require(grads.size() == params.size() && trainable.size() == params.size(), ErrorKind::kShape,
          "optimizer inputs do not match the parameter list");
  ++step_;
  const double lr = learning_rate(step_);
  const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!trainable[i]) continue;
    auto p = params.at(i).values();
    auto g = grads[i].values();
    auto m = m_[i].values();
    auto v = v_[i].values();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = options_.beta1 * m[k] + (1.0 - options_.beta1) * g[k];
      v[k] = options_.beta2 * v[k] + (1.0 - options_.beta2) * g[k] * g[k];
      p[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + options_.eps);
    }
  }
}

std::vector<std::vector<std::size_t>> make_batches(std::span<const SentencePair> pairs,
                                                   std::span<const std::size_t> order, std::size_t batch_tokens) {
  require(batch_tokens >= 1, ErrorKind::kInvalidInput, "batch_tokens must be >= 1");
  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::size_t> current;
  std::size_t tokens = 0;
  for (std::size_t idx : order) {
    std::size_t n = pairs[idx].target.size();
    if (!current.empty() && tokens + n > batch_tokens) {
      batches.push_back(std::move(current));
      current.clear();
      tokens = 0;
    }
    current.push_back(idx);
    tokens += n;
  }
  if (!current.empty()) batches.push_back(std::move(current));
  return batches;
}

namespace {

std::vector<SentencePair> gather(std::span<const SentencePair> pairs, std::span<const std::size_t> idx) {
  std::vector<SentencePair> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(pairs[i]);
  return out;
}

// Cycles through shuffled epochs of token-budget batches.
class BatchStream {
 public:
  BatchStream(std::span<const SentencePair> pairs, std::size_t batch_tokens, std::mt19937_64 rng)
      : pairs_(pairs), batch_tokens_(batch_tokens), rng_(rng) {
    require(!pairs.empty(), ErrorKind::kInvalidInput, "training corpus is empty");
  }

  std::vector<SentencePair> next() {
    if (cursor_ == batches_.size()) reshuffle();
    return gather(pairs_, batches_[cursor_++]);
  }

 private:
  void reshuffle() {
    std::vector<std::size_t> order(pairs_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng_);
    batches_ = make_batches(pairs_, order, batch_tokens_);
    cursor_ = 0;
  }

  std::span<const SentencePair> pairs_;
  std::size_t batch_tokens_;
  std::mt19937_64 rng_;
  std::vector<std::vector<std::size_t>> batches_;
  std::size_t cursor_ = 0;
};

struct StepLoss {
  double mt = 0.0;
  double nvs = 0.0;
};

StepLoss accumulate_step(const ModelParams& params, std::vector<Matrix>& grads, const std::vector<bool>& trainable,
                         std::span<const SentencePair> batch, const LossOptions& opts, std::mt19937_64* rng) {
  std::vector<Matrix*> sinks(params.size(), nullptr);
  for (std::size_t i = 0; i < params.size(); ++i) {
    grads[i].fill(0.0);
    if (trainable[i]) sinks[i] = &grads[i];
  }
  Tape tape;
  LossTerms terms = model_losses(tape, params, sinks, batch, opts, rng);
  StepLoss out;
  if (terms.mt.valid()) out.mt = tape.scalar(terms.mt);
  if (terms.nvs.valid()) out.nvs = tape.scalar(terms.nvs);
  double total = tape.scalar(terms.total);
  if (std::isfinite(total)) tape.backward(terms.total);
  return out;
}

void check_finite(const StepLoss& l, std::size_t step) {
  if (!std::isfinite(l.mt) || !std::isfinite(l.nvs)) {
    fail(ErrorKind::kTraining, "training diverged at step " + std::to_string(step) +
                                   " (mt=" + std::to_string(l.mt) + ", nvs=" + std::to_string(l.nvs) + ")");
  }
}

void check_gradients(std::span<const Matrix> grads, std::size_t step) {
  for (const auto& g : grads) {
    if (!g.all_finite()) fail(ErrorKind::kTraining, "non-finite gradient at step " + std::to_string(step));
  }
}

}  // namespace

EvalLoss evaluate(const ModelParams& params, std::span<const SentencePair> pairs, std::size_t batch_tokens) {
  require(!pairs.empty(), ErrorKind::kInvalidInput, "evaluation set is empty");
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double mt_sum = 0.0, nvs_sum = 0.0;
  std::size_t tokens = 0;
  for (const auto& idx : make_batches(pairs, order, batch_tokens)) {
    auto batch = gather(pairs, idx);
    std::size_t n = 0;
    for (const auto& p : batch) n += p.target.size();
    Tape tape(false);
    LossTerms t = model_losses(tape, params, {}, batch, LossOptions{}, nullptr);
    mt_sum += tape.scalar(t.mt) * static_cast<double>(n);
    nvs_sum += tape.scalar(t.nvs) * static_cast<double>(batch.size());
    tokens += n;
  }
  return {mt_sum / static_cast<double>(tokens), nvs_sum / static_cast<double>(pairs.size())};
}

TrainResult train(const ModelConfig& config, std::span<const SentencePair> train_pairs,
                  std::span<const SentencePair> valid_pairs, const TrainOptions& options) {
  return train_from(ModelParams::initialize(config, options.seed), train_pairs,
                    valid_pairs, options);
}

TrainResult train_from(ModelParams params, std::span<const SentencePair> train_pairs,
                       std::span<const SentencePair> valid_pairs, const TrainOptions& options) {
  require(options.steps >= 1, ErrorKind::kInvalidInput, "training needs at least one step");
  TrainResult result;
  BatchStream stream(train_pairs, options.batch_tokens, stage_rng(options.seed, "train.batches"));
  auto dropout_rng = stage_rng(options.seed, "train.dropout");
  Adam adam(params, options.adam);
  std::vector<Matrix> grads;
  for (std::size_t i = 0; i < params.size(); ++i) grads.emplace_back(params.at(i).rows(), params.at(i).cols());
  const std::vector<bool> trainable(params.size(), true);

  LossOptions opts;
  opts.dropout = options.dropout && params.config().dropout > 0.0;

  auto log_entry = [&](TrainLogEntry e) {
    if (options.on_log) options.on_log(e);
    result.log.push_back(std::move(e));
  };
  if (!valid_pairs.empty() && options.validate_every > 0) {
    EvalLoss v = evaluate(params, valid_pairs);
    log_entry({0, 0.0, 0.0, 0.0, v.mt, v.nvs});
  }
  double mt_acc = 0.0, nvs_acc = 0.0;
  std::size_t acc_n = 0;
  for (std::size_t step = 1; step <= options.steps; ++step) {
    auto batch = stream.next();
    StepLoss l = accumulate_step(params, grads, trainable, batch, opts, &dropout_rng);
    check_finite(l, step);
    check_gradients(grads, step);
    adam.update(params, grads, trainable);
    mt_acc += l.mt;
    nvs_acc += l.nvs;
    ++acc_n;
    bool validate = options.validate_every > 0 && (step % options.validate_every == 0 || step == options.steps);
    if (validate) {
      TrainLogEntry e{step, adam.learning_rate(step), mt_acc / static_cast<double>(acc_n),
                      nvs_acc / static_cast<double>(acc_n), std::nullopt, std::nullopt};
      if (!valid_pairs.empty()) {
        EvalLoss v = evaluate(params, valid_pairs);
        if (!std::isfinite(v.mt) || !std::isfinite(v.nvs)) {
          fail(ErrorKind::kTraining, "validation loss is non-finite at step " + std::to_string(step));
        }
        e.valid_mt = v.mt;
        e.valid_nvs = v.nvs;
      }
      log_entry(e);
      mt_acc = nvs_acc = 0.0;
      acc_n = 0;
    }
  }
  result.params = std::move(params);
  return result;
}

ModelParams finetune_nvs(const ModelParams& params, std::span<const SentencePair> adapt_pairs,
                         const FinetuneOptions& options) {
  ModelParams out = params;
  if (options.epochs == 0) return out;
  require(!adapt_pairs.empty(), ErrorKind::kInvalidInput, "adaptation set is empty");
  AdamOptions adam_opts;
  adam_opts.lr = options.lr;
  adam_opts.warmup = 0;
  Adam adam(out, adam_opts);
  std::vector<bool> trainable(out.size(), true);
  if (!options.full_model) {
    for (std::size_t i = 0; i < out.size(); ++i) trainable[i] = out.spec(i).group == ParamGroup::kNvs;
  }
  std::vector<Matrix> grads;
  for (std::size_t i = 0; i < out.size(); ++i) grads.emplace_back(out.at(i).rows(), out.at(i).cols());

  LossOptions opts;
  if (!options.full_model) opts.mt_weight = 0.0;
  opts.dropout = options.full_model && out.config().dropout > 0.0;
  auto shuffle_rng = stage_rng(options.seed, "finetune.batches");
  auto dropout_rng = stage_rng(options.seed, "finetune.dropout");
  std::vector<std::size_t> order(adapt_pairs.size());
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (const auto& idx : make_batches(adapt_pairs, order, options.batch_tokens)) {
      ++step;
      auto batch = gather(adapt_pairs, idx);
      StepLoss l = accumulate_step(out, grads, trainable, batch, opts, &dropout_rng);
      check_finite(l, step);
      check_gradients(grads, step);
      adam.update(out, grads, trainable);
    }
  }
  return out;
}

}  // namespace shortlex
