// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

// Joint training with Adam and token-budget batches, validation, and
// fine-tuning of the selection head on adaptation data.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "shortlex/model.hpp"

namespace shortlex {

struct AdamOptions {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
  std::size_t warmup = 400;  // linear warmup steps; 0 disables
};

class Adam {
 public:
  Adam(const ModelParams& params, AdamOptions options);
  double learning_rate(std::size_t step) const;  // step counts from 1
  // Applies one update; entries of `trainable` that are false are skipped.
  void update(ModelParams& params, std::span<const Matrix> grads, const std::vector<bool>& trainable);
  std::size_t steps() const noexcept { return step_; }

 private:
  AdamOptions options_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::size_t step_ = 0;
};

struct TrainLogEntry {
  std::size_t step = 0;
  double lr = 0.0;
  double train_mt = 0.0;
  double train_nvs = 0.0;
  std::optional<double> valid_mt;
  std::optional<double> valid_nvs;
};

struct TrainOptions {
  std::size_t steps = 1000;
  std::size_t batch_tokens = 1024;  // target tokens per batch
  AdamOptions adam;
  std::uint64_t seed = 17;
  bool dropout = true;
  std::size_t validate_every = 250;
  std::function<void(const TrainLogEntry&)> on_log;
};

struct TrainResult {
  ModelParams params;
  std::vector<TrainLogEntry> log;
};

struct EvalLoss {
  double mt = 0.0;   // label-smoothed cross-entropy per target token
  double nvs = 0.0;  // selection loss per sentence
};

// Loss of the model on `pairs` without dropout, batched by `batch_tokens`.
EvalLoss evaluate(const ModelParams& params, std::span<const SentencePair> pairs, std::size_t batch_tokens = 2048);

// Splits pair indices into batches of roughly `batch_tokens` target tokens, in
// the given order.
std::vector<std::vector<std::size_t>> make_batches(std::span<const SentencePair> pairs,
                                                   std::span<const std::size_t> order, std::size_t batch_tokens);

// Joint training from a fresh initialization. Deterministic given the seed.
// Throws kTraining (naming the step) when a loss becomes non-finite.
TrainResult train(const ModelConfig& config, std::span<const SentencePair> train_pairs,
                  std::span<const SentencePair> valid_pairs, const TrainOptions& options);
// Continues training from existing parameters with a fresh optimizer.
TrainResult train_from(ModelParams params, std::span<const SentencePair> train_pairs,
                       std::span<const SentencePair> valid_pairs, const TrainOptions& options);

struct FinetuneOptions {
  std::size_t epochs = 10;
  double lr = 1e-4;
  std::size_t batch_tokens = 2048;
  // Also update the translation model with the joint loss.
  bool full_model = false;
  std::uint64_t seed = 17;
};

// Fine-tunes on adaptation pairs. By default only the selection head moves and
// only the selection loss is used.
ModelParams finetune_nvs(const ModelParams& params, std::span<const SentencePair> adapt_pairs,
                         const FinetuneOptions& options);

}  // namespace shortlex
