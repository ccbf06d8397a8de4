// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

// Toy pre-norm transformer encoder-decoder with an output projection and a
// separate vocabulary-selection head on the encoder output.
//
// Layout conventions: activations hold one row per token; a linear layer
// stores its weight as (out x in) and its bias as (1 x out), so the output
// projection W is (V x d) and the selection head W_nvs is (V x d) as well.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "shortlex/corpus.hpp"
#include "shortlex/numerics.hpp"
#include "shortlex/tape.hpp"

namespace shortlex {

// Positive class weight of the selection loss: either a fixed value or
// "auto", which sets it to factor * (V - n_p) / n_p per sentence.
struct PositiveWeight {
  enum class Mode { kFixed, kAuto };
  Mode mode = Mode::kFixed;
  double value = 1000.0;

  double resolve(std::size_t vocab_size, std::size_t positives) const;
  std::string to_string() const;
  // "1000" or "auto:10".
  static PositiveWeight parse(std::string_view text);
};

// lambda_p = max(1, x * (V - n_p) / n_p). Throws kInvalidInput when n_p is 0
// or not below V, or x <= 0.
double auto_pos_weight(std::size_t vocab_size, std::size_t positives, double factor);

struct ModelConfig {
  std::size_t d_model = 64;
  std::size_t encoder_layers = 4;
  std::size_t decoder_layers = 2;
  std::size_t heads = 4;
  std::size_t ffn = 256;
  std::size_t src_vocab = 0;
  std::size_t tgt_vocab = 0;
  double label_smoothing = 0.1;
  PositiveWeight pos_weight;
  double dropout = 0.1;

  void validate() const;
  std::vector<std::pair<std::string, std::string>> to_kv() const;
  // Unknown keys are ignored so callers can keep extra entries alongside.
  static ModelConfig from_kv(const std::map<std::string, std::string>& kv);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline bool operator==(const PositiveWeight& a, const PositiveWeight& b) {
  return a.mode == b.mode && a.value == b.value;
}

enum class ParamGroup { kSourceEmbedding, kTargetEmbedding, kEncoder, kDecoder, kOutput, kNvs };
const char* to_string(ParamGroup group);

struct ParamSpec {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  ParamGroup group = ParamGroup::kEncoder;
};

std::vector<ParamSpec> param_specs(const ModelConfig& config);

struct ParamCounts {
  std::uint64_t source_embedding = 0;
  std::uint64_t target_embedding = 0;
  std::uint64_t encoder = 0;
  std::uint64_t decoder = 0;
  std::uint64_t output = 0;
  std::uint64_t nvs = 0;
  std::uint64_t total = 0;

  void add(ParamGroup group, std::uint64_t n);
};

ParamCounts count_parameters(const ModelConfig& config);

struct AttentionIndex {
  std::size_t wq, bq, wk, bk, wv, bv, wo, bo;
};
struct FeedForwardIndex {
  std::size_t w1, b1, w2, b2;
};
struct EncoderLayerIndex {
  std::size_t ln1_g, ln1_b;
  AttentionIndex self;
  std::size_t ln2_g, ln2_b;
  FeedForwardIndex ff;
};
struct DecoderLayerIndex {
  std::size_t ln1_g, ln1_b;
  AttentionIndex self;
  std::size_t ln2_g, ln2_b;
  AttentionIndex cross;
  std::size_t ln3_g, ln3_b;
  FeedForwardIndex ff;
};
struct ParamLayout {
  std::size_t src_embed = 0;
  std::size_t tgt_embed = 0;
  std::vector<EncoderLayerIndex> encoder;
  std::size_t enc_ln_g = 0, enc_ln_b = 0;
  std::vector<DecoderLayerIndex> decoder;
  std::size_t dec_ln_g = 0, dec_ln_b = 0;
  std::size_t out_w = 0, out_b = 0;
  std::size_t nvs_w = 0, nvs_b = 0;
};

class ModelParams {
 public:
  ModelParams() = default;
  // All arrays zero, except layer-norm gains which start at one.
  explicit ModelParams(const ModelConfig& config);
  static ModelParams initialize(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  const ParamLayout& layout() const noexcept { return layout_; }

  std::size_t size() const noexcept { return arrays_.size(); }
  Matrix& at(std::size_t i) { return arrays_.at(i); }
  const Matrix& at(std::size_t i) const { return arrays_.at(i); }
  const ParamSpec& spec(std::size_t i) const { return specs_.at(i); }
  std::size_t index(std::string_view name) const;
  Matrix& get(std::string_view name) { return arrays_.at(index(name)); }
  const Matrix& get(std::string_view name) const { return arrays_.at(index(name)); }

  std::uint64_t total_floats() const;
  void zero();

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    return a.config_ == b.config_ && a.arrays_ == b.arrays_;
  }

 private:
  ModelConfig config_;
  std::vector<ParamSpec> specs_;
  std::vector<Matrix> arrays_;
  std::unordered_map<std::string, std::size_t> index_;
  ParamLayout layout_;
};

// Sinusoidal position table, one row per position.
Matrix sinusoidal_positions(std::size_t length, std::size_t d_model);

struct LossOptions {
  double mt_weight = 1.0;
  double nvs_weight = 1.0;
  bool dropout = false;
  // Route gradients of the selection loss through the encoder. Only gradient
  // checks of the whole function turn this on.
  bool nvs_reaches_encoder = false;
};

struct LossTerms {
  Var mt;
  Var nvs;
  Var total;
};

// Builds the joint training loss for a batch on `tape`. Parameters become
// leaves whose gradients accumulate into `grads` (null entries, or a null
// vector, freeze the corresponding arrays). Sentences are packed one row per
// token; the encoder sees the source plus an appended EOS.
LossTerms model_losses(Tape& tape, const ModelParams& params, std::span<Matrix* const> grads,
                       std::span<const SentencePair> batch, const LossOptions& options,
                       std::mt19937_64* dropout_rng);

// Encoder outputs for each sentence (positions x d) from one packed forward.
std::vector<Matrix> encode_packed(const ModelParams& params,
                                  std::span<const std::vector<TokenId>> sources);

// Label-smoothed cross-entropy of the model on one pair, no dropout.
double mt_loss(const ModelParams& params, const SentencePair& pair);

// Selection loss from probabilities z:
// -(1/Z) sum_i [ y_i lambda_p log z_i + (1 - y_i) log(1 - z_i) ],
// Z = V + (lambda_p - 1) n_p.
double nvs_loss(std::span<const double> z, const BowTarget& bow, double pos_weight);
// Same loss from pre-sigmoid logits, evaluated with log-sigmoid.
double nvs_loss_from_logits(std::span<const double> logits, const BowTarget& bow, double pos_weight);
double nvs_normalizer(std::size_t vocab_size, std::size_t positives, double pos_weight);

// Entropy of the smoothed target distribution: the lowest achievable
// per-token label-smoothed cross-entropy over V classes.
double smoothed_entropy_floor(std::size_t vocab_size, double epsilon);

}  // namespace shortlex
