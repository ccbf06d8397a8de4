// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

// Tape-free forward pass for decoding: the same network as model.hpp, run
// one step at a time with cached self-attention keys and values. Available
// in 64-bit (reference) and 32-bit (benchmarking) precision.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "shortlex/model.hpp"

namespace shortlex {

template <typename Real>
class InferenceModel {
 public:
  using Mat = EigenRowMajor<Real>;
  using RowVec = Eigen::Matrix<Real, 1, Eigen::Dynamic>;

  struct Linear {
    Mat w;  // (out x in)
    RowVec b;
  };
  struct Norm {
    RowVec g;
    RowVec b;
  };
  struct Attention {
    Linear q, k, v, o;
  };
  struct FeedForward {
    Linear up, down;
  };
  struct EncoderLayer {
    Norm ln1;
    Attention self;
    Norm ln2;
    FeedForward ff;
  };
  struct DecoderLayer {
    Norm ln1;
    Attention self;
    Norm ln2;
    Attention cross;
    Norm ln3;
    FeedForward ff;
  };

  // Cross-attention keys and values of one sentence, one pair per layer.
  struct Memory {
    std::vector<Mat> k;
    std::vector<Mat> v;
  };
  // Self-attention cache of one hypothesis; rows grow with each step.
  struct State {
    std::vector<Mat> k;
    std::vector<Mat> v;
    std::size_t steps = 0;
  };

  InferenceModel() = default;
  explicit InferenceModel(const ModelParams& params);

  const ModelConfig& config() const noexcept { return config_; }
  std::size_t vocab_size() const noexcept { return config_.tgt_vocab; }

  // Encoder output for source + EOS, one row per position.
  Mat encode(std::span<const TokenId> source) const;

  // Max over positions of W_nvs h_j + b_nvs (before the sigmoid).
  std::vector<Real> nvs_logits(const Mat& encoded) const;
  // z = sigmoid(nvs_logits).
  std::vector<Real> nvs_forward(const Mat& encoded) const;

  Memory prepare_memory(const Mat& encoded) const;
  State initial_state() const;

  // Feeds tokens[i] to states[i] and returns the final-normalized decoder
  // outputs, one row per state.
  Mat step(const Memory& memory, std::span<State> states, std::span<const TokenId> tokens) const;

  const Mat& output_weight() const noexcept { return out_w_; }
  const RowVec& output_bias() const noexcept { return out_b_; }
  const Mat& nvs_weight() const noexcept { return nvs_w_; }
  const RowVec& nvs_bias() const noexcept { return nvs_b_; }

 private:
  ModelConfig config_;
  Mat src_embed_;
  Mat tgt_embed_;
  std::vector<EncoderLayer> encoder_;
  Norm enc_ln_;
  std::vector<DecoderLayer> decoder_;
  Norm dec_ln_;
  Mat out_w_;
  RowVec out_b_;
  Mat nvs_w_;
  RowVec nvs_b_;
  Mat positions_;
  Real embed_scale_ = 1;

  // Position rows [first, first + count), from the precomputed table when it covers them.
  Mat position_rows(std::size_t first, std::size_t count) const;
};

extern template class InferenceModel<float>;
extern template class InferenceModel<double>;

}  // namespace shortlex
