// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

// Reverse-mode gradient tape over a fixed primitive set. Activations are laid
// out one row per token; several sentences are packed into one matrix and the
// sequence-aware primitives (attention, segment max) take segment tables.

#pragma once

#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shortlex/numerics.hpp"

namespace shortlex {

struct Var {
  int id = -1;
  bool valid() const noexcept { return id >= 0; }
};

// Rows [q_begin, q_begin + q_len) of the query attend to rows
// [k_begin, k_begin + k_len) of keys/values.
struct AttentionSegment {
  std::size_t q_begin = 0;
  std::size_t q_len = 0;
  std::size_t k_begin = 0;
  std::size_t k_len = 0;
};

struct RowSegment {
  std::size_t begin = 0;
  std::size_t length = 0;
};

class Tape {
 public:
  // With recording off every node is a constant: values only, no closures.
  explicit Tape(bool record = true) : record_(record) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return record_; }

  // Named boundaries detach their input when blocking is on (the default).
  // Turning blocking off makes them identities, which is what full-function
  // gradient checks need.
  void set_blocking(bool enabled) noexcept { blocking_ = enabled; }
  bool blocking() const noexcept { return blocking_; }
  const std::vector<std::string>& boundaries() const noexcept { return boundaries_; }

  Var constant(Matrix value);
  // A parameter: its gradient is added into *grad_sink by backward().
  Var leaf(const Matrix& value, Matrix* grad_sink);

  const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
  const Matrix& grad(Var v) const { return nodes_.at(v.id).grad; }
  double scalar(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  Var matmul(Var a, Var b);
  // x * w^T + bias, with w shaped (out x in) and bias (1 x out).
  Var linear(Var x, Var w, Var bias);
  Var add(Var a, Var b);
  Var add_constant(Var a, const Matrix& c);
  Var scale(Var a, double factor);
  Var relu(Var a);
  Var sigmoid(Var a);
  Var dropout(Var a, double rate, std::mt19937_64& rng);
  Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
  Var embedding(Var table, std::span<const int> ids, double factor);
  Var attention(Var q, Var k, Var v, std::span<const AttentionSegment> segments,
                std::size_t heads, bool causal);
  // One output row per segment: columnwise max over the segment's rows.
  Var segment_max(Var x, std::span<const RowSegment> segments);
  Var boundary(Var x, const std::string& name);

  // Mean over rows of label-smoothed cross-entropy against target ids.
  Var smoothed_cross_entropy(Var logits, std::span<const int> targets, double epsilon);
  // Mean over rows of the positive-weighted, Z-normalized binary cross-entropy
  // computed from pre-sigmoid logits. `targets` holds 0/1 entries.
  Var weighted_bce(Var logits, const Matrix& targets, std::span<const double> pos_weight);

  void backward(Var loss);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Matrix* sink = nullptr;
    std::function<void()> backprop;
  };

  Var push(Matrix value, bool requires_grad, std::function<void()> backprop = {});
  bool needs(Var v) const { return nodes_[v.id].requires_grad; }
  Matrix& grad_of(Var v);

  std::vector<Node> nodes_;
  std::vector<std::string> boundaries_;
  bool record_ = true;
  bool blocking_ = true;
};

}  // namespace shortlex
