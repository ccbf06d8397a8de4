// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shortlex/numerics.hpp"

#include <algorithm>
#include <limits>

namespace shortlex {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid input";
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kNumeric: return "numeric error";
    case ErrorKind::kIo: return "io error";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kTraining: return "training error";
    case ErrorKind::kInternal: return "internal error";
  }
  return "unknown error";
}

std::string shape_string(std::size_t rows, std::size_t cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), ErrorKind::kShape,
          "matmul " + shape_string(a.rows(), a.cols()) + " by " + shape_string(b.rows(), b.cols()));
  Matrix out(a.rows(), b.cols());
  if (a.cols() == 0) return out;
  out.eigen().noalias() = a.eigen() * b.eigen();
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  out.eigen() = m.eigen().transpose();
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  require(!logits.empty(), ErrorKind::kShape, "softmax of empty vector");
  double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  require(!logits.empty(), ErrorKind::kShape, "log_softmax of empty vector");
  double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  double lse = mx + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

std::vector<double> sigmoid(std::span<const double> x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = sigmoid(x[i]);
  return out;
}

std::vector<double> maxpool_cols(const Matrix& m, std::span<const bool> padding) {
  require(padding.empty() || padding.size() == m.cols(), ErrorKind::kShape,
          "padding mask length " + std::to_string(padding.size()) + " != columns " +
              std::to_string(m.cols()));
  bool any_live = false;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    if (padding.empty() || !padding[j]) any_live = true;
  }
  require(any_live, ErrorKind::kInvalidInput, "maxpool over fully masked input");
  std::vector<double> out(m.rows(), -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (!padding.empty() && padding[j]) continue;
      out[i] = std::max(out[i], m(i, j));
    }
  }
  return out;
}

std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> x, double h) {
  require(h > 0, ErrorKind::kInvalidInput, "finite difference step must be positive");
  std::vector<double> point(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double saved = point[i];
    point[i] = saved + h;
    double up = f(point);
    point[i] = saved - h;
    double down = f(point);
    point[i] = saved;
    require(std::isfinite(up) && std::isfinite(down), ErrorKind::kNumeric,
            "non-finite function value at coordinate " + std::to_string(i));
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::kShape, "relative_error length mismatch");
  double diff = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  double denom = std::sqrt(std::max(na, nb));
  if (denom == 0.0) return 0.0;
  return std::sqrt(diff) / denom;
}

}  // namespace shortlex
