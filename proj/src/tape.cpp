// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shortlex/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace shortlex {

namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  require(a.same_shape(b), ErrorKind::kShape,
          std::string(op) + ": " + shape_string(a.rows(), a.cols()) + " vs " +
              shape_string(b.rows(), b.cols()));
}

}  // namespace

Var Tape::push(Matrix value, bool requires_grad, std::function<void()> backprop) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = record_ && requires_grad;
  if (node.requires_grad) node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

Matrix& Tape::grad_of(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

double Tape::scalar(Var v) const {
  const Matrix& m = value(v);
  require(m.rows() == 1 && m.cols() == 1, ErrorKind::kShape, "scalar() on non 1x1 node");
  return m(0, 0);
}

Var Tape::constant(Matrix value) { return push(std::move(value), false); }

Var Tape::leaf(const Matrix& value, Matrix* grad_sink) {
  Var v = push(value, grad_sink != nullptr);
  if (record_ && grad_sink != nullptr) {
    require(grad_sink->same_shape(value), ErrorKind::kShape, "gradient sink shape mismatch");
    nodes_[v.id].sink = grad_sink;
  }
  return v;
}

Var Tape::matmul(Var a, Var b) {
  Matrix out = shortlex::matmul(value(a), value(b));
  bool rg = needs(a) || needs(b);
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), rg, [this, a, b, o] {
    const Matrix& g = nodes_[o.id].grad;
    if (needs(a)) grad_of(a).eigen().noalias() += g.eigen() * value(b).eigen().transpose();
    if (needs(b)) grad_of(b).eigen().noalias() += value(a).eigen().transpose() * g.eigen();
  });
}

Var Tape::linear(Var x, Var w, Var bias) {
  const Matrix& xv = value(x);
  const Matrix& wv = value(w);
  require(xv.cols() == wv.cols(), ErrorKind::kShape,
          "linear: input " + shape_string(xv.rows(), xv.cols()) + " weight " +
              shape_string(wv.rows(), wv.cols()));
  Matrix out(xv.rows(), wv.rows());
  out.eigen().noalias() = xv.eigen() * wv.eigen().transpose();
  if (bias.valid()) {
    const Matrix& bv = value(bias);
    require(bv.rows() == 1 && bv.cols() == wv.rows(), ErrorKind::kShape, "linear: bias shape");
    out.eigen().rowwise() += bv.eigen().row(0);
  }
  bool rg = needs(x) || needs(w) || (bias.valid() && needs(bias));
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), rg, [this, x, w, bias, o] {
    const Matrix& g = nodes_[o.id].grad;
    if (needs(x)) grad_of(x).eigen().noalias() += g.eigen() * value(w).eigen();
    if (needs(w)) grad_of(w).eigen().noalias() += g.eigen().transpose() * value(x).eigen();
    if (bias.valid() && needs(bias)) grad_of(bias).eigen().row(0) += g.eigen().colwise().sum();
  });
}

Var Tape::add(Var a, Var b) {
  check_same_shape(value(a), value(b), "add");
  Matrix out = value(a);
  out.eigen() += value(b).eigen();
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), needs(a) || needs(b), [this, a, b, o] {
    const Matrix& g = nodes_[o.id].grad;
    if (needs(a)) grad_of(a).eigen() += g.eigen();
    if (needs(b)) grad_of(b).eigen() += g.eigen();
  });
}

Var Tape::add_constant(Var a, const Matrix& c) {
  check_same_shape(value(a), c, "add_constant");
  Matrix out = value(a);
  out.eigen() += c.eigen();
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), needs(a), [this, a, o] {
    grad_of(a).eigen() += nodes_[o.id].grad.eigen();
  });
}

Var Tape::scale(Var a, double factor) {
  Matrix out = value(a);
  out.eigen() *= factor;
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), needs(a), [this, a, o, factor] {
    grad_of(a).eigen() += factor * nodes_[o.id].grad.eigen();
  });
}

Var Tape::relu(Var a) {
  Matrix out = value(a);
  for (double& v : out.values()) v = v > 0 ? v : 0.0;
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), needs(a), [this, a, o] {
    const Matrix& g = nodes_[o.id].grad;
    const Matrix& in = value(a);
    Matrix& ga = grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (in.data()[i] > 0) ga.data()[i] += g.data()[i];
    }
  });
}

Var Tape::sigmoid(Var a) {
  Matrix out = value(a);
  for (double& v : out.values()) v = shortlex::sigmoid(v);
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), needs(a), [this, a, o] {
    const Matrix& g = nodes_[o.id].grad;
    const Matrix& s = nodes_[o.id].value;
    Matrix& ga = grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga.data()[i] += g.data()[i] * s.data()[i] * (1.0 - s.data()[i]);
    }
  });
}

Var Tape::dropout(Var a, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return a;
  require(rate < 1.0, ErrorKind::kInvalidInput, "dropout rate must be < 1");
  const Matrix& in = value(a);
  Matrix mask(in.rows(), in.cols());
  std::bernoulli_distribution keep(1.0 - rate);
  double inv = 1.0 / (1.0 - rate);
  for (double& m : mask.values()) m = keep(rng) ? inv : 0.0;
  Matrix out = in;
  out.eigen().array() *= mask.eigen().array();
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), needs(a), [this, a, o, mask = std::move(mask)] {
    grad_of(a).eigen().array() += nodes_[o.id].grad.eigen().array() * mask.eigen().array();
  });
}

Var Tape::layer_norm(Var x, Var gain, Var bias, double eps) {
  const Matrix& in = value(x);
  const Matrix& gv = value(gain);
  const Matrix& bv = value(bias);
  std::size_t n = in.rows();
  std::size_t d = in.cols();
  require(gv.rows() == 1 && gv.cols() == d && bv.same_shape(gv), ErrorKind::kShape,
          "layer_norm: gain/bias shape");
  Matrix xhat(n, d);
  std::vector<double> rstd(n);
  Matrix out(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = in.row(r);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < d; ++c) {
      xhat(r, c) = (row[c] - mean) * rstd[r];
      out(r, c) = xhat(r, c) * gv(0, c) + bv(0, c);
    }
  }
  bool rg = needs(x) || needs(gain) || needs(bias);
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), rg,
              [this, x, gain, bias, o, xhat = std::move(xhat), rstd = std::move(rstd)] {
                const Matrix& g = nodes_[o.id].grad;
                const Matrix& gv = value(gain);
                std::size_t n = g.rows();
                std::size_t d = g.cols();
                if (needs(gain) || needs(bias)) {
                  Matrix& gg = grad_of(gain);
                  Matrix& gb = grad_of(bias);
                  for (std::size_t r = 0; r < n; ++r) {
                    for (std::size_t c = 0; c < d; ++c) {
                      gg(0, c) += g(r, c) * xhat(r, c);
                      gb(0, c) += g(r, c);
                    }
                  }
                }
                if (!needs(x)) return;
                Matrix& gx = grad_of(x);
                std::vector<double> dxhat(d);
                for (std::size_t r = 0; r < n; ++r) {
                  double mean_d = 0.0;
                  double mean_dx = 0.0;
                  for (std::size_t c = 0; c < d; ++c) {
                    dxhat[c] = g(r, c) * gv(0, c);
                    mean_d += dxhat[c];
                    mean_dx += dxhat[c] * xhat(r, c);
                  }
                  mean_d /= static_cast<double>(d);
                  mean_dx /= static_cast<double>(d);
                  for (std::size_t c = 0; c < d; ++c) {
                    gx(r, c) += rstd[r] * (dxhat[c] - mean_d - xhat(r, c) * mean_dx);
                  }
                }
              });
}

Var Tape::embedding(Var table, std::span<const int> ids, double factor) {
  const Matrix& t = value(table);
  Matrix out(ids.size(), t.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    require(ids[i] >= 0 && static_cast<std::size_t>(ids[i]) < t.rows(), ErrorKind::kInvalidInput,
            "embedding id " + std::to_string(ids[i]) + " out of range " + std::to_string(t.rows()));
    auto src = t.row(static_cast<std::size_t>(ids[i]));
    auto dst = out.row(i);
    for (std::size_t c = 0; c < t.cols(); ++c) dst[c] = src[c] * factor;
  }
  Var o{static_cast<int>(nodes_.size())};
  std::vector<int> saved(ids.begin(), ids.end());
  return push(std::move(out), needs(table), [this, table, o, factor, saved = std::move(saved)] {
    const Matrix& g = nodes_[o.id].grad;
    Matrix& gt = grad_of(table);
    for (std::size_t i = 0; i < saved.size(); ++i) {
      auto src = g.row(i);
      auto dst = gt.row(static_cast<std::size_t>(saved[i]));
      for (std::size_t c = 0; c < g.cols(); ++c) dst[c] += src[c] * factor;
    }
  });
}

Var Tape::attention(Var q, Var k, Var v, std::span<const AttentionSegment> segments,
                    std::size_t heads, bool causal) {
  const Matrix& qv = value(q);
  const Matrix& kv = value(k);
  const Matrix& vv = value(v);
  std::size_t d = qv.cols();
  require(heads >= 1 && d % heads == 0, ErrorKind::kShape, "attention: width not divisible by heads");
  require(kv.cols() == d && vv.same_shape(kv), ErrorKind::kShape, "attention: key/value shape");
  std::size_t dh = d / heads;
  double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  auto Q = qv.eigen();
  auto K = kv.eigen();
  auto V = vv.eigen();
  Matrix out(qv.rows(), d);
  auto O = out.eigen();
  std::vector<EigenRowMajor<double>> probs;
  probs.reserve(segments.size() * heads);
  for (const auto& s : segments) {
    require(s.q_begin + s.q_len <= qv.rows() && s.k_begin + s.k_len <= kv.rows() && s.k_len > 0,
            ErrorKind::kShape, "attention: segment out of range");
    require(!causal || s.q_len == s.k_len, ErrorKind::kShape, "attention: causal segment mismatch");
    for (std::size_t h = 0; h < heads; ++h) {
      auto Qs = Q.block(s.q_begin, h * dh, s.q_len, dh);
      auto Ks = K.block(s.k_begin, h * dh, s.k_len, dh);
      auto Vs = V.block(s.k_begin, h * dh, s.k_len, dh);
      EigenRowMajor<double> P = (Qs * Ks.transpose()) * inv_sqrt;
      for (Eigen::Index i = 0; i < P.rows(); ++i) {
        Eigen::Index live = causal ? i + 1 : P.cols();
        double mx = P.row(i).head(live).maxCoeff();
        double sum = 0.0;
        for (Eigen::Index j = 0; j < P.cols(); ++j) {
          double e = j < live ? std::exp(P(i, j) - mx) : 0.0;
          P(i, j) = e;
          sum += e;
        }
        P.row(i) /= sum;
      }
      O.block(s.q_begin, h * dh, s.q_len, dh).noalias() = P * Vs;
      probs.push_back(std::move(P));
    }
  }
  bool rg = needs(q) || needs(k) || needs(v);
  Var o{static_cast<int>(nodes_.size())};
  std::vector<AttentionSegment> segs(segments.begin(), segments.end());
  return push(std::move(out), rg,
              [this, q, k, v, o, heads, dh, inv_sqrt, segs = std::move(segs),
               probs = std::move(probs)] {
                auto G = nodes_[o.id].grad.eigen();
                auto Q = value(q).eigen();
                auto K = value(k).eigen();
                auto V = value(v).eigen();
                bool gq = needs(q), gk = needs(k), gv = needs(v);
                Matrix* dQ = gq ? &grad_of(q) : nullptr;
                Matrix* dK = gk ? &grad_of(k) : nullptr;
                Matrix* dV = gv ? &grad_of(v) : nullptr;
                std::size_t idx = 0;
                for (const auto& s : segs) {
                  for (std::size_t h = 0; h < heads; ++h, ++idx) {
                    const auto& P = probs[idx];
                    auto Gs = G.block(s.q_begin, h * dh, s.q_len, dh);
                    auto Qs = Q.block(s.q_begin, h * dh, s.q_len, dh);
                    auto Ks = K.block(s.k_begin, h * dh, s.k_len, dh);
                    auto Vs = V.block(s.k_begin, h * dh, s.k_len, dh);
                    if (gv) dV->eigen().block(s.k_begin, h * dh, s.k_len, dh).noalias() += P.transpose() * Gs;
                    if (!gq && !gk) continue;
                    EigenRowMajor<double> dP = Gs * Vs.transpose();
                    Eigen::VectorXd rowdot = (dP.array() * P.array()).rowwise().sum();
                    EigenRowMajor<double> dS =
                        (P.array() * (dP.array().colwise() - rowdot.array())).matrix() * inv_sqrt;
                    if (gq) dQ->eigen().block(s.q_begin, h * dh, s.q_len, dh).noalias() += dS * Ks;
                    if (gk) dK->eigen().block(s.k_begin, h * dh, s.k_len, dh).noalias() += dS.transpose() * Qs;
                  }
                }
              });
}

Var Tape::segment_max(Var x, std::span<const RowSegment> segments) {
  const Matrix& in = value(x);
  std::size_t c = in.cols();
  Matrix out(segments.size(), c);
  std::vector<std::size_t> argmax(segments.size() * c);
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto& seg = segments[s];
    require(seg.length > 0 && seg.begin + seg.length <= in.rows(), ErrorKind::kInvalidInput,
            "segment_max: empty or out-of-range segment");
    for (std::size_t j = 0; j < c; ++j) {
      std::size_t best = seg.begin;
      double mx = in(seg.begin, j);
      for (std::size_t r = seg.begin + 1; r < seg.begin + seg.length; ++r) {
        if (in(r, j) > mx) {
          mx = in(r, j);
          best = r;
        }
      }
      out(s, j) = mx;
      argmax[s * c + j] = best;
    }
  }
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), needs(x), [this, x, o, c, argmax = std::move(argmax)] {
    const Matrix& g = nodes_[o.id].grad;
    Matrix& gx = grad_of(x);
    for (std::size_t s = 0; s < g.rows(); ++s) {
      for (std::size_t j = 0; j < c; ++j) gx(argmax[s * c + j], j) += g(s, j);
    }
  });
}

Var Tape::boundary(Var x, const std::string& name) {
  if (std::find(boundaries_.begin(), boundaries_.end(), name) == boundaries_.end()) {
    boundaries_.push_back(name);
  }
  if (!blocking_) return x;
  return push(value(x), false);
}

Var Tape::smoothed_cross_entropy(Var logits, std::span<const int> targets, double epsilon) {
  const Matrix& z = value(logits);
  require(targets.size() == z.rows(), ErrorKind::kShape, "cross entropy: target count mismatch");
  require(z.rows() > 0, ErrorKind::kShape, "cross entropy: no rows");
  std::size_t n = z.rows();
  std::size_t V = z.cols();
  double uniform = epsilon / static_cast<double>(V);
  Matrix probs(n, V);
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    int t = targets[r];
    require(t >= 0 && static_cast<std::size_t>(t) < V, ErrorKind::kInvalidInput,
            "cross entropy: target id out of range");
    auto row = z.row(r);
    double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < V; ++c) {
      probs(r, c) = std::exp(row[c] - mx);
      sum += probs(r, c);
    }
    double lse = mx + std::log(sum);
    double row_sum_logits = 0.0;
    for (std::size_t c = 0; c < V; ++c) {
      probs(r, c) /= sum;
      row_sum_logits += row[c];
    }
    // -sum_c q_c log p_c with q = (1-eps) onehot + eps/V.
    total += lse - (1.0 - epsilon) * row[static_cast<std::size_t>(t)] - uniform * row_sum_logits;
  }
  Matrix out(1, 1, total / static_cast<double>(n));
  Var o{static_cast<int>(nodes_.size())};
  std::vector<int> saved(targets.begin(), targets.end());
  return push(std::move(out), needs(logits),
              [this, logits, o, epsilon, uniform, probs = std::move(probs),
               saved = std::move(saved)] {
                double g = nodes_[o.id].grad(0, 0) / static_cast<double>(probs.rows());
                Matrix& gz = grad_of(logits);
                for (std::size_t r = 0; r < probs.rows(); ++r) {
                  for (std::size_t c = 0; c < probs.cols(); ++c) {
                    double q = uniform + (static_cast<int>(c) == saved[r] ? 1.0 - epsilon : 0.0);
                    gz(r, c) += g * (probs(r, c) - q);
                  }
                }
              });
}

Var Tape::weighted_bce(Var logits, const Matrix& targets, std::span<const double> pos_weight) {
  const Matrix& x = value(logits);
  check_same_shape(x, targets, "weighted_bce");
  require(pos_weight.size() == x.rows(), ErrorKind::kShape, "weighted_bce: weight count");
  require(x.rows() > 0, ErrorKind::kShape, "weighted_bce: no rows");
  std::size_t B = x.rows();
  std::size_t V = x.cols();
  std::vector<double> inv_z(B);
  double total = 0.0;
  for (std::size_t r = 0; r < B; ++r) {
    double n_p = 0.0;
    for (std::size_t c = 0; c < V; ++c) n_p += targets(r, c);
    double lp = pos_weight[r];
    inv_z[r] = 1.0 / (static_cast<double>(V) + (lp - 1.0) * n_p);
    double s = 0.0;
    for (std::size_t c = 0; c < V; ++c) {
      double y = targets(r, c);
      s += y * lp * log_sigmoid(x(r, c)) + (1.0 - y) * log_sigmoid(-x(r, c));
    }
    total += -inv_z[r] * s;
  }
  Matrix out(1, 1, total / static_cast<double>(B));
  Var o{static_cast<int>(nodes_.size())};
  std::vector<double> weights(pos_weight.begin(), pos_weight.end());
  return push(std::move(out), needs(logits),
              [this, logits, o, targets, inv_z = std::move(inv_z), weights = std::move(weights)] {
                const Matrix& x = value(logits);
                double g = nodes_[o.id].grad(0, 0) / static_cast<double>(x.rows());
                Matrix& gx = grad_of(logits);
                for (std::size_t r = 0; r < x.rows(); ++r) {
                  for (std::size_t c = 0; c < x.cols(); ++c) {
                    double y = targets(r, c);
                    double s = shortlex::sigmoid(x(r, c));
                    gx(r, c) += g * -inv_z[r] * (y * weights[r] * (1.0 - s) - (1.0 - y) * s);
                  }
                }
              });
}

void Tape::backward(Var loss) {
  require(record_, ErrorKind::kInternal, "backward on a non-recording tape");
  const Matrix& lv = value(loss);
  require(lv.rows() == 1 && lv.cols() == 1, ErrorKind::kShape, "backward from non-scalar");
  if (!needs(loss)) return;
  grad_of(loss)(0, 0) += 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backprop) n.backprop();
    if (n.sink != nullptr) n.sink->eigen() += n.grad.eigen();
  }
}

}  // namespace shortlex
