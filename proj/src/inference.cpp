// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shortlex/inference.hpp"

#include <algorithm>
#include <cmath>

namespace shortlex {

namespace {

constexpr std::size_t kPrecomputedPositions = 512;
constexpr double kLayerNormEps = 1e-5;

template <typename Real>
EigenRowMajor<Real> to_eigen(const Matrix& m) {
  return m.eigen().template cast<Real>();
}

template <typename Real>
Eigen::Matrix<Real, 1, Eigen::Dynamic> to_row(const Matrix& m) {
  require(m.rows() == 1, ErrorKind::kShape, "expected a row vector");
  return m.eigen().row(0).template cast<Real>();
}

template <typename Real>
void layer_norm_rows(EigenRowMajor<Real>& x, const Eigen::Matrix<Real, 1, Eigen::Dynamic>& g,
                     const Eigen::Matrix<Real, 1, Eigen::Dynamic>& b, EigenRowMajor<Real>& out) {
  out.resize(x.rows(), x.cols());
  const Real d = static_cast<Real>(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    Real mean = x.row(r).sum() / d;
    Real var = (x.row(r).array() - mean).square().sum() / d;
    Real rstd = Real(1) / std::sqrt(var + static_cast<Real>(kLayerNormEps));
    out.row(r) = (((x.row(r).array() - mean) * rstd) * g.array() + b.array()).matrix();
  }
}

template <typename Real, typename Lin>
EigenRowMajor<Real> apply(const Lin& lin, const EigenRowMajor<Real>& x) {
  EigenRowMajor<Real> y = x * lin.w.transpose();
  y.rowwise() += lin.b;
  return y;
}

// Multi-head attention of the rows of q (already projected) over k and v.
// With `causal`, query row i sees key rows [0, i].
template <typename Real>
void attend(const EigenRowMajor<Real>& q, const EigenRowMajor<Real>& k, const EigenRowMajor<Real>& v,
            std::size_t heads, bool causal, EigenRowMajor<Real>& ctx) {
  const Eigen::Index n = q.rows();
  const Eigen::Index d = q.cols();
  const Eigen::Index dh = d / static_cast<Eigen::Index>(heads);
  const Real inv_sqrt = Real(1) / std::sqrt(static_cast<Real>(dh));
  ctx.resize(n, d);
  for (std::size_t h = 0; h < heads; ++h) {
    Eigen::Index c0 = static_cast<Eigen::Index>(h) * dh;
    EigenRowMajor<Real> p = (q.middleCols(c0, dh) * k.middleCols(c0, dh).transpose()) * inv_sqrt;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index live = causal ? i + 1 : p.cols();
      Real mx = p.row(i).head(live).maxCoeff();
      Real sum = 0;
      for (Eigen::Index j = 0; j < live; ++j) {
        p(i, j) = std::exp(p(i, j) - mx);
        sum += p(i, j);
      }
      for (Eigen::Index j = 0; j < live; ++j) p(i, j) /= sum;
      for (Eigen::Index j = live; j < p.cols(); ++j) p(i, j) = 0;
    }
    ctx.middleCols(c0, dh) = p * v.middleCols(c0, dh);
  }
}

}  // namespace

template <typename Real>
InferenceModel<Real>::InferenceModel(const ModelParams& params) : config_(params.config()) {
  const auto& L = params.layout();
  auto lin = [&](std::size_t w, std::size_t b) { return Linear{to_eigen<Real>(params.at(w)), to_row<Real>(params.at(b))}; };
  auto norm = [&](std::size_t g, std::size_t b) { return Norm{to_row<Real>(params.at(g)), to_row<Real>(params.at(b))}; };
  auto attn = [&](const AttentionIndex& a) {
    return Attention{lin(a.wq, a.bq), lin(a.wk, a.bk), lin(a.wv, a.bv), lin(a.wo, a.bo)};
  };
  auto ff = [&](const FeedForwardIndex& f) { return FeedForward{lin(f.w1, f.b1), lin(f.w2, f.b2)}; };

  src_embed_ = to_eigen<Real>(params.at(L.src_embed));
  tgt_embed_ = to_eigen<Real>(params.at(L.tgt_embed));
  for (const auto& e : L.encoder) encoder_.push_back({norm(e.ln1_g, e.ln1_b), attn(e.self), norm(e.ln2_g, e.ln2_b), ff(e.ff)});
  enc_ln_ = norm(L.enc_ln_g, L.enc_ln_b);
  for (const auto& e : L.decoder) {
    decoder_.push_back({norm(e.ln1_g, e.ln1_b), attn(e.self), norm(e.ln2_g, e.ln2_b), attn(e.cross),
                        norm(e.ln3_g, e.ln3_b), ff(e.ff)});
  }
  dec_ln_ = norm(L.dec_ln_g, L.dec_ln_b);
  out_w_ = to_eigen<Real>(params.at(L.out_w));
  out_b_ = to_row<Real>(params.at(L.out_b));
  nvs_w_ = to_eigen<Real>(params.at(L.nvs_w));
  nvs_b_ = to_row<Real>(params.at(L.nvs_b));
  positions_ = to_eigen<Real>(sinusoidal_positions(kPrecomputedPositions, config_.d_model));
  embed_scale_ = static_cast<Real>(std::sqrt(static_cast<double>(config_.d_model)));
}

template <typename Real>
typename InferenceModel<Real>::Mat InferenceModel<Real>::position_rows(std::size_t first,
                                                                     std::size_t count) const {
  if (first + count <= static_cast<std::size_t>(positions_.rows())) {
    return positions_.middleRows(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count));
  }
  Mat all = to_eigen<Real>(sinusoidal_positions(first + count, config_.d_model));
  return all.bottomRows(static_cast<Eigen::Index>(count));
}

template <typename Real>
typename InferenceModel<Real>::Mat InferenceModel<Real>::encode(std::span<const TokenId> source) const {
  require(!source.empty(), ErrorKind::kInvalidInput, "empty source sentence");
  const std::size_t t = source.size() + 1;
  Mat x(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(config_.d_model));
  for (std::size_t i = 0; i < t; ++i) {
    TokenId id = i < source.size() ? source[i] : kEosId;
    require(id >= 0 && static_cast<std::size_t>(id) < config_.src_vocab, ErrorKind::kInvalidInput,
            "source id " + std::to_string(id) + " out of range");
    x.row(static_cast<Eigen::Index>(i)) = src_embed_.row(id) * embed_scale_;
  }
  x += position_rows(0, t);
  Mat h, ctx;
  for (const auto& layer : encoder_) {
    layer_norm_rows<Real>(x, layer.ln1.g, layer.ln1.b, h);
    Mat q = apply<Real>(layer.self.q, h), k = apply<Real>(layer.self.k, h), v = apply<Real>(layer.self.v, h);
    attend<Real>(q, k, v, config_.heads, false, ctx);
    x += apply<Real>(layer.self.o, ctx);
    layer_norm_rows<Real>(x, layer.ln2.g, layer.ln2.b, h);
    Mat up = apply<Real>(layer.ff.up, h).cwiseMax(Real(0));
    x += apply<Real>(layer.ff.down, up);
  }
  Mat out;
  layer_norm_rows<Real>(x, enc_ln_.g, enc_ln_.b, out);
  return out;
}

template <typename Real>
std::vector<Real> InferenceModel<Real>::nvs_logits(const Mat& encoded) const {
  require(encoded.rows() >= 1 && encoded.cols() == static_cast<Eigen::Index>(config_.d_model),
          ErrorKind::kShape, "nvs_logits: encoder states have the wrong shape");
  Mat proj = encoded * nvs_w_.transpose();
  RowVec pooled = proj.colwise().maxCoeff();
  pooled += nvs_b_;
  return std::vector<Real>(pooled.data(), pooled.data() + pooled.size());
}

template <typename Real>
std::vector<Real> InferenceModel<Real>::nvs_forward(const Mat& encoded) const {
  auto z = nvs_logits(encoded);
  for (Real& v : z) v = static_cast<Real>(sigmoid(static_cast<double>(v)));
  return z;
}

template <typename Real>
typename InferenceModel<Real>::Memory InferenceModel<Real>::prepare_memory(const Mat& encoded) const {
  Memory m;
  for (const auto& layer : decoder_) {
    m.k.push_back(apply<Real>(layer.cross.k, encoded));
    m.v.push_back(apply<Real>(layer.cross.v, encoded));
  }
  return m;
}

template <typename Real>
typename InferenceModel<Real>::State InferenceModel<Real>::initial_state() const {
  State s;
  const auto d = static_cast<Eigen::Index>(config_.d_model);
  s.k.assign(decoder_.size(), Mat(0, d));
  s.v.assign(decoder_.size(), Mat(0, d));
  return s;
}

template <typename Real>
typename InferenceModel<Real>::Mat InferenceModel<Real>::step(const Memory& memory, std::span<State> states,
                                                              std::span<const TokenId> tokens) const {
  require(states.size() == tokens.size(), ErrorKind::kShape, "step: one token per state");
  const auto n = static_cast<Eigen::Index>(states.size());
  const auto d = static_cast<Eigen::Index>(config_.d_model);
  Mat y(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    TokenId id = tokens[static_cast<std::size_t>(i)];
    require(id >= 0 && static_cast<std::size_t>(id) < config_.tgt_vocab, ErrorKind::kInvalidInput,
            "target id out of range");
    State& s = states[static_cast<std::size_t>(i)];
    y.row(i) = tgt_embed_.row(id) * embed_scale_ + position_rows(s.steps, 1).row(0);
  }
  Mat h, ctx(n, d), row_ctx;
  for (std::size_t l = 0; l < decoder_.size(); ++l) {
    const auto& layer = decoder_[l];
    layer_norm_rows<Real>(y, layer.ln1.g, layer.ln1.b, h);
    Mat q = apply<Real>(layer.self.q, h), k = apply<Real>(layer.self.k, h), v = apply<Real>(layer.self.v, h);
    for (Eigen::Index i = 0; i < n; ++i) {
      State& s = states[static_cast<std::size_t>(i)];
      Mat& K = s.k[l];
      Mat& V = s.v[l];
      K.conservativeResize(K.rows() + 1, d);
      V.conservativeResize(V.rows() + 1, d);
      K.row(K.rows() - 1) = k.row(i);
      V.row(V.rows() - 1) = v.row(i);
      Mat qi = q.row(i);
      attend<Real>(qi, K, V, config_.heads, false, row_ctx);
      ctx.row(i) = row_ctx.row(0);
    }
    y += apply<Real>(layer.self.o, ctx);
    layer_norm_rows<Real>(y, layer.ln2.g, layer.ln2.b, h);
    Mat cq = apply<Real>(layer.cross.q, h);
    attend<Real>(cq, memory.k[l], memory.v[l], config_.heads, false, ctx);
    y += apply<Real>(layer.cross.o, ctx);
    layer_norm_rows<Real>(y, layer.ln3.g, layer.ln3.b, h);
    Mat up = apply<Real>(layer.ff.up, h).cwiseMax(Real(0));
    y += apply<Real>(layer.ff.down, up);
  }
  for (auto& s : states) ++s.steps;
  Mat out;
  layer_norm_rows<Real>(y, dec_ln_.g, dec_ln_.b, out);
  return out;
}

template class InferenceModel<float>;
template class InferenceModel<double>;

}  // namespace shortlex
