// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shortlex/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "shortlex/rng.hpp"

namespace shortlex {

// ---------------------------------------------------------------------------
// Positive weight

double auto_pos_weight(std::size_t vocab_size, std::size_t positives, double factor) {
  require(positives >= 1, ErrorKind::kInvalidInput, "auto positive weight needs n_p >= 1");
  require(positives < vocab_size, ErrorKind::kInvalidInput, "auto positive weight needs n_p < V");
  require(factor > 0.0, ErrorKind::kInvalidInput, "auto positive weight factor must be > 0");
  double w = factor * static_cast<double>(vocab_size - positives) / static_cast<double>(positives);
  return std::max(1.0, w);
}

double PositiveWeight::resolve(std::size_t vocab_size, std::size_t positives) const {
  if (mode == Mode::kFixed) return value;
  return auto_pos_weight(vocab_size, positives, value);
}

std::string PositiveWeight::to_string() const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return mode == Mode::kAuto ? std::string("auto:") + buf : std::string(buf);
}

PositiveWeight PositiveWeight::parse(std::string_view text) {
  PositiveWeight w;
  std::string_view num = text;
  if (text.starts_with("auto:")) {
    w.mode = Mode::kAuto;
    num = text.substr(5);
  } else if (text == "auto") {
    w.mode = Mode::kAuto;
    w.value = 1.0;
    return w;
  }
  try {
    std::size_t used = 0;
    w.value = std::stod(std::string(num), &used);
    require(used == num.size(), ErrorKind::kInvalidInput, "");
  } catch (const std::exception&) {
    fail(ErrorKind::kInvalidInput, "bad positive weight '" + std::string(text) +
                                       "' (expected a number or auto:<factor>)");
  }
  if (w.mode == Mode::kFixed) {
    require(w.value >= 1.0, ErrorKind::kInvalidInput, "positive weight must be >= 1");
  } else {
    require(w.value > 0.0, ErrorKind::kInvalidInput, "auto factor must be > 0");
  }
  return w;
}

// ---------------------------------------------------------------------------
// Config

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* what) {
    require(v >= 1, ErrorKind::kInvalidInput, std::string(what) + " must be >= 1");
  };
  positive(d_model, "d_model");
  positive(encoder_layers, "encoder_layers");
  positive(decoder_layers, "decoder_layers");
  positive(heads, "heads");
  positive(ffn, "ffn");
  positive(src_vocab, "src_vocab");
  positive(tgt_vocab, "tgt_vocab");
  require(d_model % heads == 0, ErrorKind::kInvalidInput, "d_model must be divisible by heads");
  require(tgt_vocab > kNumSpecials, ErrorKind::kInvalidInput,
          "tgt_vocab must exceed the reserved tokens");
  require(label_smoothing >= 0.0 && label_smoothing < 1.0, ErrorKind::kInvalidInput,
          "label_smoothing must be in [0,1)");
  require(dropout >= 0.0 && dropout < 1.0, ErrorKind::kInvalidInput, "dropout must be in [0,1)");
}

std::vector<std::pair<std::string, std::string>> ModelConfig::to_kv() const {
  char buf[64];
  auto real = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  return {
      {"d_model", std::to_string(d_model)},
      {"encoder_layers", std::to_string(encoder_layers)},
      {"decoder_layers", std::to_string(decoder_layers)},
      {"heads", std::to_string(heads)},
      {"ffn", std::to_string(ffn)},
      {"src_vocab", std::to_string(src_vocab)},
      {"tgt_vocab", std::to_string(tgt_vocab)},
      {"label_smoothing", real(label_smoothing)},
      {"pos_weight", pos_weight.to_string()},
      {"dropout", real(dropout)},
  };
}

ModelConfig ModelConfig::from_kv(const std::map<std::string, std::string>& kv) {
  ModelConfig c;
  auto get_size = [&](const char* key, std::size_t& out) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    try {
      std::size_t used = 0;
      unsigned long long v = std::stoull(it->second, &used);
      require(used == it->second.size(), ErrorKind::kInvalidInput, "");
      out = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      fail(ErrorKind::kInvalidInput, std::string("config key ") + key + ": bad integer '" + it->second + "'");
    }
  };
  auto get_real = [&](const char* key, double& out) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    try {
      std::size_t used = 0;
      out = std::stod(it->second, &used);
      require(used == it->second.size(), ErrorKind::kInvalidInput, "");
    } catch (const std::exception&) {
      fail(ErrorKind::kInvalidInput, std::string("config key ") + key + ": bad number '" + it->second + "'");
    }
  };
  get_size("d_model", c.d_model);
  get_size("encoder_layers", c.encoder_layers);
  get_size("decoder_layers", c.decoder_layers);
  get_size("heads", c.heads);
  get_size("ffn", c.ffn);
  get_size("src_vocab", c.src_vocab);
  get_size("tgt_vocab", c.tgt_vocab);
  get_real("label_smoothing", c.label_smoothing);
  get_real("dropout", c.dropout);
  if (auto it = kv.find("pos_weight"); it != kv.end()) c.pos_weight = PositiveWeight::parse(it->second);
  return c;
}

// ---------------------------------------------------------------------------
// Parameter layout

const char* to_string(ParamGroup group) {
  switch (group) {
    case ParamGroup::kSourceEmbedding: return "source_embedding";
    case ParamGroup::kTargetEmbedding: return "target_embedding";
    case ParamGroup::kEncoder: return "encoder";
    case ParamGroup::kDecoder: return "decoder";
    case ParamGroup::kOutput: return "output";
    case ParamGroup::kNvs: return "nvs";
  }
  return "unknown";
}

namespace {

struct SpecBuilder {
  std::vector<ParamSpec> specs;
  std::size_t add(std::string name, std::size_t rows, std::size_t cols, ParamGroup g) {
    specs.push_back({std::move(name), rows, cols, g});
    return specs.size() - 1;
  }
  AttentionIndex attention(const std::string& p, std::size_t d, ParamGroup g) {
    AttentionIndex a{};
    a.wq = add(p + ".wq", d, d, g);
    a.bq = add(p + ".bq", 1, d, g);
    a.wk = add(p + ".wk", d, d, g);
    a.bk = add(p + ".bk", 1, d, g);
    a.wv = add(p + ".wv", d, d, g);
    a.bv = add(p + ".bv", 1, d, g);
    a.wo = add(p + ".wo", d, d, g);
    a.bo = add(p + ".bo", 1, d, g);
    return a;
  }
  FeedForwardIndex feed_forward(const std::string& p, std::size_t d, std::size_t f, ParamGroup g) {
    FeedForwardIndex ff{};
    ff.w1 = add(p + ".w1", f, d, g);
    ff.b1 = add(p + ".b1", 1, f, g);
    ff.w2 = add(p + ".w2", d, f, g);
    ff.b2 = add(p + ".b2", 1, d, g);
    return ff;
  }
};

ParamLayout build_layout(const ModelConfig& c, std::vector<ParamSpec>& specs_out) {
  SpecBuilder b;
  ParamLayout L;
  std::size_t d = c.d_model;
  L.src_embed = b.add("src_embed", c.src_vocab, d, ParamGroup::kSourceEmbedding);
  L.tgt_embed = b.add("tgt_embed", c.tgt_vocab, d, ParamGroup::kTargetEmbedding);
  for (std::size_t l = 0; l < c.encoder_layers; ++l) {
    std::string p = "enc." + std::to_string(l);
    EncoderLayerIndex e{};
    e.ln1_g = b.add(p + ".ln1.g", 1, d, ParamGroup::kEncoder);
    e.ln1_b = b.add(p + ".ln1.b", 1, d, ParamGroup::kEncoder);
    e.self = b.attention(p + ".self", d, ParamGroup::kEncoder);
    e.ln2_g = b.add(p + ".ln2.g", 1, d, ParamGroup::kEncoder);
    e.ln2_b = b.add(p + ".ln2.b", 1, d, ParamGroup::kEncoder);
    e.ff = b.feed_forward(p + ".ff", d, c.ffn, ParamGroup::kEncoder);
    L.encoder.push_back(e);
  }
  L.enc_ln_g = b.add("enc.ln.g", 1, d, ParamGroup::kEncoder);
  L.enc_ln_b = b.add("enc.ln.b", 1, d, ParamGroup::kEncoder);
  for (std::size_t l = 0; l < c.decoder_layers; ++l) {
    std::string p = "dec." + std::to_string(l);
    DecoderLayerIndex e{};
    e.ln1_g = b.add(p + ".ln1.g", 1, d, ParamGroup::kDecoder);
    e.ln1_b = b.add(p + ".ln1.b", 1, d, ParamGroup::kDecoder);
    e.self = b.attention(p + ".self", d, ParamGroup::kDecoder);
    e.ln2_g = b.add(p + ".ln2.g", 1, d, ParamGroup::kDecoder);
    e.ln2_b = b.add(p + ".ln2.b", 1, d, ParamGroup::kDecoder);
    e.cross = b.attention(p + ".cross", d, ParamGroup::kDecoder);
    e.ln3_g = b.add(p + ".ln3.g", 1, d, ParamGroup::kDecoder);
    e.ln3_b = b.add(p + ".ln3.b", 1, d, ParamGroup::kDecoder);
    e.ff = b.feed_forward(p + ".ff", d, c.ffn, ParamGroup::kDecoder);
    L.decoder.push_back(e);
  }
  L.dec_ln_g = b.add("dec.ln.g", 1, d, ParamGroup::kDecoder);
  L.dec_ln_b = b.add("dec.ln.b", 1, d, ParamGroup::kDecoder);
  L.out_w = b.add("out.w", c.tgt_vocab, d, ParamGroup::kOutput);
  L.out_b = b.add("out.b", 1, c.tgt_vocab, ParamGroup::kOutput);
  L.nvs_w = b.add("nvs.w", c.tgt_vocab, d, ParamGroup::kNvs);
  L.nvs_b = b.add("nvs.b", 1, c.tgt_vocab, ParamGroup::kNvs);
  specs_out = std::move(b.specs);
  return L;
}

bool is_gain(const std::string& name) {
  return name.size() > 2 && name.compare(name.size() - 2, 2, ".g") == 0;
}

bool is_bias(const ParamSpec& s) { return s.rows == 1 && !is_gain(s.name); }

}  // namespace

std::vector<ParamSpec> param_specs(const ModelConfig& config) {
  std::vector<ParamSpec> specs;
  build_layout(config, specs);
  return specs;
}

void ParamCounts::add(ParamGroup group, std::uint64_t n) {
  switch (group) {
    case ParamGroup::kSourceEmbedding: source_embedding += n; break;
    case ParamGroup::kTargetEmbedding: target_embedding += n; break;
    case ParamGroup::kEncoder: encoder += n; break;
    case ParamGroup::kDecoder: decoder += n; break;
    case ParamGroup::kOutput: output += n; break;
    case ParamGroup::kNvs: nvs += n; break;
  }
  total += n;
}

ParamCounts count_parameters(const ModelConfig& config) {
  ParamCounts counts;
  for (const auto& s : param_specs(config)) {
    counts.add(s.group, static_cast<std::uint64_t>(s.rows) * s.cols);
  }
  return counts;
}

ModelParams::ModelParams(const ModelConfig& config) : config_(config) {
  config_.validate();
  layout_ = build_layout(config_, specs_);
  arrays_.reserve(specs_.size());
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    const auto& s = specs_[i];
    arrays_.emplace_back(s.rows, s.cols, is_gain(s.name) ? 1.0 : 0.0);
    index_.emplace(s.name, i);
  }
}

ModelParams ModelParams::initialize(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p(config);
  auto rng = stage_rng(seed, "model.init");
  double emb_std = 1.0 / std::sqrt(static_cast<double>(config.d_model));
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& s = p.specs_[i];
    Matrix& m = p.arrays_[i];
    if (is_gain(s.name) || is_bias(s)) continue;
    if (s.group == ParamGroup::kSourceEmbedding || s.group == ParamGroup::kTargetEmbedding) {
      std::normal_distribution<double> dist(0.0, emb_std);
      for (double& v : m.values()) v = dist(rng);
    } else {
      double bound = std::sqrt(6.0 / static_cast<double>(s.rows + s.cols));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (double& v : m.values()) v = dist(rng);
    }
  }
  return p;
}

std::size_t ModelParams::index(std::string_view name) const {
  auto it = index_.find(std::string(name));
  require(it != index_.end(), ErrorKind::kInvalidInput, "no parameter named '" + std::string(name) + "'");
  return it->second;
}

std::uint64_t ModelParams::total_floats() const {
  std::uint64_t n = 0;
  for (const auto& a : arrays_) n += a.size();
  return n;
}

void ModelParams::zero() {
  for (auto& a : arrays_) a.fill(0.0);
}

Matrix sinusoidal_positions(std::size_t length, std::size_t d_model) {
  Matrix pe(length, d_model);
  for (std::size_t pos = 0; pos < length; ++pos) {
    for (std::size_t i = 0; i < d_model; i += 2) {
      double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(d_model));
      pe(pos, i) = std::sin(static_cast<double>(pos) * freq);
      if (i + 1 < d_model) pe(pos, i + 1) = std::cos(static_cast<double>(pos) * freq);
    }
  }
  return pe;
}

// ---------------------------------------------------------------------------
// Tape forward

namespace {

struct Packed {
  std::vector<int> ids;
  std::vector<RowSegment> segments;
  Matrix positions;
};

Packed pack(std::span<const std::vector<int>> seqs, std::size_t d_model) {
  Packed p;
  std::size_t max_len = 0;
  for (const auto& s : seqs) max_len = std::max(max_len, s.size());
  Matrix table = sinusoidal_positions(max_len, d_model);
  std::size_t total = 0;
  for (const auto& s : seqs) total += s.size();
  p.positions = Matrix(total, d_model);
  std::size_t row = 0;
  for (const auto& s : seqs) {
    p.segments.push_back({row, s.size()});
    for (std::size_t i = 0; i < s.size(); ++i, ++row) {
      p.ids.push_back(s[i]);
      auto src = table.row(i);
      std::copy(src.begin(), src.end(), p.positions.row(row).begin());
    }
  }
  return p;
}

class Forward {
 public:
  Forward(Tape& tape, const ModelParams& params, std::span<Matrix* const> grads, bool dropout,
          std::mt19937_64* rng)
      : tape_(tape), params_(params), dropout_(dropout && rng != nullptr), rng_(rng) {
    const auto& c = params.config();
    rate_ = c.dropout;
    heads_ = c.heads;
    leaves_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      Matrix* sink = grads.empty() ? nullptr : grads[i];
      leaves_[i] = tape.leaf(params.at(i), sink);
    }
  }

  Var p(std::size_t i) const { return leaves_[i]; }

  Var drop(Var x) { return dropout_ ? tape_.dropout(x, rate_, *rng_) : x; }

  Var attention_block(Var q_in, Var kv_in, const AttentionIndex& a,
                      std::span<const AttentionSegment> segs, bool causal) {
    Var q = tape_.linear(q_in, p(a.wq), p(a.bq));
    Var k = tape_.linear(kv_in, p(a.wk), p(a.bk));
    Var v = tape_.linear(kv_in, p(a.wv), p(a.bv));
    Var ctx = tape_.attention(q, k, v, segs, heads_, causal);
    return tape_.linear(ctx, p(a.wo), p(a.bo));
  }

  Var feed_forward(Var x, const FeedForwardIndex& f) {
    Var h = tape_.relu(tape_.linear(x, p(f.w1), p(f.b1)));
    return tape_.linear(h, p(f.w2), p(f.b2));
  }

  // Returns the final-normalized encoder output for the packed sources.
  Var encode(const Packed& src) {
    const auto& L = params_.layout();
    double scale = std::sqrt(static_cast<double>(params_.config().d_model));
    Var x = tape_.embedding(p(L.src_embed), src.ids, scale);
    x = drop(tape_.add_constant(x, src.positions));
    std::vector<AttentionSegment> segs;
    for (const auto& s : src.segments) segs.push_back({s.begin, s.length, s.begin, s.length});
    for (const auto& layer : L.encoder) {
      Var h = tape_.layer_norm(x, p(layer.ln1_g), p(layer.ln1_b));
      x = tape_.add(x, drop(attention_block(h, h, layer.self, segs, false)));
      h = tape_.layer_norm(x, p(layer.ln2_g), p(layer.ln2_b));
      x = tape_.add(x, drop(feed_forward(h, layer.ff)));
    }
    return tape_.layer_norm(x, p(L.enc_ln_g), p(L.enc_ln_b));
  }

  Var decode_logits(Var memory, const Packed& src, const Packed& tgt_in) {
    const auto& L = params_.layout();
    double scale = std::sqrt(static_cast<double>(params_.config().d_model));
    Var y = tape_.embedding(p(L.tgt_embed), tgt_in.ids, scale);
    y = drop(tape_.add_constant(y, tgt_in.positions));
    std::vector<AttentionSegment> self_segs;
    std::vector<AttentionSegment> cross_segs;
    for (std::size_t s = 0; s < tgt_in.segments.size(); ++s) {
      const auto& t = tgt_in.segments[s];
      const auto& e = src.segments[s];
      self_segs.push_back({t.begin, t.length, t.begin, t.length});
      cross_segs.push_back({t.begin, t.length, e.begin, e.length});
    }
    for (const auto& layer : L.decoder) {
      Var h = tape_.layer_norm(y, p(layer.ln1_g), p(layer.ln1_b));
      y = tape_.add(y, drop(attention_block(h, h, layer.self, self_segs, true)));
      h = tape_.layer_norm(y, p(layer.ln2_g), p(layer.ln2_b));
      y = tape_.add(y, drop(attention_block(h, memory, layer.cross, cross_segs, false)));
      h = tape_.layer_norm(y, p(layer.ln3_g), p(layer.ln3_b));
      y = tape_.add(y, drop(feed_forward(h, layer.ff)));
    }
    Var out = tape_.layer_norm(y, p(L.dec_ln_g), p(L.dec_ln_b));
    return tape_.linear(out, p(L.out_w), p(L.out_b));
  }

  Var nvs_pooled(Var memory, const Packed& src) {
    const auto& L = params_.layout();
    Var logits = tape_.linear(memory, p(L.nvs_w), p(L.nvs_b));
    return tape_.segment_max(logits, src.segments);
  }

 private:
  Tape& tape_;
  const ModelParams& params_;
  bool dropout_;
  std::mt19937_64* rng_;
  double rate_ = 0.0;
  std::size_t heads_ = 1;
  std::vector<Var> leaves_;
};

std::vector<std::vector<int>> with_eos(std::span<const std::vector<TokenId>> sources) {
  std::vector<std::vector<int>> out;
  out.reserve(sources.size());
  for (const auto& s : sources) {
    require(!s.empty(), ErrorKind::kInvalidInput, "empty source sentence");
    std::vector<int> v(s.begin(), s.end());
    v.push_back(kEosId);
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace

LossTerms model_losses(Tape& tape, const ModelParams& params, std::span<Matrix* const> grads,
                       std::span<const SentencePair> batch, const LossOptions& options,
                       std::mt19937_64* dropout_rng) {
  require(!batch.empty(), ErrorKind::kInvalidInput, "empty batch");
  require(grads.empty() || grads.size() == params.size(), ErrorKind::kShape,
          "gradient sink count mismatch");
  const auto& cfg = params.config();
  std::vector<std::vector<TokenId>> sources;
  std::vector<std::vector<int>> tgt_in;
  std::vector<int> tgt_out;
  for (const auto& pair : batch) {
    require(!pair.target.empty() && pair.target.back() == kEosId, ErrorKind::kInvalidInput,
            "target must end with EOS");
    for (TokenId id : pair.source) {
      require(id >= 0 && static_cast<std::size_t>(id) < cfg.src_vocab, ErrorKind::kInvalidInput,
              "source id out of range");
    }
    sources.push_back(pair.source);
    std::vector<int> in;
    in.push_back(kBosId);
    in.insert(in.end(), pair.target.begin(), pair.target.end() - 1);
    tgt_in.push_back(std::move(in));
    tgt_out.insert(tgt_out.end(), pair.target.begin(), pair.target.end());
  }
  auto src_seqs = with_eos(sources);
  Packed src = pack(src_seqs, cfg.d_model);

  Forward fwd(tape, params, grads, options.dropout, dropout_rng);
  Var memory = fwd.encode(src);

  LossTerms terms;
  std::vector<Var> parts;
  if (options.mt_weight != 0.0) {
    Packed tin = pack(tgt_in, cfg.d_model);
    Var logits = fwd.decode_logits(memory, src, tin);
    terms.mt = tape.smoothed_cross_entropy(logits, tgt_out, cfg.label_smoothing);
    parts.push_back(options.mt_weight == 1.0 ? terms.mt : tape.scale(terms.mt, options.mt_weight));
  }
  if (options.nvs_weight != 0.0) {
    bool saved = tape.blocking();
    tape.set_blocking(!options.nvs_reaches_encoder);
    Var blocked = tape.boundary(memory, "encoder_output");
    tape.set_blocking(saved);
    Var pooled = fwd.nvs_pooled(blocked, src);
    Matrix targets(batch.size(), cfg.tgt_vocab);
    std::vector<double> weights(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
      BowTarget bow = extract_bow(batch[b], cfg.tgt_vocab);
      for (std::size_t i = 0; i < cfg.tgt_vocab; ++i) targets(b, i) = bow.bits[i];
      weights[b] = cfg.pos_weight.resolve(cfg.tgt_vocab, bow.positives);
    }
    terms.nvs = tape.weighted_bce(pooled, targets, weights);
    parts.push_back(options.nvs_weight == 1.0 ? terms.nvs : tape.scale(terms.nvs, options.nvs_weight));
  }
  require(!parts.empty(), ErrorKind::kInvalidInput, "both loss weights are zero");
  terms.total = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) terms.total = tape.add(terms.total, parts[i]);
  return terms;
}

std::vector<Matrix> encode_packed(const ModelParams& params,
                                  std::span<const std::vector<TokenId>> sources) {
  Tape tape(false);
  auto seqs = with_eos(sources);
  for (const auto& s : sources) {
    for (TokenId id : s) {
      require(id >= 0 && static_cast<std::size_t>(id) < params.config().src_vocab,
              ErrorKind::kInvalidInput, "source id out of range");
    }
  }
  Packed src = pack(seqs, params.config().d_model);
  Forward fwd(tape, params, {}, false, nullptr);
  const Matrix& H = tape.value(fwd.encode(src));
  std::vector<Matrix> out;
  for (const auto& seg : src.segments) {
    Matrix m(seg.length, H.cols());
    for (std::size_t r = 0; r < seg.length; ++r) {
      auto row = H.row(seg.begin + r);
      std::copy(row.begin(), row.end(), m.row(r).begin());
    }
    out.push_back(std::move(m));
  }
  return out;
}

double mt_loss(const ModelParams& params, const SentencePair& pair) {
  Tape tape(false);
  LossOptions opts;
  opts.nvs_weight = 0.0;
  auto terms = model_losses(tape, params, {}, std::span(&pair, 1), opts, nullptr);
  return tape.scalar(terms.mt);
}

double nvs_normalizer(std::size_t vocab_size, std::size_t positives, double pos_weight) {
  return static_cast<double>(vocab_size) + (pos_weight - 1.0) * static_cast<double>(positives);
}

double nvs_loss(std::span<const double> z, const BowTarget& bow, double pos_weight) {
  require(z.size() == bow.vocab_size(), ErrorKind::kShape, "nvs_loss: z and bow differ in length");
  require(pos_weight >= 1.0, ErrorKind::kInvalidInput, "positive weight must be >= 1");
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    double y = bow.bits[i];
    if (y != 0.0) s += pos_weight * std::log(z[i]);
    else s += std::log1p(-z[i]);
  }
  return -s / nvs_normalizer(z.size(), bow.positives, pos_weight);
}

double nvs_loss_from_logits(std::span<const double> logits, const BowTarget& bow, double pos_weight) {
  require(logits.size() == bow.vocab_size(), ErrorKind::kShape,
          "nvs_loss: logits and bow differ in length");
  require(pos_weight >= 1.0, ErrorKind::kInvalidInput, "positive weight must be >= 1");
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (bow.bits[i] != 0) s += pos_weight * log_sigmoid(logits[i]);
    else s += log_sigmoid(-logits[i]);
  }
  return -s / nvs_normalizer(logits.size(), bow.positives, pos_weight);
}

double smoothed_entropy_floor(std::size_t vocab_size, double epsilon) {
  double V = static_cast<double>(vocab_size);
  double hi = 1.0 - epsilon + epsilon / V;
  double lo = epsilon / V;
  double h = -hi * std::log(hi);
  if (lo > 0.0) h -= (V - 1.0) * lo * std::log(lo);
  return h;
}

}  // namespace shortlex
