// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shortlex/shortlex.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "shortlex/aligner.hpp"
#include "shortlex/bench.hpp"
#include "shortlex/checkpoint.hpp"
#include "shortlex/corpus.hpp"
#include "shortlex/decoder.hpp"
#include "shortlex/inference.hpp"
#include "shortlex/selection.hpp"
#include "shortlex/synth.hpp"
#include "shortlex/train.hpp"

using namespace shortlex;

struct slx_vocab {
  Vocabulary vocab;
};

struct slx_lexicon {
  TranslationLexicon lexicon;
  const slx_vocab* vocab = nullptr;
};

struct slx_model {
  ModelParams params;
  Vocabulary vocab;
  slx_precision precision = SLX_PRECISION_DOUBLE;
  std::unique_ptr<InferenceModel<double>> f64;
  std::unique_ptr<InferenceModel<float>> f32;
};

namespace {

thread_local std::string g_last_error;

slx_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return SLX_ERR_INVALID_INPUT;
    case ErrorKind::kShape: return SLX_ERR_SHAPE;
    case ErrorKind::kNumeric: return SLX_ERR_NUMERIC;
    case ErrorKind::kIo: return SLX_ERR_IO;
    case ErrorKind::kFormat: return SLX_ERR_FORMAT;
    case ErrorKind::kTraining: return SLX_ERR_TRAINING;
    case ErrorKind::kInternal: return SLX_ERR_INTERNAL;
  }
  return SLX_ERR_INTERNAL;
}

template <typename F>
slx_status guarded(F&& body) {
  try {
    body();
    return SLX_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SLX_ERR_INTERNAL;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return SLX_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = std::string("internal error: ") + e.what();
    return SLX_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "internal error: unknown exception";
    return SLX_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  require(p != nullptr, ErrorKind::kInvalidInput, std::string(what) + " must not be null");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<std::filesystem::path> paths(const char* const* inputs, std::size_t n) {
  require(n > 0, ErrorKind::kInvalidInput, "at least one input file is required");
  need(inputs, "inputs");
  std::vector<std::filesystem::path> out;
  for (std::size_t i = 0; i < n; ++i) {
    need(inputs[i], "input path");
    out.emplace_back(inputs[i]);
  }
  return out;
}

std::ofstream open_output(const char* path) {
  need(path, "output path");
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, std::string("cannot write ") + path);
  return out;
}

void close_output(std::ofstream& out, const char* path) {
  out.close();
  if (!out) fail(ErrorKind::kIo, std::string("write failed for ") + path);
}

SelectorConfig to_selector(const slx_selector* s) {
  SelectorConfig c;
  if (s == nullptr) return c;
  switch (s->kind) {
    case SLX_SELECTOR_NONE: c.kind = SelectorTag::Kind::kNone; break;
    case SLX_SELECTOR_ALIGN: c.kind = SelectorTag::Kind::kAlign; break;
    case SLX_SELECTOR_NVS: c.kind = SelectorTag::Kind::kNvs; break;
    default: fail(ErrorKind::kInvalidInput, "unknown selector kind " + std::to_string(s->kind));
  }
  c.lambda = s->lambda;
  c.k = s->k;
  if (c.kind == SelectorTag::Kind::kAlign) {
    require(s->lexicon != nullptr, ErrorKind::kInvalidInput, "the align selector needs a lexicon");
    c.lexicon = &s->lexicon->lexicon;
  }
  if (c.kind == SelectorTag::Kind::kNvs) {
    require(c.lambda >= 0.0 && c.lambda < 1.0, ErrorKind::kInvalidInput, "lambda must lie in [0, 1)");
  }
  return c;
}

BeamConfig to_beam(const slx_beam_options* b) {
  BeamConfig c;
  if (b != nullptr) {
    c.beam = b->beam;
    c.alpha = b->alpha;
    c.max_length = b->max_length;
  }
  c.validate();
  return c;
}

std::vector<TokenId> encode_line(const Vocabulary& vocab, const char* line) {
  need(line, "source");
  auto tokens = split_whitespace(line);
  return vocab.encode(tokens);
}

std::string render(const Vocabulary& vocab, std::span<const TokenId> ids) {
  auto subwords = vocab.decode(ids, true);
  return strip_markers(subwords);
}

// Runs `fn` with the translator of the model's precision.
template <typename F>
auto with_translator(const slx_model& m, const SelectorConfig& sel, const BeamConfig& beam, F&& fn) {
  if (m.precision == SLX_PRECISION_FLOAT) {
    Translator<float> t(*m.f32, sel, beam);
    return fn(t);
  }
  Translator<double> t(*m.f64, sel, beam);
  return fn(t);
}

std::vector<std::vector<double>> nvs_logits(const slx_model& m, std::span<const EvalItem> items) {
  return nvs_logits_for(*m.f64, items);
}

void check_model(const slx_model* model) { need(model, "model"); }

ModelConfig to_config(const slx_model_options& o, std::size_t vocab_size) {
  ModelConfig c;
  c.d_model = o.d_model;
  c.encoder_layers = o.encoder_layers;
  c.decoder_layers = o.decoder_layers;
  c.heads = o.heads;
  c.ffn = o.ffn;
  c.label_smoothing = o.label_smoothing;
  if (o.pos_weight != nullptr) c.pos_weight = PositiveWeight::parse(o.pos_weight);
  c.dropout = o.dropout;
  c.src_vocab = vocab_size;
  c.tgt_vocab = vocab_size;
  c.validate();
  return c;
}

std::vector<SentencePair> load_pairs(const Vocabulary& vocab, const char* src, const char* tgt) {
  need(src, "source corpus");
  need(tgt, "target corpus");
  auto text = read_parallel(src, tgt);
  return encode_parallel(vocab, text);
}

void write_latency(std::ostream& out, const LatencySummary& s) {
  auto stage = [&](const char* name, const StageLatency& l) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s_mean_ms\t%.6f\t%.6f\n%s_p90_ms\t%.6f\t%.6f\n", name, l.mean_ms.mean,
                  l.mean_ms.half_width, name, l.p90_ms.mean, l.p90_ms.half_width);
    out << buf;
  };
  out << "# key\tvalue\tci95_half_width\n";
  out << "repetitions\t" << s.repetitions << "\n";
  out << "sentences\t" << s.sentences << "\n";
  out << "avg_vocab_size\t" << s.avg_vocab_size << "\n";
  stage("encode", s.encode);
  stage("select", s.select);
  stage("decode", s.decode);
  stage("total", s.total);
}

}  // namespace

extern "C" {

const char* slx_version(void) { return "1.0.0"; }

const char* slx_last_error(void) { return g_last_error.c_str(); }

const char* slx_status_name(slx_status status) {
  switch (status) {
    case SLX_OK: return "ok";
    case SLX_ERR_INVALID_INPUT: return "invalid input";
    case SLX_ERR_IO: return "i/o error";
    case SLX_ERR_FORMAT: return "format error";
    case SLX_ERR_SHAPE: return "shape error";
    case SLX_ERR_NUMERIC: return "numeric error";
    case SLX_ERR_TRAINING: return "training error";
    case SLX_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void slx_string_free(char* s) { std::free(s); }

// --- vocabulary --------------------------------------------------------------

slx_status slx_vocab_load(const char* path, slx_vocab** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    auto v = std::make_unique<slx_vocab>();
    v->vocab = Vocabulary::load(path);
    *out = v.release();
  });
}

void slx_vocab_free(slx_vocab* vocab) { delete vocab; }

size_t slx_vocab_size(const slx_vocab* vocab) { return vocab == nullptr ? 0 : vocab->vocab.size(); }

int32_t slx_vocab_lookup(const slx_vocab* vocab, const char* token) {
  if (vocab == nullptr || token == nullptr) return kUnkId;
  return vocab->vocab.lookup(token);
}

slx_status slx_vocab_token(const slx_vocab* vocab, int32_t id, char** out) {
  return guarded([&] {
    need(vocab, "vocab");
    need(out, "out");
    require(id >= 0 && static_cast<std::size_t>(id) < vocab->vocab.size(), ErrorKind::kInvalidInput,
            "token id " + std::to_string(id) + " out of range");
    *out = copy_string(vocab->vocab.token(id));
  });
}

// --- lexicon -----------------------------------------------------------------

slx_status slx_lexicon_load(const char* path, const slx_vocab* vocab, slx_lexicon** out) {
  return guarded([&] {
    need(path, "path");
    need(vocab, "vocab");
    need(out, "out");
    *out = nullptr;
    auto l = std::make_unique<slx_lexicon>();
    l->lexicon = TranslationLexicon::load(path, vocab->vocab);
    l->vocab = vocab;
    *out = l.release();
  });
}

void slx_lexicon_free(slx_lexicon* lexicon) { delete lexicon; }

size_t slx_lexicon_k_max(const slx_lexicon* lexicon) { return lexicon == nullptr ? 0 : lexicon->lexicon.k_max(); }

uint64_t slx_lexicon_entry_count(const slx_lexicon* lexicon) {
  return lexicon == nullptr ? 0 : lexicon->lexicon.entry_count();
}

// --- model -------------------------------------------------------------------

slx_status slx_model_load(const char* checkpoint, const slx_vocab* vocab, slx_precision precision,
                          slx_model** out) {
  return guarded([&] {
    need(checkpoint, "checkpoint");
    need(vocab, "vocab");
    need(out, "out");
    *out = nullptr;
    require(precision == SLX_PRECISION_DOUBLE || precision == SLX_PRECISION_FLOAT, ErrorKind::kInvalidInput,
            "unknown precision");
    auto m = std::make_unique<slx_model>();
    m->params = load_checkpoint(checkpoint).params;
    const auto& c = m->params.config();
    require(c.src_vocab == vocab->vocab.size() && c.tgt_vocab == vocab->vocab.size(), ErrorKind::kInvalidInput,
            "vocabulary has " + std::to_string(vocab->vocab.size()) + " tokens but the model expects " +
                std::to_string(c.tgt_vocab));
    m->vocab = vocab->vocab;
    m->precision = precision;
    m->f64 = std::make_unique<InferenceModel<double>>(m->params);
    if (precision == SLX_PRECISION_FLOAT) m->f32 = std::make_unique<InferenceModel<float>>(m->params);
    *out = m.release();
  });
}

void slx_model_free(slx_model* model) { delete model; }

size_t slx_model_vocab_size(const slx_model* model) {
  return model == nullptr ? 0 : model->params.config().tgt_vocab;
}

uint64_t slx_model_nvs_parameter_count(const slx_model* model) {
  return model == nullptr ? 0 : count_parameters(model->params.config()).nvs;
}

void slx_selector_init(slx_selector* selector) {
  if (selector == nullptr) return;
  selector->kind = SLX_SELECTOR_NONE;
  selector->lambda = 0.9;
  selector->k = 200;
  selector->lexicon = nullptr;
}

void slx_beam_options_init(slx_beam_options* options) {
  if (options == nullptr) return;
  BeamConfig d;
  options->beam = d.beam;
  options->alpha = d.alpha;
  options->max_length = 0;
}

slx_status slx_model_translate(const slx_model* model, const char* source, const slx_selector* selector,
                               const slx_beam_options* beam, char** out, slx_translation* info) {
  return guarded([&] {
    check_model(model);
    need(out, "out");
    *out = nullptr;
    auto ids = encode_line(model->vocab, source);
    auto result = with_translator(*model, to_selector(selector), to_beam(beam),
                                  [&](const auto& t) { return t.translate(ids); });
    if (info != nullptr) {
      *info = {result.score, result.log_prob, result.vocab_size, result.times.encode_ms, result.times.select_ms,
               result.times.decode_ms};
    }
    *out = copy_string(render(model->vocab, result.tokens));
  });
}

slx_status slx_model_select(const slx_model* model, const char* source, const slx_selector* selector, char** out) {
  return guarded([&] {
    check_model(model);
    need(out, "out");
    *out = nullptr;
    auto ids = encode_line(model->vocab, source);
    auto bow = with_translator(*model, to_selector(selector), BeamConfig{},
                               [&](const auto& t) { return t.select(ids); });
    *out = copy_string(format_bow(bow, model->vocab));
  });
}

// --- preprocessing -----------------------------------------------------------

slx_status slx_bpe_learn(const char* const* inputs, size_t num_inputs, size_t merges, const char* out_merges) {
  return guarded([&] {
    need(out_merges, "output path");
    std::vector<std::vector<std::string>> corpus;
    for (const auto& p : paths(inputs, num_inputs)) {
      for (const auto& line : read_lines(p)) corpus.push_back(tokenize(line));
    }
    bpe_learn(corpus, merges).save(out_merges);
  });
}

slx_status slx_bpe_apply(const char* merges, const char* input, const char* output) {
  return guarded([&] {
    need(merges, "merges");
    need(input, "input");
    auto model = BpeModel::load(merges);
    std::vector<std::string> out;
    for (const auto& line : read_lines(input)) {
      auto words = tokenize(line);
      out.push_back(join(model.apply_sentence(words)));
    }
    need(output, "output");
    write_lines(output, out);
  });
}

slx_status slx_vocab_build(const char* const* inputs, size_t num_inputs, const char* out_vocab) {
  return guarded([&] {
    need(out_vocab, "output path");
    std::vector<std::vector<std::string>> corpus;
    for (const auto& p : paths(inputs, num_inputs)) {
      for (const auto& line : read_lines(p)) corpus.push_back(split_whitespace(line));
    }
    build_vocabulary(corpus).save(out_vocab);
  });
}

void slx_clean_options_init(slx_clean_options* options) {
  if (options == nullptr) return;
  CleanOptions d;
  options->max_ratio = d.max_ratio;
  options->max_overlap = d.max_overlap;
  options->max_len = d.max_len;
}

slx_status slx_clean(const char* src, const char* tgt, const char* out_src, const char* out_tgt,
                     const char* rejections, const slx_clean_options* options, size_t* kept, size_t* dropped) {
  return guarded([&] {
    need(src, "source");
    need(tgt, "target");
    need(out_src, "output source");
    need(out_tgt, "output target");
    CleanOptions opts;
    if (options != nullptr) {
      opts.max_ratio = options->max_ratio;
      opts.max_overlap = options->max_overlap;
      opts.max_len = options->max_len;
    }
    auto pairs = read_parallel(src, tgt);
    auto result = clean_pairs(pairs, opts);
    std::vector<std::string> s, t;
    for (auto i : result.kept) {
      s.push_back(join(pairs[i].source));
      t.push_back(join(pairs[i].target));
    }
    write_lines(out_src, s);
    write_lines(out_tgt, t);
    if (rejections != nullptr) {
      std::vector<std::string> lines;
      for (const auto& r : result.rejected) lines.push_back(std::to_string(r.index + 1) + "\t" + to_string(r.rule));
      write_lines(rejections, lines);
    }
    if (kept != nullptr) *kept = result.kept.size();
    if (dropped != nullptr) *dropped = result.rejected.size();
  });
}

// --- alignment ---------------------------------------------------------------

void slx_align_options_init(slx_align_options* options) {
  if (options == nullptr) return;
  AlignOptions d;
  options->iterations = d.iterations;
  options->diagonal_tension = d.diagonal_tension;
  options->threads = d.threads;
  options->adapt_src = nullptr;
  options->adapt_tgt = nullptr;
  options->upsample = 10;
}

slx_status slx_align_train(const char* src, const char* tgt, const char* vocab, const slx_align_options* options,
                           const char* out_model) {
  return guarded([&] {
    need(vocab, "vocab");
    need(out_model, "output path");
    slx_align_options o;
    slx_align_options_init(&o);
    if (options != nullptr) o = *options;
    auto v = Vocabulary::load(vocab);
    auto pairs = load_pairs(v, src, tgt);
    AlignOptions ao;
    ao.iterations = o.iterations;
    ao.diagonal_tension = o.diagonal_tension;
    ao.threads = o.threads;
    AlignModel model;
    if (o.adapt_src != nullptr || o.adapt_tgt != nullptr) {
      auto adapt = load_pairs(v, o.adapt_src, o.adapt_tgt);
      model = adapt_lexicon(pairs, adapt, o.upsample, ao);
    } else {
      model = em_train(pairs, ao);
    }
    model.save(out_model, v);
  });
}

slx_status slx_lexicon_extract(const char* align_model, const char* vocab, size_t k_max, const char* out_lexicon) {
  return guarded([&] {
    need(align_model, "align model");
    need(vocab, "vocab");
    need(out_lexicon, "output path");
    auto v = Vocabulary::load(vocab);
    auto model = AlignModel::load(align_model, v);
    extract_lexicon(model, k_max).save(out_lexicon, v);
  });
}

// --- training ----------------------------------------------------------------

void slx_train_options_init(slx_train_options* options) {
  if (options == nullptr) return;
  ModelConfig c;
  TrainOptions t;
  options->model = {c.d_model, c.encoder_layers, c.decoder_layers, c.heads, c.ffn, c.label_smoothing, nullptr,
                    c.dropout};
  options->steps = t.steps;
  options->batch_tokens = t.batch_tokens;
  options->lr = t.adam.lr;
  options->warmup = t.adam.warmup;
  options->seed = t.seed;
  options->validate_every = t.validate_every;
  options->log = nullptr;
}

slx_status slx_train(const char* src, const char* tgt, const char* valid_src, const char* valid_tgt,
                     const char* vocab, const slx_train_options* options, const char* out_checkpoint) {
  return guarded([&] {
    need(vocab, "vocab");
    need(out_checkpoint, "output path");
    slx_train_options o;
    slx_train_options_init(&o);
    if (options != nullptr) o = *options;
    auto v = Vocabulary::load(vocab);
    auto train_pairs = load_pairs(v, src, tgt);
    std::vector<SentencePair> valid;
    if (valid_src != nullptr || valid_tgt != nullptr) valid = load_pairs(v, valid_src, valid_tgt);
    ModelConfig config = to_config(o.model, v.size());

    TrainOptions t;
    t.steps = o.steps;
    t.batch_tokens = o.batch_tokens;
    t.adam.lr = o.lr;
    t.adam.warmup = o.warmup;
    t.seed = o.seed;
    t.validate_every = o.validate_every;
    std::ofstream log;
    if (o.log != nullptr) {
      log = open_output(o.log);
      log << "step\tlr\ttrain_mt\ttrain_nvs\tvalid_mt\tvalid_nvs\n";
    }
    t.on_log = [&](const TrainLogEntry& e) {
      char buf[256];
      std::snprintf(buf, sizeof(buf), "%zu\t%.6g\t%.6f\t%.6f\t%s\t%s", e.step, e.lr, e.train_mt, e.train_nvs,
                    e.valid_mt ? std::to_string(*e.valid_mt).c_str() : "-",
                    e.valid_nvs ? std::to_string(*e.valid_nvs).c_str() : "-");
      std::cerr << "step " << buf << '\n';
      if (log.is_open()) log << buf << '\n';
    };
    auto result = train(config, train_pairs, valid, t);
    if (log.is_open()) close_output(log, o.log);
    save_checkpoint(out_checkpoint, result.params, {{"vocab", std::filesystem::absolute(vocab).string()}});
  });
}

void slx_finetune_options_init(slx_finetune_options* options) {
  if (options == nullptr) return;
  FinetuneOptions d;
  options->epochs = d.epochs;
  options->lr = d.lr;
  options->batch_tokens = d.batch_tokens;
  options->full_model = d.full_model ? 1 : 0;
  options->seed = d.seed;
}

slx_status slx_finetune(const char* checkpoint, const char* vocab, const char* src, const char* tgt,
                        const slx_finetune_options* options, const char* out_checkpoint) {
  return guarded([&] {
    need(checkpoint, "checkpoint");
    need(vocab, "vocab");
    need(out_checkpoint, "output path");
    slx_finetune_options o;
    slx_finetune_options_init(&o);
    if (options != nullptr) o = *options;
    auto v = Vocabulary::load(vocab);
    auto ckpt = load_checkpoint(checkpoint);
    require(ckpt.params.config().tgt_vocab == v.size(), ErrorKind::kInvalidInput,
            "vocabulary does not match the checkpoint");
    auto adapt = load_pairs(v, src, tgt);
    FinetuneOptions f;
    f.epochs = o.epochs;
    f.lr = o.lr;
    f.batch_tokens = o.batch_tokens;
    f.full_model = o.full_model != 0;
    f.seed = o.seed;
    auto tuned = finetune_nvs(ckpt.params, adapt, f);
    save_checkpoint(out_checkpoint, tuned, ckpt.meta);
  });
}

// --- translation -------------------------------------------------------------

slx_status slx_translate_file(const slx_model* model, const slx_selector* selector, const slx_beam_options* beam,
                              const char* input, const char* output, const char* side,
                              slx_translate_summary* summary) {
  return guarded([&] {
    check_model(model);
    need(input, "input");
    auto lines = read_lines(input);
    auto sel = to_selector(selector);
    auto bc = to_beam(beam);
    std::vector<std::string> out, side_lines;
    double vocab_sum = 0.0, total_ms = 0.0;
    with_translator(*model, sel, bc, [&](const auto& t) {
      for (const auto& line : lines) {
        auto ids = model->vocab.encode(split_whitespace(line));
        DecodeResult r = ids.empty() ? DecodeResult{} : t.translate(ids);
        out.push_back(render(model->vocab, r.tokens));
        vocab_sum += static_cast<double>(r.vocab_size);
        total_ms += r.times.total_ms();
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%zu\t%.6f\t%.4f\t%.4f\t%.4f", r.vocab_size, r.score, r.times.encode_ms,
                      r.times.select_ms, r.times.decode_ms);
        side_lines.push_back(buf);
      }
      return 0;
    });
    need(output, "output");
    write_lines(output, out);
    if (side != nullptr) write_lines(side, side_lines);
    if (summary != nullptr) {
      summary->sentences = lines.size();
      summary->avg_vocab_size = lines.empty() ? 0.0 : vocab_sum / static_cast<double>(lines.size());
      summary->total_ms = total_ms;
    }
  });
}

slx_status slx_bow_file(const slx_model* model, const slx_selector* selector, const char* input,
                        const char* output) {
  return guarded([&] {
    check_model(model);
    need(input, "input");
    need(output, "output");
    auto sel = to_selector(selector);
    std::vector<BagOfWords> bows;
    with_translator(*model, sel, BeamConfig{}, [&](const auto& t) {
      for (const auto& line : read_lines(input)) bows.push_back(t.select(model->vocab.encode(split_whitespace(line))));
      return 0;
    });
    write_bow_dump(output, bows, model->vocab);
  });
}

// --- benches -----------------------------------------------------------------

namespace {

const Vocabulary& bench_vocab(const slx_model* model, const slx_vocab* vocab) {
  if (model != nullptr) return model->vocab;
  require(vocab != nullptr, ErrorKind::kInvalidInput, "a model or a vocabulary is required");
  return vocab->vocab;
}

std::vector<BagOfWords> select_all(const slx_model* model, const SelectorConfig& sel,
                                   std::span<const EvalItem> items) {
  std::vector<BagOfWords> bows;
  bows.reserve(items.size());
  if (sel.kind == SelectorTag::Kind::kAlign) {
    for (const auto& it : items) bows.push_back(select_align(*sel.lexicon, it.source, sel.k));
    return bows;
  }
  require(model != nullptr, ErrorKind::kInvalidInput, "this selector needs a model");
  if (sel.kind == SelectorTag::Kind::kNone) {
    std::vector<TokenId> all(model->vocab.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<TokenId>(i);
    for (std::size_t i = 0; i < items.size(); ++i) bows.emplace_back(all, SelectorTag{});
    return bows;
  }
  for (const auto& l : nvs_logits(*model, items)) bows.push_back(select_nvs_logits(l, sel.lambda));
  return bows;
}

}  // namespace

slx_status slx_bench_recall(const slx_model* model, const slx_vocab* vocab, const slx_selector* selector,
                            const char* eval, int micro, slx_recall* out) {
  return guarded([&] {
    need(eval, "eval set");
    need(out, "out");
    auto sel = to_selector(selector);
    auto items = encode_eval(bench_vocab(model, vocab), read_eval_tsv(eval));
    require(!items.empty(), ErrorKind::kInvalidInput, "eval set is empty");
    auto bows = select_all(model, sel, items);
    Averaging avg = micro ? Averaging::kMicro : Averaging::kMacro;
    out->recall_sentence = corpus_recall(bows, items, RecallScope::kSentence, avg);
    bool spans = std::all_of(items.begin(), items.end(), [](const EvalItem& i) { return i.has_spans(); });
    out->recall_span = spans ? corpus_recall(bows, items, RecallScope::kSpan, avg) : -1.0;
    out->avg_vocab_size = avg_vocab_size(bows);
    out->sentences = items.size();
  });
}

slx_status slx_bench_sweep(const slx_model* model, const slx_vocab* vocab, const slx_selector* selector,
                           const char* eval, const double* grid, size_t grid_size, int micro, const char* out_csv) {
  return guarded([&] {
    need(eval, "eval set");
    need(selector, "selector");
    auto sel = to_selector(selector);
    require(grid_size == 0 || grid != nullptr, ErrorKind::kInvalidInput, "grid must not be null");
    auto items = encode_eval(bench_vocab(model, vocab), read_eval_tsv(eval));
    require(!items.empty(), ErrorKind::kInvalidInput, "eval set is empty");
    Averaging avg = micro ? Averaging::kMicro : Averaging::kMacro;
    std::vector<BenchRecord> records;
    if (sel.kind == SelectorTag::Kind::kNvs) {
      check_model(model);
      std::vector<double> lambdas = grid_size == 0 ? default_lambda_grid() : std::vector<double>(grid, grid + grid_size);
      records = sweep_nvs(nvs_logits(*model, items), items, lambdas, avg);
    } else if (sel.kind == SelectorTag::Kind::kAlign) {
      std::vector<std::size_t> ks;
      if (grid_size == 0) {
        std::size_t v = bench_vocab(model, vocab).size();
        ks = default_k_grid(sel.lexicon->k_max(), v);
      } else {
        for (std::size_t i = 0; i < grid_size; ++i) {
          require(grid[i] >= 1 && std::floor(grid[i]) == grid[i], ErrorKind::kInvalidInput,
                  "k grid values must be positive integers");
          ks.push_back(static_cast<std::size_t>(grid[i]));
        }
      }
      records = sweep_align(*sel.lexicon, items, ks, avg);
    } else {
      fail(ErrorKind::kInvalidInput, "sweeps need the nvs or align selector");
    }
    auto out = open_output(out_csv);
    write_sweep_csv(out, records);
    close_output(out, out_csv);
  });
}

slx_status slx_bench_latency(const slx_model* model, const slx_selector* selector, const slx_beam_options* beam,
                             const char* input, size_t repetitions, const char* out_report) {
  return guarded([&] {
    check_model(model);
    need(input, "input");
    require(repetitions >= 2, ErrorKind::kInvalidInput, "latency needs at least two repetitions");
    std::vector<std::vector<TokenId>> sources;
    for (const auto& line : read_lines(input)) {
      auto ids = model->vocab.encode(split_whitespace(line));
      if (!ids.empty()) sources.push_back(std::move(ids));
    }
    require(!sources.empty(), ErrorKind::kInvalidInput, "no source sentences in " + std::string(input));
    auto summary = with_translator(*model, to_selector(selector), to_beam(beam),
                                   [&](const auto& t) { return time_decode(t, sources, repetitions); });
    auto out = open_output(out_report);
    write_latency(out, summary);
    close_output(out, out_report);
  });
}

slx_status slx_bench_context(const slx_model* model, const char* eval, const double* lambdas, size_t num_lambdas,
                             const char* out_report) {
  return guarded([&] {
    check_model(model);
    need(eval, "eval set");
    std::vector<double> ls = num_lambdas == 0 ? std::vector<double>{0.9, 0.99}
                                              : std::vector<double>(lambdas, lambdas + num_lambdas);
    for (double l : ls) require(l >= 0.0 && l < 1.0, ErrorKind::kInvalidInput, "lambda must lie in [0, 1)");
    auto items = encode_eval(model->vocab, read_eval_tsv(eval));
    auto summaries = context_compare(*model->f64, model->vocab, items, ls);
    auto out = open_output(out_report);
    write_context_report(out, summaries);
    close_output(out, out_report);
  });
}

slx_status slx_eval_bleu(const char* hypotheses, const char* references, slx_bleu* out) {
  return guarded([&] {
    need(hypotheses, "hypotheses");
    need(references, "references");
    need(out, "out");
    auto hyp = read_lines(hypotheses);
    auto ref = read_lines(references);
    auto r = corpus_bleu(hyp, ref);
    out->score = r.score;
    out->brevity_penalty = r.brevity_penalty;
    for (int i = 0; i < 4; ++i) out->precisions[i] = r.precisions[i];
    out->hyp_length = r.hyp_length;
    out->ref_length = r.ref_length;
  });
}

slx_status slx_inspect_checkpoint(const char* checkpoint, size_t lexicon_k, char** out_report) {
  return guarded([&] {
    need(checkpoint, "checkpoint");
    need(out_report, "out");
    *out_report = nullptr;
    auto info = inspect_checkpoint(checkpoint);
    std::ostringstream os;
    os << "file\t" << checkpoint << "\n";
    os << "bytes\t" << info.file_bytes << "\n";
    for (const auto& [k, v] : info.config.to_kv()) os << "config." << k << "\t" << v << "\n";
    for (const auto& [k, v] : info.meta) os << "meta." << k << "\t" << v << "\n";
    os << "arrays\t" << info.arrays.size() << "\n";
    const auto& c = info.counts;
    os << "params.source_embedding\t" << c.source_embedding << "\n";
    os << "params.target_embedding\t" << c.target_embedding << "\n";
    os << "params.encoder\t" << c.encoder << "\n";
    os << "params.decoder\t" << c.decoder << "\n";
    os << "params.output\t" << c.output << "\n";
    os << "params.nvs\t" << c.nvs << "\n";
    os << "params.total\t" << c.total << "\n";
    if (lexicon_k > 0) {
      os << "lexicon.k\t" << lexicon_k << "\n";
      os << "lexicon.entries\t" << lexicon_float_count(lexicon_k, info.config.tgt_vocab) << "\n";
    }
    *out_report = copy_string(os.str());
  });
}

void slx_synth_options_init(slx_synth_options* options) {
  if (options == nullptr) return;
  SynthOptions d;
  options->seed = d.seed;
  options->train_pairs = d.train_pairs;
  options->test_sentences = d.test_sentences;
  options->adapt_pairs = d.adapt_pairs;
}

slx_status slx_synth(const char* out_dir, const slx_synth_options* options) {
  return guarded([&] {
    need(out_dir, "output directory");
    SynthOptions o;
    if (options != nullptr) {
      o.seed = options->seed;
      o.train_pairs = options->train_pairs;
      o.test_sentences = options->test_sentences;
      o.adapt_pairs = options->adapt_pairs;
    }
    SynthTask task;
    write_synth(out_dir, task, generate_synth(task, o));
  });
}

}  // extern "C"
