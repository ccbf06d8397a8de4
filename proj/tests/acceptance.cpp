// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "shortlex/aligner.hpp"
#include "shortlex/bench.hpp"
#include "shortlex/checkpoint.hpp"
#include "shortlex/decoder.hpp"
#include "shortlex/inference.hpp"
#include "shortlex/model.hpp"
#include "shortlex/selection.hpp"
#include "shortlex/synth.hpp"
#include "shortlex/train.hpp"

namespace shortlex {
namespace {

namespace fs = std::filesystem;

constexpr std::size_t kTrainSteps = 6000;
constexpr std::size_t kTrainBatchTokens = 1024;
constexpr std::uint64_t kSeed = 17;

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

void note(const std::string& line) {
  std::fprintf(stderr, "  %s\n", line.c_str());
  std::fflush(stderr);
}

// ---------------------------------------------------------------------------
// Tiny random models

ModelConfig tiny_config(std::size_t vocab, std::size_t d) {
  ModelConfig c;
  c.d_model = d;
  c.encoder_layers = 2;
  c.decoder_layers = 1;
  c.heads = 2;
  c.ffn = 12;
  c.src_vocab = vocab;
  c.tgt_vocab = vocab;
  c.pos_weight.value = 5.0;
  c.dropout = 0.0;
  return c;
}

ModelParams perturbed(const ModelConfig& c, std::uint64_t seed) {
  ModelParams p = ModelParams::initialize(c, seed);
  std::mt19937_64 rng(seed + 1000);
  std::normal_distribution<double> n(0.0, 0.2);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p.at(i).rows() == 1) {
      for (double& v : p.at(i).values()) v += n(rng);
    }
  }
  return p;
}

std::vector<SentencePair> random_batch(std::mt19937_64& rng, std::size_t vocab, std::size_t n) {
  std::uniform_int_distribution<int> id(4, static_cast<int>(vocab) - 1), len(1, 4);
  std::vector<SentencePair> out;
  for (std::size_t i = 0; i < n; ++i) {
    SentencePair p;
    for (int k = len(rng); k > 0; --k) p.source.push_back(id(rng));
    for (int k = len(rng); k > 0; --k) p.target.push_back(id(rng));
    p.target.push_back(kEosId);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<double> flatten(const ModelParams& p) {
  std::vector<double> out;
  for (std::size_t i = 0; i < p.size(); ++i) out.insert(out.end(), p.at(i).values().begin(), p.at(i).values().end());
  return out;
}

void unflatten(ModelParams& p, std::span<const double> flat) {
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (double& v : p.at(i).values()) v = flat[k++];
  }
}

struct Gradients {
  std::vector<Matrix> arrays;
  std::vector<Matrix*> sinks;
  explicit Gradients(const ModelParams& p) {
    for (std::size_t i = 0; i < p.size(); ++i) arrays.emplace_back(p.at(i).rows(), p.at(i).cols());
    for (auto& a : arrays) sinks.push_back(&a);
  }
  std::vector<double> flat() const {
    std::vector<double> out;
    for (const auto& a : arrays) out.insert(out.end(), a.values().begin(), a.values().end());
    return out;
  }
};

// ---------------------------------------------------------------------------
// 1. Gradient fidelity

Outcome gradient_fidelity() {
  std::mt19937_64 rng(101);
  double worst = 0.0, worst_fine = 0.0;
  std::size_t over = 0;
  for (std::uint64_t m = 0; m < 20; ++m) {
    std::size_t vocab = 8 + (m * 7) % 13;  // 8..20
    std::size_t d = m % 2 == 0 ? 8 : 4;
    ModelConfig c = tiny_config(vocab, d);
    ModelParams params = perturbed(c, m);
    auto batch = random_batch(rng, vocab, 2);
    for (int which = 0; which < 3; ++which) {
      LossOptions opts;
      opts.nvs_reaches_encoder = true;
      if (which == 0) opts.nvs_weight = 0.0;
      if (which == 1) opts.mt_weight = 0.0;
      Gradients g(params);
      {
        Tape tape;
        tape.backward(model_losses(tape, params, g.sinks, batch, opts, nullptr).total);
      }
      ModelParams work = params;
      auto f = [&](std::span<const double> x) {
        unflatten(work, x);
        Tape tape(false);
        return tape.scalar(model_losses(tape, work, {}, batch, opts, nullptr).total);
      };
      auto flat = flatten(params);
      double err = relative_error(g.flat(), finite_diff_grad(f, flat, 1e-4));
      if (err >= 1e-4) ++over;
      worst = std::max(worst, err);
      // Diagnostic only: a smaller step separates stencils that straddle a
      // ReLU or max-pool switch from genuine gradient errors.
      worst_fine = std::max(worst_fine, relative_error(g.flat(), finite_diff_grad(f, flat, 1e-5)));
    }
  }
  return {worst < 1e-4, fmt("max relative error %.3g at h=1e-4 (%zu/60 checks >= 1e-4); max %.3g at h=1e-5", worst,
                            over, worst_fine)};
}

// ---------------------------------------------------------------------------
// 2. Gradient blocking

Outcome gradient_blocking() {
  std::mt19937_64 rng(202);
  double max_encoder = 0.0, min_head_norm = std::numeric_limits<double>::infinity();
  for (std::uint64_t m = 0; m < 5; ++m) {
    ModelConfig c = tiny_config(12 + m, 8);
    ModelParams p = perturbed(c, 50 + m);
    auto batch = random_batch(rng, c.tgt_vocab, 3);
    Gradients g(p);
    LossOptions opts;
    opts.mt_weight = 0.0;
    Tape tape;
    tape.backward(model_losses(tape, p, g.sinks, batch, opts, nullptr).total);
    double head = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (double v : g.arrays[i].values()) {
        if (p.spec(i).group == ParamGroup::kNvs) {
          head += v * v;
        } else {
          max_encoder = std::max(max_encoder, std::abs(v));
        }
      }
    }
    min_head_norm = std::min(min_head_norm, std::sqrt(head));
  }
  return {max_encoder == 0.0 && min_head_norm > 0.0,
          fmt("max |grad| outside the head %.3g, min head grad norm %.3g", max_encoder, min_head_norm)};
}

// ---------------------------------------------------------------------------
// 3. Reduced-softmax exactness

ModelConfig small_decoder_config(std::size_t vocab) {
  ModelConfig c;
  c.d_model = 16;
  c.encoder_layers = 1;
  c.decoder_layers = 2;
  c.heads = 2;
  c.ffn = 16;
  c.src_vocab = c.tgt_vocab = vocab;
  return c;
}

ModelParams small_decoder_params(std::size_t vocab, std::uint64_t seed) {
  ModelParams p = ModelParams::initialize(small_decoder_config(vocab), seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 1.5);
  for (double& v : p.get("out.b").values()) v = n(rng);
  p.get("out.b")(0, kEosId) = 1.0;
  return p;
}

std::vector<TokenId> random_source(std::mt19937_64& rng, std::size_t vocab) {
  std::uniform_int_distribution<int> id(4, static_cast<int>(vocab) - 1), len(1, 8);
  std::vector<TokenId> s;
  for (int k = len(rng); k > 0; --k) s.push_back(id(rng));
  return s;
}

Outcome reduced_softmax() {
  constexpr std::size_t kVocab = 40;
  InferenceModel<double> model(small_decoder_params(kVocab, 3));
  std::mt19937_64 rng(303);
  BeamConfig beam;
  SelectorConfig all;
  all.kind = SelectorTag::Kind::kNvs;
  all.lambda = 0.0;
  Translator<double> none(model, {}, beam), full_bow(model, all, beam);
  std::size_t identical = 0;
  for (int i = 0; i < 100; ++i) {
    auto src = random_source(rng, kVocab);
    auto a = none.translate(src), b = full_bow.translate(src);
    if (a.tokens == b.tokens && a.score == b.score && b.vocab_size == kVocab) ++identical;
  }

  // Per-step distributions of the reduced scorer against the masked full one.
  std::bernoulli_distribution keep(0.3);
  std::uniform_int_distribution<int> prev_token(4, static_cast<int>(kVocab) - 1);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    auto enc = model.encode(random_source(rng, kVocab));
    std::vector<TokenId> ids;
    for (TokenId t = 4; t < static_cast<TokenId>(kVocab); ++t) {
      if (keep(rng)) ids.push_back(t);
    }
    auto mapping = build_mapping(BagOfWords(ids, SelectorTag{}), kVocab);
    ModelScorer<double> full(model, enc), reduced(model, enc, mapping, restrict_projection(model, mapping));
    full.reset();
    reduced.reset();
    std::vector<TokenId> last{kBosId};
    EigenRowMajor<double> lp_full, lp_red;
    full.score(last, lp_full);
    reduced.score(last, lp_red);
    if (i % 2 == 1) {  // a second step from a random history
      std::vector<std::size_t> parent{0};
      full.reorder(parent);
      reduced.reorder(parent);
      last[0] = prev_token(rng);
      full.score(last, lp_full);
      reduced.score(last, lp_red);
    }
    std::vector<double> masked(kVocab, -std::numeric_limits<double>::infinity());
    for (TokenId t : mapping.inverse) masked[t] = lp_full(0, t);
    auto expect = softmax(masked);
    for (std::size_t r = 0; r < mapping.reduced_size(); ++r) {
      worst = std::max(worst, std::abs(std::exp(lp_red(0, static_cast<Eigen::Index>(r))) - expect[mapping.inverse[r]]));
    }
  }
  return {identical == 100 && worst <= 1e-6,
          fmt("%zu/100 full-bag decodes bitwise identical; max |p_reduced - p_masked| %.3g over 1000 instances",
              identical, worst)};
}

// ---------------------------------------------------------------------------
// 4. Loss arithmetic

Outcome loss_arithmetic() {
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<std::size_t> vocab_dist(2, 50000);
  std::uniform_real_distribution<double> weight_dist(1.0, 5000.0), factor_dist(0.05, 4.0);
  std::size_t normalizer_ok = 0, ln2_ok = 0, auto_ok = 0;
  double worst_ln2 = 0.0;
  for (int i = 0; i < 1000; ++i) {
    std::size_t V = vocab_dist(rng);
    std::uniform_int_distribution<std::size_t> pos_dist(1, V - 1);
    std::size_t n = pos_dist(rng);
    double w = weight_dist(rng);
    double expect = static_cast<double>(V) + (w - 1.0) * static_cast<double>(n);
    if (std::abs(nvs_normalizer(V, n, w) - expect) <= 1e-9 * expect) ++normalizer_ok;

    // Small vocabulary so the per-element loss is evaluated directly.
    std::size_t v_small = 5 + i % 60;
    std::uniform_int_distribution<int> id(0, static_cast<int>(v_small) - 1), word(4, static_cast<int>(v_small) - 1);
    std::vector<TokenId> target{word(rng)};
    for (int k = 0; k < i % 7; ++k) target.push_back(id(rng));
    BowTarget bow = extract_bow(target, v_small);
    std::vector<double> half(v_small, 0.5);
    double err = std::abs(nvs_loss(half, bow, w) - std::log(2.0));
    worst_ln2 = std::max(worst_ln2, err);
    if (err <= 1e-12) ++ln2_ok;

    // Auto weight against the class counts of an actual bag.
    std::size_t ones = 0;
    for (auto b : bow.bits) ones += b;
    std::size_t zeros = bow.bits.size() - ones;
    double x = factor_dist(rng);
    // The weight is clipped below at 1 so present tokens are never down-weighted.
    double ratio = std::max(1.0, x * static_cast<double>(zeros) / static_cast<double>(ones));
    double from_rule = auto_pos_weight(v_small, bow.positives, x);
    double from_parse = PositiveWeight::parse(fmt("auto:%.17g", x)).resolve(v_small, bow.positives);
    if (std::abs(from_rule - ratio) <= 1e-12 * std::max(1.0, ratio) &&
        std::abs(from_parse - ratio) <= 1e-6 * std::max(1.0, ratio)) {
      ++auto_ok;
    }
  }
  return {normalizer_ok == 1000 && ln2_ok == 1000 && auto_ok == 1000,
          fmt("normalizer %zu/1000, ln2 %zu/1000 (max err %.2g), auto weight %zu/1000", normalizer_ok, ln2_ok,
              worst_ln2, auto_ok)};
}

// ---------------------------------------------------------------------------
// 5. Parameter counts through the checkpoint inspector

Outcome parameter_counts(const fs::path& workdir) {
  ModelConfig c;
  c.d_model = 1024;
  c.heads = 16;
  c.ffn = 4096;
  c.encoder_layers = 1;
  c.decoder_layers = 1;
  c.src_vocab = c.tgt_vocab = 32953;
  fs::path path = workdir / "count.slxm";
  auto specs = param_specs(c);
  {
    CheckpointWriter w(path, c, specs.size());
    for (const auto& s : specs) w.write_zeros(s.name, s.rows, s.cols);
    w.finish();
  }
  CheckpointInfo info = inspect_checkpoint(path);
  std::uint64_t lexicon = lexicon_float_count(200, info.config.tgt_vocab);
  fs::remove(path);
  return {info.counts.nvs == 33776825u && lexicon == 6590600u,
          fmt("NVS floats %llu, lexicon floats at k=200 %llu", static_cast<unsigned long long>(info.counts.nvs),
              static_cast<unsigned long long>(lexicon))};
}

// ---------------------------------------------------------------------------
// 6. Aligner

std::vector<SentencePair> random_corpus(std::uint64_t seed, std::size_t n, int vocab) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> len(1, 7), id(4, vocab - 1);
  std::vector<SentencePair> out;
  for (std::size_t i = 0; i < n; ++i) {
    SentencePair p;
    for (int k = len(rng); k > 0; --k) p.source.push_back(id(rng));
    for (int k = len(rng); k > 0; --k) p.target.push_back(id(rng));
    p.target.push_back(kEosId);
    out.push_back(std::move(p));
  }
  return out;
}

Outcome aligner() {
  double worst_drop = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    AlignOptions opt;
    opt.iterations = 10;
    AlignModel m = em_train(random_corpus(600 + seed, 60, 30), opt);
    const auto& ll = m.log_likelihood();
    for (std::size_t i = 1; i < ll.size(); ++i) worst_drop = std::max(worst_drop, ll[i - 1] - ll[i]);
  }
  // Bijective dictionary over 18 source and 18 target words (vocab 40).
  std::mt19937_64 rng(606);
  std::vector<TokenId> dict(18);
  std::iota(dict.begin(), dict.end(), 22);
  std::shuffle(dict.begin(), dict.end(), rng);
  std::uniform_int_distribution<int> word(0, 17), len(2, 6);
  std::vector<SentencePair> corpus;
  for (int n = 0; n < 50; ++n) {
    SentencePair p;
    for (int k = len(rng); k > 0; --k) {
      int w = word(rng);
      p.source.push_back(4 + w);
      p.target.push_back(dict[w]);
    }
    p.target.push_back(kEosId);
    corpus.push_back(std::move(p));
  }
  TranslationLexicon lex = extract_lexicon(em_train(corpus, AlignOptions{}), 1);
  int found = 0;
  for (int w = 0; w < 18; ++w) {
    auto e = lex.entries(4 + w);
    if (!e.empty() && e[0].target == dict[w]) ++found;
  }
  double recovered = 100.0 * found / 18.0;
  return {worst_drop <= 1e-9 && recovered >= 95.0,
          fmt("largest log-likelihood drop %.3g, top-1 dictionary recovery %.1f%%", worst_drop, recovered)};
}

// ---------------------------------------------------------------------------
// Synthetic end-to-end experiment shared by 7, 8, 10 and 11

struct Experiment {
  SynthTask task;
  SynthData data;
  std::vector<SentencePair> train;
  std::vector<SentencePair> adapt;
  std::vector<EvalItem> test;
  std::vector<EvalItem> idiom_test;
  std::vector<EvalItem> context_test;
  ModelParams params;
  std::optional<InferenceModel<double>> model;
  std::optional<TranslationLexicon> lexicon;
  AlignOptions align_options;
};

std::string to_text(const Vocabulary& vocab, std::span<const TokenId> ids) {
  return strip_markers(vocab.decode(ids));
}

void prepare(Experiment& e, const std::optional<fs::path>& cache) {
  Clock clock;
  e.data = generate_synth(e.task, SynthOptions{});
  const Vocabulary& vocab = e.task.vocab();
  e.train = encode_parallel(vocab, e.data.train);
  auto valid = encode_parallel(vocab, e.data.valid);
  e.adapt = encode_parallel(vocab, e.data.adapt);
  e.test = encode_eval(vocab, e.data.test);
  e.idiom_test = encode_eval(vocab, e.data.idiom_test);
  e.context_test = encode_eval(vocab, e.data.context_test);

  ModelConfig config;
  config.src_vocab = config.tgt_vocab = vocab.size();
  if (cache && fs::exists(*cache)) {
    e.params = load_checkpoint(*cache).params;
    if (!(e.params.config() == config)) fail(ErrorKind::kInvalidInput, "cached model has a different config");
    note(fmt("loaded cached model %s", cache->c_str()));
  } else {
    TrainOptions opts;
    opts.steps = kTrainSteps;
    opts.batch_tokens = kTrainBatchTokens;
    opts.seed = kSeed;
    opts.validate_every = 500;
    opts.on_log = [&](const TrainLogEntry& l) {
      note(fmt("step %5zu  %6.0fs  train mt %.4f nvs %.4f  valid mt %.4f nvs %.4f", l.step, clock.seconds(),
               l.train_mt, l.train_nvs, l.valid_mt.value_or(-1.0), l.valid_nvs.value_or(-1.0)));
    };
    auto result = train(config, e.train, valid, opts);
    // Evaluate the model as it is stored on disk.
    e.params = round_to_float(result.params);
    double first = result.log.front().valid_mt.value_or(0.0);
    double last = result.log.back().valid_mt.value_or(0.0);
    note(fmt("trained %zu steps in %.0fs; valid MT loss %.4f -> %.4f (ratio %.3f)", kTrainSteps, clock.seconds(),
             first, last, last / first));
    if (cache) save_checkpoint(*cache, e.params);
  }
  e.model.emplace(e.params);
  Clock align_clock;
  e.lexicon = extract_lexicon(em_train(e.train, e.align_options), 200);
  note(fmt("alignment lexicon in %.1fs", align_clock.seconds()));
}

// 7. Monotonicity sweeps

Outcome monotone_sweeps(const Experiment& e) {
  auto logits = nvs_logits_for(*e.model, e.test);
  auto lambdas = default_lambda_grid();
  auto nvs = sweep_nvs(logits, e.test, lambdas);
  auto ks = default_k_grid(e.lexicon->k_max(), e.task.vocab().size());
  auto align = sweep_align(*e.lexicon, e.test, ks);
  // On a small vocabulary the k grid collapses to a few points, so every k
  // up to the lexicon's K_max is checked as well.
  std::vector<std::size_t> dense(e.lexicon->k_max());
  std::iota(dense.begin(), dense.end(), std::size_t{1});
  auto align_dense = sweep_align(*e.lexicon, e.test, dense);
  bool ok = sweep_is_monotone(nvs) && sweep_is_monotone(align) && sweep_is_monotone(align_dense);
  return {ok, fmt("NVS sweep (%zu points) size %.1f..%.1f recall %.1f..%.1f; align sweep (%zu grid points, %zu dense) "
                  "size %.1f..%.1f recall %.1f..%.1f",
                  nvs.size(), nvs.front().avg_vocab_size, nvs.back().avg_vocab_size, nvs.front().recall_sentence,
                  nvs.back().recall_sentence, align.size(), align_dense.size(), align_dense.front().avg_vocab_size,
                  align_dense.back().avg_vocab_size, align_dense.front().recall_sentence,
                  align_dense.back().recall_sentence)};
}

// 8. Synthetic end-to-end quality

Outcome synthetic_end_to_end(const Experiment& e) {
  const Vocabulary& vocab = e.task.vocab();
  const double V = static_cast<double>(vocab.size());
  auto logits = nvs_logits_for(*e.model, e.test);
  std::vector<BagOfWords> bows;
  for (const auto& l : logits) bows.push_back(select_nvs_logits(l, 0.9));
  double nvs_recall = corpus_recall(bows, e.test, RecallScope::kSentence);
  double nvs_size = avg_vocab_size(bows);
  bool a = nvs_recall >= 95.0 && nvs_size <= 0.3 * V;

  BeamConfig beam;
  SelectorConfig nvs_sel;
  nvs_sel.kind = SelectorTag::Kind::kNvs;
  nvs_sel.lambda = 0.9;
  Translator<double> full(*e.model, {}, beam), restricted(*e.model, nvs_sel, beam);
  std::vector<std::string> refs, hyp_full, hyp_nvs;
  for (const auto& item : e.test) {
    refs.push_back(to_text(vocab, item.reference));
    hyp_full.push_back(to_text(vocab, full.translate(item.source).tokens));
    hyp_nvs.push_back(to_text(vocab, restricted.translate(item.source).tokens));
  }
  double bleu_full = corpus_bleu(hyp_full, refs).score;
  double bleu_nvs = corpus_bleu(hyp_nvs, refs).score;
  bool b = bleu_nvs >= bleu_full - 0.5;

  // Align k whose average size is closest to the NVS size.
  std::vector<std::size_t> ks(e.lexicon->k_max());
  std::iota(ks.begin(), ks.end(), std::size_t{1});
  auto align = sweep_align(*e.lexicon, e.test, ks);
  const BenchRecord* best = &align.front();
  for (const auto& r : align) {
    if (std::abs(r.avg_vocab_size - nvs_size) < std::abs(best->avg_vocab_size - nvs_size)) best = &r;
  }
  bool matched = std::abs(best->avg_vocab_size - nvs_size) <= 0.1 * nvs_size;
  bool c = matched && best->recall_sentence <= nvs_recall + 1.0;
  return {a && b && c,
          fmt("(a) recall %.2f%% size %.2f (limit %.1f) %s; (b) BLEU nvs %.2f full %.2f %s; (c) align k=%g size %.2f "
              "recall %.2f%% %s",
              nvs_recall, nvs_size, 0.3 * V, a ? "ok" : "FAIL", bleu_nvs, bleu_full, b ? "ok" : "FAIL",
              best->tag.param, best->avg_vocab_size, best->recall_sentence, c ? "ok" : (matched ? "FAIL" : "FAIL: no k within 10%"))};
}

// 9. Latency direction

Outcome latency_direction() {
  constexpr std::size_t kVocab = 32768;
  ModelConfig c;
  c.d_model = 64;
  c.src_vocab = c.tgt_vocab = kVocab;
  ModelParams p = ModelParams::initialize(c, 909);
  // Spread the head's bias so a threshold can pick out about an eighth of the vocabulary.
  std::mt19937_64 rng(910);
  std::normal_distribution<double> n(0.0, 1.0);
  for (double& v : p.get("nvs.b").values()) v = n(rng);
  InferenceModel<float> model(p);

  std::vector<std::vector<TokenId>> sources;
  std::uniform_int_distribution<int> id(4, static_cast<int>(kVocab) - 1), len(5, 12);
  for (int s = 0; s < 10; ++s) {
    std::vector<TokenId> src;
    for (int k = len(rng); k > 0; --k) src.push_back(id(rng));
    sources.push_back(std::move(src));
  }
  std::vector<double> all_logits;
  for (const auto& s : sources) {
    auto l = model.nvs_logits(model.encode(s));
    all_logits.insert(all_logits.end(), l.begin(), l.end());
  }
  std::sort(all_logits.begin(), all_logits.end());
  double cut = all_logits[all_logits.size() - all_logits.size() / 8];
  double lambda = sigmoid(cut);

  BeamConfig beam;
  SelectorConfig sel;
  sel.kind = SelectorTag::Kind::kNvs;
  sel.lambda = lambda;
  Translator<float> full(model, {}, beam), nvs(model, sel, beam);
  LatencySummary lf = time_decode(full, sources, 30);
  LatencySummary ln = time_decode(nvs, sources, 30);
  double target = kVocab / 8.0;
  bool size_ok = std::abs(ln.avg_vocab_size - target) <= 0.1 * target;
  double reduction = 1.0 - ln.decode.p90_ms.mean / lf.decode.p90_ms.mean;
  double overhead = ln.select.mean_ms.mean / lf.decode.mean_ms.mean;
  bool ok = size_ok && reduction >= 0.20 && overhead < 0.15;
  return {ok, fmt("|V| %.0f (target %.0f); decode p90 full %.2f±%.2f ms, nvs %.2f±%.2f ms (%.1f%% lower); "
                  "selection %.3f ms = %.2f%% of full decode",
                  ln.avg_vocab_size, target, lf.decode.p90_ms.mean, lf.decode.p90_ms.half_width,
                  ln.decode.p90_ms.mean, ln.decode.p90_ms.half_width, 100.0 * reduction, ln.select.mean_ms.mean,
                  100.0 * overhead)};
}

// 10. Adaptation

double nvs_span_recall(const InferenceModel<double>& model, std::span<const EvalItem> items, double lambda) {
  auto logits = nvs_logits_for(model, items);
  std::vector<BagOfWords> bows;
  for (const auto& l : logits) bows.push_back(select_nvs_logits(l, lambda));
  return corpus_recall(bows, items, RecallScope::kSpan);
}

double align_span_recall(const TranslationLexicon& lexicon, std::span<const EvalItem> items, std::size_t k) {
  std::vector<BagOfWords> bows;
  for (const auto& item : items) bows.push_back(select_align(lexicon, item.source, k));
  return corpus_recall(bows, items, RecallScope::kSpan);
}

Outcome adaptation(const Experiment& e) {
  double before = nvs_span_recall(*e.model, e.idiom_test, 0.9);
  FinetuneOptions ft;
  ft.epochs = 10;
  ft.lr = 1e-4;
  ft.seed = kSeed;
  InferenceModel<double> tuned(finetune_nvs(e.params, e.adapt, ft));
  double after = nvs_span_recall(tuned, e.idiom_test, 0.9);

  constexpr std::size_t kAlignK = 2;
  TranslationLexicon adapted = extract_lexicon(adapt_lexicon(e.train, e.adapt, 10, e.align_options), 200);
  double align_before = align_span_recall(*e.lexicon, e.idiom_test, kAlignK);
  double align_after = align_span_recall(adapted, e.idiom_test, kAlignK);
  return {after > before && align_after > align_before,
          fmt("NVS span recall at 0.9: %.2f%% -> %.2f%%; align span recall at k=%zu: %.2f%% -> %.2f%%", before,
              after, kAlignK, align_before, align_after)};
}

// 11. Context analysis

Outcome context_analysis(const Experiment& e) {
  std::vector<double> lambdas{0.9, 0.99};
  auto summaries = context_compare(*e.model, e.task.vocab(), e.context_test, lambdas);
  bool ok = summaries.size() == 2;
  std::string detail;
  for (const auto& s : summaries) {
    ok = ok && s.excl_contextual > s.excl_noncontextual;
    detail += fmt("lambda %.2f: all %.1f/%.1f excl %.1f/%.1f; ", s.lambda, s.all_contextual, s.all_noncontextual,
                  s.excl_contextual, s.excl_noncontextual);
  }
  detail += "(contextual/non-contextual %)";
  return {ok, detail};
}

}  // namespace
}  // namespace shortlex

int main(int argc, char** argv) {
  using namespace shortlex;
  CLI::App app{"shortlex acceptance suite"};
  std::set<int> only;
  std::optional<fs::path> cache;
  app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 11));
  app.add_option("--model-cache", cache,
                 "Reuse the synthetic model from this checkpoint, or train and save it there");
  CLI11_PARSE(app, argc, argv);

  auto wanted = [&](int id) { return only.empty() || only.count(id) > 0; };
  fs::path workdir = fs::temp_directory_path() / ("shortlex_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(workdir);

  Experiment experiment;
  bool prepared = false;
  std::exception_ptr prepare_error;
  int failures = 0;
  auto run = [&](int id, const char* name, const std::function<Outcome()>& body) {
    if (!wanted(id)) return;
    Clock clock;
    Outcome out;
    try {
      out = body();
    } catch (const std::exception& ex) {
      out = {false, std::string("error: ") + ex.what()};
    }
    if (!out.pass) ++failures;
    std::printf("%s %2d %s (%.1fs): %s\n", out.pass ? "PASS" : "FAIL", id, name, clock.seconds(), out.detail.c_str());
    std::fflush(stdout);
  };
  auto need_experiment = [&]() {
    if (!prepared) {
      prepared = true;
      try {
        prepare(experiment, cache);
      } catch (...) {
        prepare_error = std::current_exception();
      }
    }
    if (prepare_error) std::rethrow_exception(prepare_error);
    return std::cref(experiment);
  };

  run(1, "gradient fidelity", gradient_fidelity);
  run(2, "gradient blocking", gradient_blocking);
  run(3, "reduced-softmax exactness", reduced_softmax);
  run(4, "loss arithmetic", loss_arithmetic);
  run(5, "parameter counts", [&] { return parameter_counts(workdir); });
  run(6, "aligner", aligner);
  run(7, "monotone sweeps", [&] { return monotone_sweeps(need_experiment()); });
  run(8, "synthetic end-to-end", [&] { return synthetic_end_to_end(need_experiment()); });
  run(9, "latency direction", latency_direction);
  run(10, "adaptation", [&] { return adaptation(need_experiment()); });
  run(11, "context analysis", [&] { return context_analysis(need_experiment()); });

  fs::remove_all(workdir);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
