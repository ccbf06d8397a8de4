// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shortlex/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <regex>
#include <set>

namespace shortlex {

// ---------------------------------------------------------------------------
// Eval sets

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

TokenSpan parse_span(const std::string& text, std::size_t length, std::size_t line_no) {
  auto colon = text.find(':');
  auto bad = [&] {
    fail(ErrorKind::kFormat, "eval line " + std::to_string(line_no) + ": bad span '" + text + "'");
  };
  if (colon == std::string::npos) bad();
  TokenSpan s;
  try {
    std::size_t used = 0;
    s.begin = std::stoul(text.substr(0, colon), &used);
    if (used != colon) bad();
    std::string rest = text.substr(colon + 1);
    s.end = std::stoul(rest, &used);
    if (used != rest.size()) bad();
  } catch (const std::logic_error&) {
    bad();
  }
  if (!(s.begin < s.end && s.end <= length)) {
    fail(ErrorKind::kFormat, "eval line " + std::to_string(line_no) + ": span " + text +
                                 " is empty or outside a sentence of " + std::to_string(length) + " tokens");
  }
  return s;
}

}  // namespace

std::vector<EvalText> read_eval_tsv(const std::filesystem::path& path) {
  std::vector<EvalText> items;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 2 && cols.size() != 4) {
      fail(ErrorKind::kFormat, path.string() + ":" + std::to_string(line_no) + ": expected 2 or 4 tab-separated columns");
    }
    EvalText t;
    t.source = split_whitespace(cols[0]);
    t.reference = split_whitespace(cols[1]);
    if (cols.size() == 4) {
      t.source_span = parse_span(cols[2], t.source.size(), line_no);
      t.reference_span = parse_span(cols[3], t.reference.size(), line_no);
    }
    items.push_back(std::move(t));
  }
  return items;
}

void write_eval_tsv(const std::filesystem::path& path, std::span<const EvalText> items) {
  std::vector<std::string> lines;
  lines.reserve(items.size());
  for (const auto& t : items) {
    std::string line = join(t.source) + "\t" + join(t.reference);
    if (t.source_span && t.reference_span) {
      line += "\t" + std::to_string(t.source_span->begin) + ":" + std::to_string(t.source_span->end);
      line += "\t" + std::to_string(t.reference_span->begin) + ":" + std::to_string(t.reference_span->end);
    }
    lines.push_back(std::move(line));
  }
  write_lines(path, lines);
}

EvalItem encode_eval(const Vocabulary& vocab, const EvalText& text) {
  EvalItem item{vocab.encode(text.source), vocab.encode(text.reference), text.source_span, text.reference_span};
  if (item.source_span) {
    require(item.source_span->end <= item.source.size(), ErrorKind::kInvalidInput, "source span outside sentence");
  }
  if (item.reference_span) {
    require(item.reference_span->end <= item.reference.size(), ErrorKind::kInvalidInput,
            "reference span outside sentence");
  }
  return item;
}

std::vector<EvalItem> encode_eval(const Vocabulary& vocab, std::span<const EvalText> texts) {
  std::vector<EvalItem> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(encode_eval(vocab, t));
  return out;
}

// ---------------------------------------------------------------------------
// Recall

std::vector<TokenId> scoped_reference(const EvalItem& item, RecallScope scope) {
  std::size_t begin = 0, end = item.reference.size();
  if (scope == RecallScope::kSpan) {
    require(item.reference_span.has_value(), ErrorKind::kInvalidInput,
            "span recall requested for an item without span annotation");
    begin = item.reference_span->begin;
    end = item.reference_span->end;
  }
  std::set<TokenId> ids;
  for (std::size_t i = begin; i < end; ++i) {
    if (!is_special(item.reference[i])) ids.insert(item.reference[i]);
  }
  return {ids.begin(), ids.end()};
}

std::optional<double> recall(const BagOfWords& bow, const EvalItem& item, RecallScope scope) {
  auto ref = scoped_reference(item, scope);
  if (ref.empty()) return std::nullopt;
  std::size_t hit = 0;
  for (TokenId id : ref) hit += bow.contains(id) ? 1 : 0;
  return 100.0 * static_cast<double>(hit) / static_cast<double>(ref.size());
}

double corpus_recall(std::span<const BagOfWords> bows, std::span<const EvalItem> items, RecallScope scope,
                     Averaging averaging) {
  require(bows.size() == items.size(), ErrorKind::kInvalidInput, "one bag of words per eval item");
  require(!items.empty(), ErrorKind::kInvalidInput, "empty eval set");
  double sum = 0.0;
  std::size_t counted = 0, hits = 0, total = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto ref = scoped_reference(items[i], scope);
    if (ref.empty()) continue;
    std::size_t h = 0;
    for (TokenId id : ref) h += bows[i].contains(id) ? 1 : 0;
    sum += 100.0 * static_cast<double>(h) / static_cast<double>(ref.size());
    ++counted;
    hits += h;
    total += ref.size();
  }
  require(counted > 0, ErrorKind::kInvalidInput, "no eval item has a countable reference token");
  if (averaging == Averaging::kMicro) return 100.0 * static_cast<double>(hits) / static_cast<double>(total);
  return sum / static_cast<double>(counted);
}

double avg_vocab_size(std::span<const BagOfWords> bows) {
  require(!bows.empty(), ErrorKind::kInvalidInput, "average vocabulary size of no sentences");
  double s = 0.0;
  for (const auto& b : bows) s += static_cast<double>(b.size());
  return s / static_cast<double>(bows.size());
}

// ---------------------------------------------------------------------------
// Sweeps

std::vector<double> default_lambda_grid() { return {0.99, 0.9, 0.5, 0.1, 0.01, 1e-3, 1e-4, 1e-5, 1e-6}; }

std::vector<std::size_t> default_k_grid(std::size_t k_max, std::size_t vocab_size) {
  std::size_t cap = std::min(k_max, vocab_size);
  require(cap >= 1, ErrorKind::kInvalidInput, "k grid needs K_max >= 1");
  std::vector<std::size_t> out;
  auto push = [&](std::size_t k) {
    k = std::min(k, cap);
    if (out.empty() || out.back() != k) out.push_back(k);
  };
  for (std::size_t k = 100; k <= 1000; k += 100) push(k);
  for (std::size_t k = 2000; k <= 10000; k += 1000) push(k);
  return out;
}

std::vector<std::vector<double>> nvs_logits_for(const InferenceModel<double>& model, std::span<const EvalItem> items) {
  std::vector<std::vector<double>> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(model.nvs_logits(model.encode(it.source)));
  return out;
}

namespace {

BenchRecord make_record(SelectorTag tag, std::span<const BagOfWords> bows, std::span<const EvalItem> items,
                        Averaging averaging) {
  BenchRecord r;
  r.tag = tag;
  r.avg_vocab_size = avg_vocab_size(bows);
  r.recall_sentence = corpus_recall(bows, items, RecallScope::kSentence, averaging);
  bool spans = std::all_of(items.begin(), items.end(), [](const EvalItem& i) { return i.has_spans(); });
  if (spans) r.recall_span = corpus_recall(bows, items, RecallScope::kSpan, averaging);
  return r;
}

}  // namespace

std::vector<BenchRecord> sweep_nvs(std::span<const std::vector<double>> logits, std::span<const EvalItem> items,
                                   std::span<const double> lambdas, Averaging averaging) {
  require(!lambdas.empty(), ErrorKind::kInvalidInput, "empty lambda grid");
  require(logits.size() == items.size(), ErrorKind::kInvalidInput, "one logit vector per eval item");
  std::vector<BenchRecord> out;
  for (double lambda : lambdas) {
    std::vector<BagOfWords> bows;
    bows.reserve(items.size());
    for (const auto& l : logits) bows.push_back(select_nvs_logits(l, lambda));
    out.push_back(make_record({SelectorTag::Kind::kNvs, lambda}, bows, items, averaging));
  }
  return out;
}

std::vector<BenchRecord> sweep_align(const TranslationLexicon& lexicon, std::span<const EvalItem> items,
                                     std::span<const std::size_t> ks, Averaging averaging) {
  require(!ks.empty(), ErrorKind::kInvalidInput, "empty k grid");
  std::vector<BenchRecord> out;
  for (std::size_t k : ks) {
    std::vector<BagOfWords> bows;
    bows.reserve(items.size());
    for (const auto& it : items) bows.push_back(select_align(lexicon, it.source, k));
    out.push_back(make_record({SelectorTag::Kind::kAlign, static_cast<double>(k)}, bows, items, averaging));
  }
  return out;
}

void write_sweep_csv(std::ostream& out, std::span<const BenchRecord> records) {
  out << "selector,param,avg_vocab_size,recall_sentence,recall_span\n";
  char buf[256];
  for (const auto& r : records) {
    const char* sel = r.tag.kind == SelectorTag::Kind::kNvs ? "nvs" : r.tag.kind == SelectorTag::Kind::kAlign ? "align" : "none";
    std::string span = r.recall_span ? std::to_string(*r.recall_span) : "";
    if (r.recall_span) {
      std::snprintf(buf, sizeof(buf), "%.4f", *r.recall_span);
      span = buf;
    }
    std::snprintf(buf, sizeof(buf), "%s,%g,%.4f,%.4f,", sel, r.tag.param, r.avg_vocab_size, r.recall_sentence);
    out << buf << span << '\n';
  }
}

bool sweep_is_monotone(std::span<const BenchRecord> records) {
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& a = records[i - 1];
    const auto& b = records[i];
    if (b.avg_vocab_size < a.avg_vocab_size) return false;
    if (b.recall_sentence < a.recall_sentence) return false;
    if (a.recall_span && b.recall_span && *b.recall_span < *a.recall_span) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// BLEU

std::vector<std::string> tokenize_13a(std::string_view line_in) {
  std::string line(line_in);
  auto replace_all = [&](const std::string& from, const std::string& to) {
    std::size_t pos = 0;
    while ((pos = line.find(from, pos)) != std::string::npos) {
      line.replace(pos, from.size(), to);
      pos += to.size();
    }
  };
  replace_all("<skipped>", "");
  replace_all("-\n", "");
  replace_all("\n", " ");
  if (line.find('&') != std::string::npos) {
    replace_all("&quot;", "\"");
    replace_all("&amp;", "&");
    replace_all("&lt;", "<");
    replace_all("&gt;", ">");
  }
  static const std::regex punct(R"(([\{-\~\[-\` -\&\(-\+\:-\@\/]))");
  static const std::regex period_a(R"(([^0-9])([\.,]))");
  static const std::regex period_b(R"(([\.,])([^0-9]))");
  static const std::regex dash(R"(([0-9])(-))");
  line = " " + line + " ";
  line = std::regex_replace(line, punct, " $1 ");
  line = std::regex_replace(line, period_a, "$1 $2 ");
  line = std::regex_replace(line, period_b, " $1 $2");
  line = std::regex_replace(line, dash, "$1 $2 ");
  return split_whitespace(line);
}

BleuResult corpus_bleu(std::span<const std::string> hypotheses, std::span<const std::string> references) {
  require(hypotheses.size() == references.size(), ErrorKind::kInvalidInput,
          "BLEU needs as many hypotheses (" + std::to_string(hypotheses.size()) + ") as references (" +
              std::to_string(references.size()) + ")");
  std::size_t correct[4] = {0, 0, 0, 0}, total[4] = {0, 0, 0, 0};
  BleuResult r;
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    auto hyp = tokenize_13a(hypotheses[s]);
    auto ref = tokenize_13a(references[s]);
    r.hyp_length += hyp.size();
    r.ref_length += ref.size();
    for (std::size_t n = 1; n <= 4; ++n) {
      std::map<std::vector<std::string>, std::size_t> ref_counts;
      for (std::size_t i = 0; i + n <= ref.size(); ++i) ++ref_counts[{ref.begin() + i, ref.begin() + i + n}];
      std::map<std::vector<std::string>, std::size_t> hyp_counts;
      for (std::size_t i = 0; i + n <= hyp.size(); ++i) ++hyp_counts[{hyp.begin() + i, hyp.begin() + i + n}];
      for (const auto& [gram, c] : hyp_counts) {
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) correct[n - 1] += std::min(c, it->second);
      }
      if (hyp.size() >= n) total[n - 1] += hyp.size() - n + 1;
    }
  }
  if (r.hyp_length == 0) return r;
  double smooth = 1.0;
  double log_sum = 0.0;
  for (int n = 0; n < 4; ++n) {
    if (total[n] == 0) return r;  // hypotheses too short for this order
    if (correct[n] == 0) {
      smooth *= 2.0;
      r.precisions[n] = 100.0 / (smooth * static_cast<double>(total[n]));
    } else {
      r.precisions[n] = 100.0 * static_cast<double>(correct[n]) / static_cast<double>(total[n]);
    }
    log_sum += std::log(r.precisions[n] / 100.0);
  }
  r.brevity_penalty = r.hyp_length < r.ref_length
                          ? std::exp(1.0 - static_cast<double>(r.ref_length) / static_cast<double>(r.hyp_length))
                          : 1.0;
  r.score = 100.0 * r.brevity_penalty * std::exp(log_sum / 4.0);
  return r;
}

// ---------------------------------------------------------------------------
// Context comparison

std::vector<TokenSpan> word_runs(std::span<const TokenId> tokens, const Vocabulary& vocab) {
  std::vector<TokenSpan> runs;
  std::size_t start = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (vocab.ends_word(tokens[i])) {
      runs.push_back({start, i + 1});
      start = i + 1;
    }
  }
  if (start < tokens.size()) runs.push_back({start, tokens.size()});
  return runs;
}

std::vector<ContextSummary> context_compare(const InferenceModel<double>& model, const Vocabulary& vocab,
                                            std::span<const EvalItem> items, std::span<const double> lambdas) {
  require(!items.empty(), ErrorKind::kInvalidInput, "empty eval set");
  require(!lambdas.empty(), ErrorKind::kInvalidInput, "no lambda given");
  for (const auto& it : items) {
    require(it.has_spans(), ErrorKind::kInvalidInput, "context comparison needs span annotations on every item");
  }
  // Logits once per sentence and once per word; thresholds per lambda.
  std::vector<std::vector<double>> sentence_logits;
  std::vector<std::vector<std::vector<double>>> word_logits;
  for (const auto& it : items) {
    sentence_logits.push_back(model.nvs_logits(model.encode(it.source)));
    std::vector<std::vector<double>> words;
    for (const auto& run : word_runs(it.source, vocab)) {
      std::span<const TokenId> word(it.source.data() + run.begin, run.end - run.begin);
      words.push_back(model.nvs_logits(model.encode(word)));
    }
    word_logits.push_back(std::move(words));
  }
  std::vector<ContextSummary> out;
  for (double lambda : lambdas) {
    ContextSummary s;
    s.lambda = lambda;
    std::size_t n_all_c = 0, n_all_n = 0, n_ex_c = 0, n_ex_n = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      BagOfWords ctx = select_nvs_logits(sentence_logits[i], lambda);
      std::vector<TokenId> ids;
      for (const auto& wl : word_logits[i]) {
        BagOfWords w = select_nvs_logits(wl, lambda);
        ids.insert(ids.end(), w.ids().begin(), w.ids().end());
      }
      BagOfWords nonctx(std::move(ids), SelectorTag{SelectorTag::Kind::kNvs, lambda});
      auto ref = scoped_reference(items[i], RecallScope::kSpan);
      ContextFlags f;
      f.all_contextual = std::all_of(ref.begin(), ref.end(), [&](TokenId t) { return ctx.contains(t); });
      f.all_noncontextual = std::all_of(ref.begin(), ref.end(), [&](TokenId t) { return nonctx.contains(t); });
      f.exclusive_contextual = f.all_contextual && !f.all_noncontextual;
      f.exclusive_noncontextual = f.all_noncontextual && !f.all_contextual;
      n_all_c += f.all_contextual;
      n_all_n += f.all_noncontextual;
      n_ex_c += f.exclusive_contextual;
      n_ex_n += f.exclusive_noncontextual;
      s.flags.push_back(f);
      s.contextual_sizes.push_back(ctx.size());
      s.noncontextual_sizes.push_back(nonctx.size());
    }
    double n = static_cast<double>(items.size());
    s.sentences = items.size();
    s.all_contextual = 100.0 * static_cast<double>(n_all_c) / n;
    s.all_noncontextual = 100.0 * static_cast<double>(n_all_n) / n;
    s.excl_contextual = 100.0 * static_cast<double>(n_ex_c) / n;
    s.excl_noncontextual = 100.0 * static_cast<double>(n_ex_n) / n;
    out.push_back(std::move(s));
  }
  return out;
}

void write_context_report(std::ostream& out, std::span<const ContextSummary> summaries) {
  out << "lambda\tsentence\tall_contextual\tall_noncontextual\texclusive_contextual\texclusive_noncontextual\n";
  for (const auto& s : summaries) {
    for (std::size_t i = 0; i < s.flags.size(); ++i) {
      const auto& f = s.flags[i];
      out << s.lambda << '\t' << i << '\t' << f.all_contextual << '\t' << f.all_noncontextual << '\t'
          << f.exclusive_contextual << '\t' << f.exclusive_noncontextual << '\n';
    }
  }
  char buf[256];
  out << "\n# summary (percent of sentences)\n";
  out << "# lambda\tmetric\tcontext\tno-context\n";
  for (const auto& s : summaries) {
    std::snprintf(buf, sizeof(buf), "# %g\tAll\t%.2f\t%.2f\n", s.lambda, s.all_contextual, s.all_noncontextual);
    out << buf;
    std::snprintf(buf, sizeof(buf), "# %g\tAll excl\t%.2f\t%.2f\n", s.lambda, s.excl_contextual, s.excl_noncontextual);
    out << buf;
  }
}

}  // namespace shortlex
