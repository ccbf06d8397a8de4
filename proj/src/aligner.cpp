// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shortlex/aligner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "shortlex/error.hpp"

namespace shortlex {

namespace {

constexpr std::string_view kAlignHeader = "SHORTLEX-ALIGN v1";

struct Stripped {
  std::vector<TokenId> source;
  std::vector<TokenId> target;
};

std::vector<TokenId> strip_specials(std::span<const TokenId> ids) {
  std::vector<TokenId> out;
  out.reserve(ids.size());
  for (TokenId id : ids) {
    if (!is_special(id)) out.push_back(id);
  }
  return out;
}

using CountTable = std::vector<std::unordered_map<TokenId, double>>;

// Prior weight of source position i for target position j, normalized over i.
void diagonal_prior(std::size_t I, std::size_t j, std::size_t J, double tension,
                    std::vector<double>& w) {
  w.resize(I);
  double tj = (static_cast<double>(j) + 0.5) / static_cast<double>(J);
  double sum = 0.0;
  for (std::size_t i = 0; i < I; ++i) {
    double si = (static_cast<double>(i) + 0.5) / static_cast<double>(I);
    w[i] = std::exp(-tension * std::abs(si - tj));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
}

double lookup(const std::vector<AlignModel::Row>& table, TokenId s, TokenId t) {
  if (static_cast<std::size_t>(s) >= table.size()) return 0.0;
  const auto& row = table[static_cast<std::size_t>(s)];
  auto it = std::lower_bound(row.begin(), row.end(), t,
                             [](const TranslationEntry& e, TokenId id) { return e.target < id; });
  if (it == row.end() || it->target != t) return 0.0;
  return it->prob;
}

double e_step(const std::vector<AlignModel::Row>& table, std::span<const Stripped> pairs,
              double tension, CountTable& counts) {
  double ll = 0.0;
  std::vector<double> w;
  std::vector<double> post;
  for (const auto& p : pairs) {
    std::size_t I = p.source.size();
    std::size_t J = p.target.size();
    for (std::size_t j = 0; j < J; ++j) {
      diagonal_prior(I, j, J, tension, w);
      post.resize(I);
      double z = 0.0;
      for (std::size_t i = 0; i < I; ++i) {
        post[i] = w[i] * lookup(table, p.source[i], p.target[j]);
        z += post[i];
      }
      if (z <= 0.0) z = 1e-300;
      ll += std::log(z);
      for (std::size_t i = 0; i < I; ++i) {
        if (post[i] > 0.0) counts[static_cast<std::size_t>(p.source[i])][p.target[j]] += post[i] / z;
      }
    }
  }
  return ll;
}

std::vector<TranslationEntry> normalize_row(const std::unordered_map<TokenId, double>& counts,
                                            double prune_below) {
  std::vector<TranslationEntry> row;
  row.reserve(counts.size());
  for (const auto& [t, c] : counts) row.push_back({t, c});
  std::sort(row.begin(), row.end(),
            [](const TranslationEntry& a, const TranslationEntry& b) { return a.target < b.target; });
  double total = 0.0;
  for (const auto& e : row) total += e.prob;
  if (total <= 0.0) return {};
  for (auto& e : row) e.prob /= total;
  std::erase_if(row, [&](const TranslationEntry& e) { return e.prob < prune_below; });
  total = 0.0;
  for (const auto& e : row) total += e.prob;
  for (auto& e : row) e.prob /= total;
  return row;
}

std::string format_prob(double p, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, p);
  return buf;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    require(used == s.size(), ErrorKind::kFormat, where + ": bad number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    fail(ErrorKind::kFormat, where + ": bad number '" + s + "'");
  }
}

}  // namespace

double AlignModel::prob(TokenId source, TokenId target) const {
  return lookup(table_, source, target);
}

std::span<const TranslationEntry> AlignModel::row(TokenId source) const {
  if (source < 0 || static_cast<std::size_t>(source) >= table_.size()) return {};
  return table_[static_cast<std::size_t>(source)];
}

AlignModel em_train(std::span<const SentencePair> pairs, const AlignOptions& options) {
  require(options.iterations >= 1, ErrorKind::kInvalidInput, "EM needs at least one iteration");
  require(options.diagonal_tension >= 0.0, ErrorKind::kInvalidInput,
          "diagonal tension must be non-negative");
  std::vector<Stripped> data;
  data.reserve(pairs.size());
  TokenId max_source = -1;
  for (const auto& p : pairs) {
    Stripped s{strip_specials(p.source), strip_specials(p.target)};
    if (s.source.empty() || s.target.empty()) continue;
    for (TokenId id : s.source) max_source = std::max(max_source, id);
    data.push_back(std::move(s));
  }
  require(!data.empty(), ErrorKind::kInvalidInput, "alignment corpus is empty");

  AlignModel model;
  model.diagonal_tension_ = options.diagonal_tension;
  std::size_t rows = static_cast<std::size_t>(max_source) + 1;

  // Uniform start over co-occurring targets.
  {
    std::vector<std::unordered_map<TokenId, double>> cooc(rows);
    for (const auto& p : data) {
      for (TokenId s : p.source) {
        for (TokenId t : p.target) cooc[static_cast<std::size_t>(s)][t] = 1.0;
      }
    }
    model.table_.resize(rows);
    for (std::size_t s = 0; s < rows; ++s) model.table_[s] = normalize_row(cooc[s], 0.0);
  }

  std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, data.size()));
  for (std::size_t it = 0; it < options.iterations; ++it) {
    std::vector<CountTable> partial(threads, CountTable(rows));
    std::vector<double> partial_ll(threads, 0.0);
    std::size_t chunk = (data.size() + threads - 1) / threads;
    auto run = [&](std::size_t k) {
      std::size_t begin = std::min(data.size(), k * chunk);
      std::size_t end = std::min(data.size(), begin + chunk);
      partial_ll[k] = e_step(model.table_, std::span(data).subspan(begin, end - begin),
                             options.diagonal_tension, partial[k]);
    };
    if (threads == 1) {
      run(0);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(run, k);
      for (auto& th : pool) th.join();
    }
    double ll = 0.0;
    for (std::size_t k = 0; k < threads; ++k) {
      ll += partial_ll[k];
      if (k == 0) continue;
      for (std::size_t s = 0; s < rows; ++s) {
        for (const auto& [t, c] : partial[k][s]) partial[0][s][t] += c;
      }
    }
    model.log_likelihood_.push_back(ll);
    for (std::size_t s = 0; s < rows; ++s) {
      model.table_[s] = normalize_row(partial[0][s], options.prune_below);
    }
  }
  return model;
}

AlignModel adapt_lexicon(std::span<const SentencePair> base, std::span<const SentencePair> adapt,
                         std::size_t upsample, const AlignOptions& options) {
  require(!base.empty(), ErrorKind::kInvalidInput, "adaptation needs a base corpus");
  std::vector<SentencePair> combined(base.begin(), base.end());
  combined.reserve(base.size() + adapt.size() * upsample);
  for (std::size_t r = 0; r < upsample; ++r) combined.insert(combined.end(), adapt.begin(), adapt.end());
  return em_train(combined, options);
}

void AlignModel::save(const std::filesystem::path& path, const Vocabulary& vocab) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorKind::kIo, "cannot open '" + path.string() + "' for writing");
  out << kAlignHeader << '\n';
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", diagonal_tension_);
  out << "diagonal_tension=" << buf << '\n';
  out << "log_likelihood=";
  for (std::size_t i = 0; i < log_likelihood_.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%a", log_likelihood_[i]);
    out << (i ? " " : "") << buf;
  }
  out << "\n\n";
  for (std::size_t s = 0; s < table_.size(); ++s) {
    for (const auto& e : table_[s]) {
      std::snprintf(buf, sizeof(buf), "%a", e.prob);
      out << vocab.token(static_cast<TokenId>(s)) << '\t' << vocab.token(e.target) << '\t' << buf
          << '\n';
    }
  }
  require(out.good(), ErrorKind::kIo, "write to '" + path.string() + "' failed");
}

AlignModel AlignModel::load(const std::filesystem::path& path, const Vocabulary& vocab) {
  auto lines = read_lines(path);
  require(!lines.empty() && lines[0] == kAlignHeader, ErrorKind::kFormat,
          path.string() + ": not an alignment model (missing '" + std::string(kAlignHeader) + "')");
  AlignModel m;
  std::size_t i = 1;
  for (; i < lines.size() && !lines[i].empty(); ++i) {
    auto eq = lines[i].find('=');
    require(eq != std::string::npos, ErrorKind::kFormat, path.string() + ": bad header line");
    std::string key = lines[i].substr(0, eq);
    std::string val = lines[i].substr(eq + 1);
    if (key == "diagonal_tension") {
      m.diagonal_tension_ = parse_double(val, path.string());
    } else if (key == "log_likelihood") {
      for (const auto& tok : split_whitespace(val)) m.log_likelihood_.push_back(parse_double(tok, path.string()));
    }
  }
  for (++i; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cols = split_tabs(lines[i]);
    require(cols.size() == 3, ErrorKind::kFormat,
            path.string() + ": line " + std::to_string(i + 1) + " needs three columns");
    auto s = vocab.find(cols[0]);
    auto t = vocab.find(cols[1]);
    require(s.has_value() && t.has_value(), ErrorKind::kFormat,
            path.string() + ": line " + std::to_string(i + 1) + " uses tokens missing from the vocabulary");
    if (static_cast<std::size_t>(*s) >= m.table_.size()) m.table_.resize(static_cast<std::size_t>(*s) + 1);
    m.table_[static_cast<std::size_t>(*s)].push_back({*t, parse_double(cols[2], path.string())});
  }
  for (auto& row : m.table_) {
    std::sort(row.begin(), row.end(),
              [](const TranslationEntry& a, const TranslationEntry& b) { return a.target < b.target; });
  }
  return m;
}

// ---------------------------------------------------------------------------

namespace {

void sort_entries(std::vector<TranslationEntry>& list) {
  std::sort(list.begin(), list.end(), [](const TranslationEntry& a, const TranslationEntry& b) {
    if (a.prob != b.prob) return a.prob > b.prob;
    return a.target < b.target;
  });
}

}  // namespace

TranslationLexicon::TranslationLexicon(std::vector<std::vector<TranslationEntry>> by_source,
                                       std::size_t k_max)
    : by_source_(std::move(by_source)), k_max_(k_max) {
  for (auto& list : by_source_) {
    sort_entries(list);
    if (list.size() > k_max_) list.resize(k_max_);
  }
}

std::span<const TranslationEntry> TranslationLexicon::entries(TokenId source) const {
  if (source < 0 || static_cast<std::size_t>(source) >= by_source_.size()) return {};
  return by_source_[static_cast<std::size_t>(source)];
}

std::size_t TranslationLexicon::entry_count() const {
  std::size_t n = 0;
  for (const auto& l : by_source_) n += l.size();
  return n;
}

TranslationLexicon TranslationLexicon::truncated(std::size_t k) const {
  return TranslationLexicon(by_source_, std::min(k, k_max_));
}

void TranslationLexicon::save(const std::filesystem::path& path, const Vocabulary& vocab) const {
  std::vector<std::string> lines;
  for (std::size_t s = 0; s < by_source_.size(); ++s) {
    for (const auto& e : by_source_[s]) {
      lines.push_back(vocab.token(static_cast<TokenId>(s)) + "\t" + vocab.token(e.target) + "\t" +
                      format_prob(e.prob, 6));
    }
  }
  write_lines(path, lines);
}

TranslationLexicon TranslationLexicon::load(const std::filesystem::path& path,
                                            const Vocabulary& vocab) {
  auto lines = read_lines(path);
  std::vector<std::vector<TranslationEntry>> by_source;
  std::size_t k_max = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cols = split_tabs(lines[i]);
    std::string where = path.string() + ":" + std::to_string(i + 1);
    require(cols.size() == 3, ErrorKind::kFormat, where + ": expected source, target, probability");
    auto s = vocab.find(cols[0]);
    auto t = vocab.find(cols[1]);
    require(s.has_value(), ErrorKind::kFormat, where + ": unknown source token '" + cols[0] + "'");
    require(t.has_value(), ErrorKind::kFormat, where + ": unknown target token '" + cols[1] + "'");
    double p = parse_double(cols[2], where);
    require(p >= 0.0 && p <= 1.0, ErrorKind::kFormat, where + ": probability outside [0,1]");
    auto idx = static_cast<std::size_t>(*s);
    if (idx >= by_source.size()) by_source.resize(idx + 1);
    by_source[idx].push_back({*t, p});
    k_max = std::max(k_max, by_source[idx].size());
  }
  return TranslationLexicon(std::move(by_source), k_max);
}

TranslationLexicon extract_lexicon(const AlignModel& model, std::size_t k_max) {
  std::vector<std::vector<TranslationEntry>> by_source(model.source_rows());
  for (std::size_t s = 0; s < model.source_rows(); ++s) {
    auto row = model.row(static_cast<TokenId>(s));
    by_source[s].assign(row.begin(), row.end());
  }
  return TranslationLexicon(std::move(by_source), k_max);
}

}  // namespace shortlex
