// Copyright 2026 The shortlex Authors.
// SPDX-License-Identifier: Apache-2.0

#include "shortlex/synth.hpp"

#include <algorithm>
#include <random>

#include "shortlex/error.hpp"
#include "shortlex/rng.hpp"

namespace shortlex {

namespace {

constexpr const char* kMarker = "</w>";

// Parses "<prefix><n></w>" and returns n, or -1.
int word_index(const std::string& word, char prefix) {
  std::string_view w(word);
  if (w.size() < 6 || w[0] != prefix || !w.ends_with(kMarker)) return -1;
  w = w.substr(1, w.size() - 5);
  int n = 0;
  for (char c : w) {
    if (c < '0' || c > '9') return -1;
    n = n * 10 + (c - '0');
  }
  return n;
}

}  // namespace

// Idiom j joins source words 2j and 2j+1; both carry alternates.
static_assert(2 * SynthTask::kIdioms <= SynthTask::kAlternates);
static_assert(SynthTask::kAlternates <= SynthTask::kPlainWords);

std::string SynthTask::source_word(std::size_t i) { return "s" + std::to_string(i) + kMarker; }
std::string SynthTask::trigger_word(std::size_t i) { return "t" + std::to_string(i) + kMarker; }
std::string SynthTask::target_word(std::size_t i) { return "x" + std::to_string(i) + kMarker; }
std::string SynthTask::alternate_word(std::size_t i) { return "a" + std::to_string(i) + kMarker; }
std::string SynthTask::idiom_token(std::size_t i) { return "i" + std::to_string(i) + kMarker; }

SynthTask::SynthTask() {
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < kPlainWords; ++i) tokens.push_back(source_word(i));
  for (std::size_t i = 0; i < kTriggers; ++i) tokens.push_back(trigger_word(i));
  for (std::size_t i = 0; i < kPlainWords + kTriggers; ++i) tokens.push_back(target_word(i));
  for (std::size_t i = 0; i < kAlternates; ++i) tokens.push_back(alternate_word(i));
  for (std::size_t i = 0; i < kIdioms; ++i) tokens.push_back(idiom_token(i));
  vocab_ = Vocabulary::from_tokens(tokens);
}

bool SynthTask::is_trigger(const std::string& word) const {
  int t = word_index(word, 't');
  return t >= 0 && static_cast<std::size_t>(t) < kTriggers;
}

bool SynthTask::has_alternate(const std::string& word) const {
  int s = word_index(word, 's');
  return s >= 0 && static_cast<std::size_t>(s) < kAlternates;
}

int SynthTask::idiom_at(const std::vector<std::string>& source, std::size_t i) const {
  if (i + 1 >= source.size()) return -1;
  int a = word_index(source[i], 's');
  int b = word_index(source[i + 1], 's');
  if (a < 0 || b != a + 1 || a % 2 != 0 || static_cast<std::size_t>(a / 2) >= kIdioms) return -1;
  return a / 2;
}

std::vector<std::string> SynthTask::translate(const std::vector<std::string>& source) const {
  std::vector<std::size_t> unused;
  return translate(source, unused);
}

std::vector<std::string> SynthTask::translate(const std::vector<std::string>& source,
                                              std::vector<std::size_t>& target_of) const {
  bool triggered = std::any_of(source.begin(), source.end(), [&](const std::string& w) { return is_trigger(w); });
  std::vector<std::string> forward;
  std::vector<std::size_t> forward_of(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    forward_of[i] = forward.size();
    if (int idiom = idiom_at(source, i); idiom >= 0) {
      forward_of[i + 1] = forward.size();
      forward.push_back(idiom_token(static_cast<std::size_t>(idiom)));
      ++i;
      continue;
    }
    if (int t = word_index(source[i], 't'); t >= 0 && static_cast<std::size_t>(t) < kTriggers) {
      forward.push_back(target_word(kPlainWords + static_cast<std::size_t>(t)));
      continue;
    }
    int s = word_index(source[i], 's');
    if (s < 0 || static_cast<std::size_t>(s) >= kPlainWords) {
      fail(ErrorKind::kInvalidInput, "not a word of the synthetic task: '" + source[i] + "'");
    }
    auto idx = static_cast<std::size_t>(s);
    forward.push_back(triggered && idx < kAlternates ? alternate_word(idx) : target_word(idx));
  }
  std::vector<std::string> target(forward.rbegin(), forward.rend());
  target_of.resize(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) target_of[i] = forward.size() - 1 - forward_of[i];
  return target;
}

namespace {

class Sampler {
 public:
  Sampler(const SynthTask& task, const SynthOptions& options, std::uint64_t seed, std::string_view stage)
      : task_(task), options_(options), rng_(stage_rng(seed, stage)) {
    std::vector<double> weights(SynthTask::kPlainWords, 1.0);
    for (std::size_t i = 0; i < 2 * SynthTask::kIdioms; ++i) weights[i] = options.idiom_word_weight;
    word_ = std::discrete_distribution<std::size_t>(weights.begin(), weights.end());
    length_ = std::uniform_int_distribution<std::size_t>(options.min_words, options.max_words);
  }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
  std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

  // Words without any idiom bigram; `trigger` places one trigger word.
  std::vector<std::string> plain(bool trigger) {
    while (true) {
      std::size_t n = length_(rng_);
      std::vector<std::string> words;
      for (std::size_t i = 0; i < n; ++i) words.push_back(SynthTask::source_word(word_(rng_)));
      if (trigger) words[below(n)] = SynthTask::trigger_word(below(SynthTask::kTriggers));
      if (!has_idiom(words)) return words;
    }
  }

  // A sentence with exactly one idiom; returns the idiom's source position.
  std::vector<std::string> with_idiom(bool trigger, std::size_t& at) {
    while (true) {
      auto words = plain(trigger);
      if (words.size() < 3) continue;
      std::size_t idiom = below(SynthTask::kIdioms);
      at = below(words.size() - 1);
      words[at] = SynthTask::source_word(2 * idiom);
      words[at + 1] = SynthTask::source_word(2 * idiom + 1);
      if (trigger && std::none_of(words.begin(), words.end(), [&](const auto& w) { return task_.is_trigger(w); })) {
        continue;
      }
      std::size_t count = 0;
      for (std::size_t i = 0; i < words.size(); ++i) count += task_.idiom_at(words, i) >= 0 ? 1 : 0;
      if (count == 1) return words;
    }
  }

  std::vector<std::string> base_sentence() {
    bool trigger = uniform() < options_.trigger_rate;
    if (uniform() < options_.idiom_rate) {
      std::size_t at = 0;
      return with_idiom(trigger, at);
    }
    return plain(trigger);
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  bool has_idiom(const std::vector<std::string>& words) const {
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (task_.idiom_at(words, i) >= 0) return true;
    }
    return false;
  }

  const SynthTask& task_;
  const SynthOptions& options_;
  std::mt19937_64 rng_;
  std::discrete_distribution<std::size_t> word_;
  std::uniform_int_distribution<std::size_t> length_;
};

TextPair make_pair(const SynthTask& task, std::vector<std::string> source) {
  TextPair p;
  p.target = task.translate(source);
  p.source = std::move(source);
  return p;
}

EvalText make_eval(const SynthTask& task, std::vector<std::string> source) {
  EvalText e;
  e.reference = task.translate(source);
  e.source = std::move(source);
  return e;
}

}  // namespace

SynthData generate_synth(const SynthTask& task, const SynthOptions& options) {
  require(options.min_words >= 3 && options.min_words <= options.max_words, ErrorKind::kInvalidInput,
          "synthetic sentences need 3 <= min_words <= max_words");
  require(options.trigger_rate >= 0 && options.trigger_rate <= 1 && options.idiom_rate >= 0 &&
              options.idiom_rate <= 1 && options.idiom_word_weight > 0,
          ErrorKind::kInvalidInput, "synthetic rates must lie in [0, 1] and weights be positive");
  SynthData data;
  {
    Sampler s(task, options, options.seed, "synth.train");
    for (std::size_t i = 0; i < options.train_pairs; ++i) data.train.push_back(make_pair(task, s.base_sentence()));
  }
  {
    Sampler s(task, options, options.seed, "synth.valid");
    for (std::size_t i = 0; i < options.valid_pairs; ++i) data.valid.push_back(make_pair(task, s.base_sentence()));
  }
  {
    Sampler s(task, options, options.seed, "synth.test");
    for (std::size_t i = 0; i < options.test_sentences; ++i) data.test.push_back(make_eval(task, s.base_sentence()));
  }
  {
    Sampler s(task, options, options.seed, "synth.adapt");
    for (std::size_t i = 0; i < options.adapt_pairs; ++i) {
      std::size_t at = 0;
      data.adapt.push_back(make_pair(task, s.with_idiom(s.uniform() < options.trigger_rate, at)));
    }
  }
  {
    Sampler s(task, options, options.seed, "synth.idiom_test");
    for (std::size_t i = 0; i < options.idiom_test_sentences; ++i) {
      std::size_t at = 0;
      auto source = s.with_idiom(s.uniform() < options.trigger_rate, at);
      std::vector<std::size_t> target_of;
      EvalText e;
      e.reference = task.translate(source, target_of);
      e.source_span = TokenSpan{at, at + 2};
      e.reference_span = TokenSpan{target_of[at], target_of[at] + 1};
      e.source = std::move(source);
      data.idiom_test.push_back(std::move(e));
    }
  }
  {
    Sampler s(task, options, options.seed, "synth.context_test");
    while (data.context_test.size() < options.context_test_sentences) {
      auto source = s.plain(true);
      std::vector<std::size_t> candidates;
      for (std::size_t i = 0; i < source.size(); ++i) {
        if (task.has_alternate(source[i])) candidates.push_back(i);
      }
      if (candidates.empty()) continue;
      std::size_t at = candidates[s.below(candidates.size())];
      std::vector<std::size_t> target_of;
      EvalText e;
      e.reference = task.translate(source, target_of);
      e.source_span = TokenSpan{at, at + 1};
      e.reference_span = TokenSpan{target_of[at], target_of[at] + 1};
      e.source = std::move(source);
      data.context_test.push_back(std::move(e));
    }
  }
  return data;
}

void write_synth(const std::filesystem::path& dir, const SynthTask& task, const SynthData& data) {
  std::filesystem::create_directories(dir);
  task.vocab().save(dir / "vocab.txt");
  auto write_pairs = [&](const std::string& name, const std::vector<TextPair>& pairs) {
    std::vector<std::string> src, tgt;
    for (const auto& p : pairs) {
      src.push_back(join(p.source));
      tgt.push_back(join(p.target));
    }
    write_lines(dir / (name + ".src"), src);
    write_lines(dir / (name + ".tgt"), tgt);
  };
  write_pairs("train", data.train);
  write_pairs("valid", data.valid);
  write_pairs("adapt", data.adapt);
  write_eval_tsv(dir / "test.tsv", data.test);
  write_eval_tsv(dir / "idiom_test.tsv", data.idiom_test);
  write_eval_tsv(dir / "context_test.tsv", data.context_test);
}

}  // namespace shortlex
