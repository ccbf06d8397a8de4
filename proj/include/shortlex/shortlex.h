/*
 * Copyright 2026 The shortlex Authors.
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to shortlex: subword preprocessing, alignment lexicons, model
 * training, vocabulary-restricted translation and the evaluation benches.
 *
 * Every function returns an slx_status. On failure the message is available
 * from slx_last_error() on the same thread until the next failing call.
 * Strings returned through `char**` are owned by the caller and released with
 * slx_string_free(). Handles are released with their *_free function;
 * passing NULL to a *_free function is a no-op.
 */
#ifndef SHORTLEX_SHORTLEX_H_
#define SHORTLEX_SHORTLEX_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SLX_API __declspec(dllexport)
#else
#define SLX_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum slx_status {
  SLX_OK = 0,
  SLX_ERR_INVALID_INPUT = 1,
  SLX_ERR_IO = 2,
  SLX_ERR_FORMAT = 3,
  SLX_ERR_SHAPE = 4,
  SLX_ERR_NUMERIC = 5,
  SLX_ERR_TRAINING = 6,
  SLX_ERR_INTERNAL = 7
} slx_status;

SLX_API const char* slx_version(void);
SLX_API const char* slx_last_error(void);
SLX_API const char* slx_status_name(slx_status status);
SLX_API void slx_string_free(char* s);

/* ------------------------------------------------------------------------
 * Handles */

typedef struct slx_vocab slx_vocab;
typedef struct slx_lexicon slx_lexicon;
typedef struct slx_model slx_model;

/* Vocabulary file: one token per line, id = line number, the first four
 * lines being <pad> <unk> <bos> <eos>. */
SLX_API slx_status slx_vocab_load(const char* path, slx_vocab** out);
SLX_API void slx_vocab_free(slx_vocab* vocab);
SLX_API size_t slx_vocab_size(const slx_vocab* vocab);
/* Id of `token`, or the <unk> id (1) when absent. */
SLX_API int32_t slx_vocab_lookup(const slx_vocab* vocab, const char* token);
SLX_API slx_status slx_vocab_token(const slx_vocab* vocab, int32_t id, char** out);

/* Lexicon TSV "source<TAB>target<TAB>probability", tokens resolved through
 * `vocab` (which must outlive the lexicon). */
SLX_API slx_status slx_lexicon_load(const char* path, const slx_vocab* vocab, slx_lexicon** out);
SLX_API void slx_lexicon_free(slx_lexicon* lexicon);
SLX_API size_t slx_lexicon_k_max(const slx_lexicon* lexicon);
SLX_API uint64_t slx_lexicon_entry_count(const slx_lexicon* lexicon);

typedef enum slx_precision { SLX_PRECISION_DOUBLE = 0, SLX_PRECISION_FLOAT = 1 } slx_precision;

SLX_API slx_status slx_model_load(const char* checkpoint, const slx_vocab* vocab, slx_precision precision,
                                  slx_model** out);
SLX_API void slx_model_free(slx_model* model);
SLX_API size_t slx_model_vocab_size(const slx_model* model);
SLX_API uint64_t slx_model_nvs_parameter_count(const slx_model* model);

typedef enum slx_selector_kind {
  SLX_SELECTOR_NONE = 0,
  SLX_SELECTOR_ALIGN = 1,
  SLX_SELECTOR_NVS = 2
} slx_selector_kind;

typedef struct slx_selector {
  slx_selector_kind kind;
  double lambda;               /* NVS threshold in [0, 1) */
  size_t k;                    /* lexicon entries per source token */
  const slx_lexicon* lexicon;  /* required for SLX_SELECTOR_ALIGN */
} slx_selector;

typedef struct slx_beam_options {
  size_t beam;
  double alpha;
  size_t max_length; /* 0: 2 * source length + 10 */
} slx_beam_options;

SLX_API void slx_selector_init(slx_selector* selector);
SLX_API void slx_beam_options_init(slx_beam_options* options);

typedef struct slx_translation {
  double score;
  double log_prob;
  size_t vocab_size;
  double encode_ms;
  double select_ms;
  double decode_ms;
} slx_translation;

/* Translates one line of space-separated subword tokens; `*out` receives
 * the output with subword markers removed. `info` may be NULL. */
SLX_API slx_status slx_model_translate(const slx_model* model, const char* source, const slx_selector* selector,
                                       const slx_beam_options* beam, char** out, slx_translation* info);
/* Selected output vocabulary for one source line, in the bag-of-words dump
 * format (tab-separated tokens, sorted). */
SLX_API slx_status slx_model_select(const slx_model* model, const char* source, const slx_selector* selector,
                                    char** out);

/* ------------------------------------------------------------------------
 * File-level pipeline stages */

/* Learns `merges` BPE merges over the words of all input files. */
SLX_API slx_status slx_bpe_learn(const char* const* inputs, size_t num_inputs, size_t merges,
                                 const char* out_merges);
SLX_API slx_status slx_bpe_apply(const char* merges, const char* input, const char* output);
SLX_API slx_status slx_vocab_build(const char* const* inputs, size_t num_inputs, const char* out_vocab);

typedef struct slx_clean_options {
  double max_ratio;
  double max_overlap;
  size_t max_len;
} slx_clean_options;
SLX_API void slx_clean_options_init(slx_clean_options* options);
/* Writes the kept pairs; `rejections` (may be NULL) receives "line<TAB>rule"
 * per dropped pair, lines counted from 1. */
SLX_API slx_status slx_clean(const char* src, const char* tgt, const char* out_src, const char* out_tgt,
                             const char* rejections, const slx_clean_options* options, size_t* kept,
                             size_t* dropped);

typedef struct slx_align_options {
  size_t iterations;
  double diagonal_tension;
  size_t threads;
  const char* adapt_src; /* optional adaptation corpus */
  const char* adapt_tgt;
  size_t upsample;
} slx_align_options;
SLX_API void slx_align_options_init(slx_align_options* options);
SLX_API slx_status slx_align_train(const char* src, const char* tgt, const char* vocab,
                                   const slx_align_options* options, const char* out_model);
SLX_API slx_status slx_lexicon_extract(const char* align_model, const char* vocab, size_t k_max,
                                       const char* out_lexicon);

typedef struct slx_model_options {
  size_t d_model;
  size_t encoder_layers;
  size_t decoder_layers;
  size_t heads;
  size_t ffn;
  double label_smoothing;
  const char* pos_weight; /* number >= 1, "auto" or "auto:x"; NULL: 1000 */
  double dropout;
} slx_model_options;

typedef struct slx_train_options {
  slx_model_options model;
  size_t steps;
  size_t batch_tokens;
  double lr;
  size_t warmup;
  uint64_t seed;
  size_t validate_every;
  const char* log; /* optional TSV of the training log */
} slx_train_options;
SLX_API void slx_train_options_init(slx_train_options* options);
/* Trains on line-aligned subword files; validation files may be NULL. The
 * vocabulary path is recorded in the checkpoint. */
SLX_API slx_status slx_train(const char* src, const char* tgt, const char* valid_src, const char* valid_tgt,
                             const char* vocab, const slx_train_options* options, const char* out_checkpoint);

typedef struct slx_finetune_options {
  size_t epochs;
  double lr;
  size_t batch_tokens;
  int full_model;
  uint64_t seed;
} slx_finetune_options;
SLX_API void slx_finetune_options_init(slx_finetune_options* options);
SLX_API slx_status slx_finetune(const char* checkpoint, const char* vocab, const char* src, const char* tgt,
                                const slx_finetune_options* options, const char* out_checkpoint);

typedef struct slx_translate_summary {
  size_t sentences;
  double avg_vocab_size;
  double total_ms;
} slx_translate_summary;
/* Translates every line of `input`; `side` (may be NULL) receives
 * "vocab_size<TAB>score<TAB>encode_ms<TAB>select_ms<TAB>decode_ms" per line. */
SLX_API slx_status slx_translate_file(const slx_model* model, const slx_selector* selector,
                                      const slx_beam_options* beam, const char* input, const char* output,
                                      const char* side, slx_translate_summary* summary);
SLX_API slx_status slx_bow_file(const slx_model* model, const slx_selector* selector, const char* input,
                                const char* output);

/* ------------------------------------------------------------------------
 * Benches */

typedef struct slx_recall {
  double recall_sentence;
  double recall_span; /* negative when the eval set has no spans */
  double avg_vocab_size;
  size_t sentences;
} slx_recall;
/* `model` may be NULL for the align selector (the vocabulary then comes from
 * the lexicon's). Eval set: TSV "source<TAB>reference[<TAB>s:e<TAB>s:e]". */
SLX_API slx_status slx_bench_recall(const slx_model* model, const slx_vocab* vocab, const slx_selector* selector,
                                    const char* eval, int micro, slx_recall* out);
/* Sweeps the selector's parameter over `grid` (NULL with size 0: the default
 * lambda or k grid) and writes "selector,param,avg_vocab_size,recall_sentence,
 * recall_span" rows to `out_csv`. */
SLX_API slx_status slx_bench_sweep(const slx_model* model, const slx_vocab* vocab, const slx_selector* selector,
                                   const char* eval, const double* grid, size_t grid_size, int micro,
                                   const char* out_csv);
/* Batch-1 latency with one warm-up pass and `repetitions` timed passes over
 * the lines of `input`; writes a key<TAB>value report. */
SLX_API slx_status slx_bench_latency(const slx_model* model, const slx_selector* selector,
                                     const slx_beam_options* beam, const char* input, size_t repetitions,
                                     const char* out_report);
SLX_API slx_status slx_bench_context(const slx_model* model, const char* eval, const double* lambdas,
                                     size_t num_lambdas, const char* out_report);

typedef struct slx_bleu {
  double score;
  double brevity_penalty;
  double precisions[4];
  size_t hyp_length;
  size_t ref_length;
} slx_bleu;
SLX_API slx_status slx_eval_bleu(const char* hypotheses, const char* references, slx_bleu* out);

/* Human-readable summary of a checkpoint: config, arrays and parameter counts
 * per group, plus the float count of a top-k lexicon over the target
 * vocabulary when lexicon_k > 0. Array data is skipped, not read. */
SLX_API slx_status slx_inspect_checkpoint(const char* checkpoint, size_t lexicon_k, char** out_report);

typedef struct slx_synth_options {
  uint64_t seed;
  size_t train_pairs;
  size_t test_sentences;
  size_t adapt_pairs;
} slx_synth_options;
SLX_API void slx_synth_options_init(slx_synth_options* options);
/* Writes the synthetic reversal task (vocabulary, corpora, eval sets). */
SLX_API slx_status slx_synth(const char* out_dir, const slx_synth_options* options);

#ifdef __cplusplus
}
#endif

#endif /* SHORTLEX_SHORTLEX_H_ */
