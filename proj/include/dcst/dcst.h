#ifndef DCST_DCST_H
#define DCST_DCST_H

/*
 * C interface of the dcst library: dependency parsing with deep contextualized
 * self-training. All objects are opaque handles released with the matching
 * *_free function. Every call that can fail returns a dcst_status; on failure
 * dcst_last_error() describes the problem (per thread, valid until the next
 * failing call on that thread).
 */

#include <stddef.h>
#include <stdint.h>

#if defined(DCST_BUILDING_LIBRARY)
#define DCST_API __attribute__((visibility("default")))
#else
#define DCST_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dcst_status {
  DCST_OK = 0,
  DCST_ERR_USAGE = 1,   /* bad arguments or configuration */
  DCST_ERR_DATA = 2,    /* malformed input; message carries file:line */
  DCST_ERR_NUMERIC = 3  /* non-finite loss or gradient */
} dcst_status;

typedef struct dcst_config dcst_config;
typedef struct dcst_corpus dcst_corpus;
typedef struct dcst_parser dcst_parser;
typedef struct dcst_tagger dcst_tagger;

/* Receives one progress line (no trailing newline). */
typedef void (*dcst_log_fn)(void* user, const char* line);

typedef struct dcst_eval_summary {
  double uas;
  double las;
  double ad_nc;
  double ad_dr;
  double ad_pdh;
  double pos_head_error;
  size_t sentences;
  size_t tokens;
} dcst_eval_summary;

DCST_API const char* dcst_last_error(void);
DCST_API const char* dcst_version(void);

/*
 * String results use the snprintf convention: at most `capacity` bytes
 * (including the terminator) are written to `buffer` and the full length is
 * stored in *length. Pass buffer = NULL to query the length.
 */

/* ---- configuration: flat key=value, profile defaults, overrides ---- */

DCST_API dcst_status dcst_config_new(dcst_config** out);
DCST_API void dcst_config_free(dcst_config* config);
DCST_API dcst_status dcst_config_load(dcst_config* config, const char* path);
DCST_API dcst_status dcst_config_set(dcst_config* config, const char* key, const char* value);
/* "key=value" */
DCST_API dcst_status dcst_config_assign(dcst_config* config, const char* assignment);
DCST_API dcst_status dcst_config_get(const dcst_config* config, const char* key, char* buffer,
                                     size_t capacity, size_t* length);
/* Every key with its effective value, one "key = value" line each. */
DCST_API dcst_status dcst_config_resolved(const dcst_config* config, char* buffer,
                                          size_t capacity, size_t* length);

/* ---- corpora ---- */

DCST_API dcst_status dcst_corpus_read(const char* path, dcst_corpus** out);
DCST_API dcst_status dcst_corpus_synthetic(uint64_t seed, size_t sentences, dcst_corpus** out);
DCST_API dcst_status dcst_corpus_write(const dcst_corpus* corpus, const char* path);
DCST_API size_t dcst_corpus_size(const dcst_corpus* corpus);
DCST_API size_t dcst_corpus_sentence_length(const dcst_corpus* corpus, size_t index);
/* Head of token `token` (1-based) in sentence `index`; -1 when unannotated. */
DCST_API int dcst_corpus_head(const dcst_corpus* corpus, size_t index, size_t token);
DCST_API void dcst_corpus_free(dcst_corpus* corpus);

/* ---- parsers ---- */

DCST_API dcst_status dcst_parser_train(const dcst_config* config, const dcst_corpus* train,
                                       const dcst_corpus* dev, dcst_log_fn log, void* user,
                                       dcst_parser** out);
/* `path` is an archive or a run directory holding parser.dcst. */
DCST_API dcst_status dcst_parser_load(const char* path, dcst_parser** out);
DCST_API dcst_status dcst_parser_save(const dcst_parser* parser, const char* path);
DCST_API dcst_status dcst_parser_parse(const dcst_parser* parser, const dcst_corpus* input,
                                       dcst_corpus** out);
DCST_API dcst_status dcst_parser_evaluate(const dcst_parser* parser, const dcst_corpus* gold,
                                          dcst_eval_summary* out);
DCST_API void dcst_parser_free(dcst_parser* parser);

/* ---- taggers ---- */

DCST_API dcst_status dcst_tagger_load(const char* path, dcst_tagger** out);
DCST_API dcst_status dcst_tagger_save(const dcst_tagger* tagger, const char* path);
/* Token accuracy against the tags derived from the gold trees of `gold`. */
DCST_API dcst_status dcst_tagger_accuracy(const dcst_tagger* tagger, const dcst_corpus* gold,
                                          double* accuracy);
DCST_API void dcst_tagger_free(dcst_tagger* tagger);

/* ---- metrics ---- */

DCST_API dcst_status dcst_evaluate(const dcst_corpus* gold, const dcst_corpus* pred,
                                   int pos_from_pred, dcst_eval_summary* out);

/*
 * ---- commands ----
 * Each command mirrors one subcommand of the dcst command-line tool. Commands
 * with an output directory write config.resolved, log.txt, report.json,
 * report.txt and timings.json into it. `log` may be NULL. Scheme names are
 * nc, dr, rpe (and lm where stated); `schemes` is a comma-separated list.
 */

DCST_API dcst_status dcst_run_train_base(const dcst_config* config, const char* train,
                                         const char* dev, const char* out_dir, dcst_log_fn log,
                                         void* user);
DCST_API dcst_status dcst_run_parse(const char* model, const char* input, const char* output,
                                    size_t* sentences);
DCST_API dcst_status dcst_run_encode_tags(const char* scheme, const char* input,
                                          const char* output, size_t* sentences);
/* scheme: nc, dr, rpe or lm. */
DCST_API dcst_status dcst_run_train_tagger(const dcst_config* config, const char* scheme,
                                           const char* input, const char* dev,
                                           const char* out_dir, dcst_log_fn log, void* user);
/* mode: dcst, classic, rg or lm. */
DCST_API dcst_status dcst_run_selftrain(const dcst_config* config, const char* mode,
                                        const char* schemes, const char* labeled,
                                        const char* unlabeled, const char* dev,
                                        const char* out_dir, dcst_log_fn log, void* user);
/* config may be NULL (default pdh_mode); out_dir may be NULL. */
DCST_API dcst_status dcst_run_evaluate(const dcst_config* config, const char* gold,
                                       const char* pred, int pos_from_pred, const char* out_dir,
                                       dcst_eval_summary* out);
DCST_API dcst_status dcst_run_experiment(const dcst_config* config, const char* out_dir,
                                         dcst_log_fn log, void* user);
DCST_API dcst_status dcst_run_synth_corpus(uint64_t seed, size_t sentences, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* DCST_DCST_H */
