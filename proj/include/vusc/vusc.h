#ifndef VUSC_VUSC_H
#define VUSC_VUSC_H

#include <stddef.h>
#include <stdint.h>

#if defined(VUSC_BUILDING_LIBRARY)
#define VUSC_API __attribute__((visibility("default")))
#else
#define VUSC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vusc_status {
  VUSC_OK = 0,
  VUSC_ERR_INVALID_ARGUMENT = 1,
  VUSC_ERR_PARSE = 2,
  VUSC_ERR_IO = 3,
  VUSC_ERR_NUMERIC = 4,
  VUSC_ERR_VERIFICATION = 5,
  VUSC_ERR_INTERNAL = 6
} vusc_status;

/* Message for the most recent failure on the calling thread. */
VUSC_API const char* vusc_last_error(void);
VUSC_API const char* vusc_version(void);

/* Non-fatal diagnostics. A NULL callback restores printing to stderr. */
typedef void (*vusc_warning_callback)(const char* message, void* user);
VUSC_API void vusc_set_warning_callback(vusc_warning_callback callback, void* user);

typedef struct vusc_corpus vusc_corpus;
typedef struct vusc_embeddings vusc_embeddings;
typedef struct vusc_pairs vusc_pairs;
typedef struct vusc_train_config vusc_train_config;
typedef struct vusc_model vusc_model;
typedef struct vusc_report vusc_report;

/* Corpora: CoNLL-U (.conllu, .conll) or JSON lines. */
VUSC_API vusc_status vusc_corpus_load(const char* path, vusc_corpus** out);
VUSC_API void vusc_corpus_free(vusc_corpus* corpus);
VUSC_API size_t vusc_corpus_size(const vusc_corpus* corpus);
VUSC_API vusc_status vusc_corpus_save_jsonl(const vusc_corpus* corpus, const char* path);
/* Deterministic shuffled split with the given proportions, e.g. {8, 1, 1}. */
VUSC_API vusc_status vusc_corpus_split(const vusc_corpus* corpus, const double ratios[3], uint64_t seed,
                                       vusc_corpus** train, vusc_corpus** dev, vusc_corpus** test);

/* word2vec text format. */
VUSC_API vusc_status vusc_embeddings_load(const char* path, vusc_embeddings** out);
VUSC_API void vusc_embeddings_free(vusc_embeddings* embeddings);
VUSC_API size_t vusc_embeddings_size(const vusc_embeddings* embeddings);
VUSC_API size_t vusc_embeddings_dim(const vusc_embeddings* embeddings);

/* Dependency-rule extraction. `rules` is "all" or a list such as "R1,R2,R5";
   `embeddings` may be NULL when the aspect config declares one aspect. */
VUSC_API vusc_status vusc_extract_rules(const vusc_corpus* corpus, const char* aspect_config_path,
                                        const vusc_embeddings* embeddings, const char* rules, size_t threads,
                                        vusc_pairs** out);
/* Nearest-word windowing with a clinical lexicon config. */
VUSC_API vusc_status vusc_extract_window(const vusc_corpus* corpus, const char* lexicon_config_path, size_t threads,
                                         vusc_pairs** out);
VUSC_API vusc_status vusc_pairs_load(const char* path, vusc_pairs** out);
VUSC_API vusc_status vusc_pairs_save(const vusc_pairs* pairs, const char* path);
VUSC_API void vusc_pairs_free(vusc_pairs* pairs);
VUSC_API size_t vusc_pairs_size(const vusc_pairs* pairs);
VUSC_API size_t vusc_pairs_aspect_count(const vusc_pairs* pairs);
VUSC_API const char* vusc_pairs_aspect_name(const vusc_pairs* pairs, size_t index);
/* Pairs emitted by one rule ("R1".."R5", "WINDOW", "SYNTH"). */
VUSC_API size_t vusc_pairs_rule_count(const vusc_pairs* pairs, const char* rule);
/* Candidates that no aspect could claim (extraction results only). */
VUSC_API size_t vusc_pairs_unassigned(const vusc_pairs* pairs);

/* Training settings, keyed by the names used in config files
   (alpha, beta, gamma, negatives, epochs, seed, objective, ...). */
VUSC_API vusc_status vusc_train_config_new(vusc_train_config** out);
VUSC_API void vusc_train_config_free(vusc_train_config* config);
VUSC_API vusc_status vusc_train_config_set(vusc_train_config* config, const char* key, const char* value);
VUSC_API vusc_status vusc_train_config_load(vusc_train_config* config, const char* path);
VUSC_API double vusc_train_config_alpha(const vusc_train_config* config);

/* `dev` and `embeddings` may be NULL. */
VUSC_API vusc_status vusc_train(const vusc_corpus* train, const vusc_corpus* dev, const vusc_pairs* pairs,
                                const vusc_embeddings* embeddings, const vusc_train_config* config,
                                vusc_model** out);
VUSC_API vusc_status vusc_model_save(const vusc_model* model, const char* path);
VUSC_API vusc_status vusc_model_load(const char* path, vusc_model** out);
VUSC_API void vusc_model_free(vusc_model* model);
VUSC_API size_t vusc_model_aspect_count(const vusc_model* model);
VUSC_API const char* vusc_model_aspect_name(const vusc_model* model, size_t index);

typedef struct vusc_history_entry {
  size_t epoch;
  double objective;
  double regularizer;
  double dev_accuracy; /* NaN without dev gold labels */
} vusc_history_entry;

/* History is available for models returned by vusc_train. */
VUSC_API size_t vusc_model_history_size(const vusc_model* model);
VUSC_API vusc_status vusc_model_history_entry(const vusc_model* model, size_t index, vusc_history_entry* out);
VUSC_API vusc_status vusc_model_history_save(const vusc_model* model, const char* path);

/* Predicted cluster for one document of a corpus. */
VUSC_API vusc_status vusc_model_predict(const vusc_model* model, const char* aspect, const vusc_corpus* corpus,
                                        size_t doc_index, size_t* cluster);

typedef struct vusc_score {
  const char* aspect;
  double mean;
  double std;
} vusc_score;

/* Matched accuracy per aspect that has gold labels in `corpus`. */
VUSC_API vusc_status vusc_evaluate(const vusc_model* model, const vusc_corpus* corpus, size_t threads,
                                   vusc_report** out);
/* Majority label of `train`, scored on `eval`, for every aspect labelled in `eval`. */
VUSC_API vusc_status vusc_baseline_majority(const vusc_corpus* train, const vusc_corpus* eval, vusc_report** out);

typedef enum vusc_lexicon_mode { VUSC_LEXICON_RANDOM = 0, VUSC_LEXICON_OVERALL = 1 } vusc_lexicon_mode;

VUSC_API vusc_status vusc_baseline_lexicon(const vusc_corpus* corpus, const vusc_pairs* pairs,
                                           const char* lexicon_path, vusc_lexicon_mode mode, size_t trials,
                                           uint64_t seed, vusc_report** out);
VUSC_API void vusc_report_free(vusc_report* report);
VUSC_API size_t vusc_report_size(const vusc_report* report);
VUSC_API vusc_status vusc_report_entry(const vusc_report* report, size_t index, vusc_score* out);
VUSC_API double vusc_report_mean(const vusc_report* report);
/* JSON lines {aspect, method, split, mean, std}, one per aspect plus a
   "mean" line. The string is owned by the report. */
VUSC_API const char* vusc_report_jsonl(vusc_report* report, const char* method, const char* split);

typedef struct vusc_synth_config {
  size_t num_docs;
  size_t num_aspects;
  size_t num_classes;
  size_t targets_per_aspect;
  size_t opinions_per_class;
  size_t filler_vocab_size;
  size_t doc_length;
  double pair_rate;
  double class_separation;
  size_t noise_dims;
  double embedding_noise;
  uint64_t seed;
} vusc_synth_config;

VUSC_API void vusc_synth_config_default(vusc_synth_config* config);
/* Writes corpus.jsonl, pairs.tsv and embeddings.txt into `directory`. */
VUSC_API vusc_status vusc_synth_write(const vusc_synth_config* config, const char* directory);
/* Any of the outputs may be NULL. */
VUSC_API vusc_status vusc_synth_generate(const vusc_synth_config* config, vusc_corpus** corpus, vusc_pairs** pairs,
                                         vusc_embeddings** embeddings);
VUSC_API vusc_status vusc_synth_bayes_accuracy(const vusc_synth_config* config, double* out);

typedef struct vusc_check_result {
  const char* name;
  int passed;
  const char* detail;
  double seconds;
} vusc_check_result;

typedef void (*vusc_check_callback)(const vusc_check_result* result, void* user);

/* Runs the verification suite. `fault` is NULL or "entropy-sign"; `only`
   is NULL or a name prefix. Returns VUSC_ERR_VERIFICATION when a check fails. */
VUSC_API vusc_status vusc_run_checks(uint64_t seed, const char* fault, const char* only, vusc_check_callback callback,
                                     void* user, size_t* failed);

#ifdef __cplusplus
}
#endif

#endif
