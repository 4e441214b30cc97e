/* Generated by cbindgen. Do not edit. */

#ifndef LEXBEAM_H
#define LEXBEAM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. Zero is success.
typedef enum LexbeamStatus {
  LEXBEAM_STATUS_OK = 0,
  LEXBEAM_STATUS_NULL_POINTER = 1,
  LEXBEAM_STATUS_INVALID_UTF8 = 2,
  LEXBEAM_STATUS_IO = 3,
  LEXBEAM_STATUS_VOCAB = 4,
  LEXBEAM_STATUS_MODEL = 5,
  LEXBEAM_STATUS_INVALID_CONSTRAINT = 6,
  LEXBEAM_STATUS_CONFIG = 7,
  LEXBEAM_STATUS_SCORER = 8,
  LEXBEAM_STATUS_SCORE_SHAPE = 9,
  LEXBEAM_STATUS_CALLBACK = 10,
  LEXBEAM_STATUS_INTERNAL = 11,
  LEXBEAM_STATUS_PANIC = 12,
} LexbeamStatus;

typedef enum LexbeamAlgorithm {
  LEXBEAM_ALGORITHM_BEAM = 0,
  LEXBEAM_ALGORITHM_DBA = 1,
  LEXBEAM_ALGORITHM_GBS = 2,
} LexbeamAlgorithm;

typedef struct LexbeamResult LexbeamResult;

typedef struct LexbeamScorer LexbeamScorer;

typedef struct LexbeamVocab LexbeamVocab;

// Host scoring function.
//
// Called once per step with `n_histories` token sequences (BOS first).
// It must write `n_histories` rows of log-probabilities into `out_scores`,
// row-major, and set `*out_cols` to the row width it used; the buffer holds
// `n_histories * vocab_size` values and `*out_cols` starts at `vocab_size`.
// `source` may be null. Return 0 on success; any other value aborts the
// decode with `LEXBEAM_STATUS_CALLBACK`.
typedef int32_t (*LexbeamScoreFn)(void *user_data,
                                  const uint32_t *const *histories,
                                  const size_t *lengths,
                                  size_t n_histories,
                                  const char *source,
                                  double *out_scores,
                                  size_t *out_cols);

// Decoder settings. Start from [`lexbeam_config_default`].
//
// `beam_size` is ignored by GBS, which uses `gbs_base_beam` slots per bank.
// A `prune_threshold` of 0 disables pruning.
typedef struct LexbeamConfig {
  enum LexbeamAlgorithm algorithm;
  size_t beam_size;
  size_t max_length;
  double prune_threshold;
  bool early_stopping;
  size_t gbs_base_beam;
} LexbeamConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until the
// next lexbeam call on the same thread.
const char *lexbeam_last_error(void);

// Static name of a status code.
const char *lexbeam_status_name(enum LexbeamStatus status);

// Loads a vocabulary file, one surface per line.
enum LexbeamStatus lexbeam_vocab_load(const char *path, struct LexbeamVocab **out);

// Builds a vocabulary from `n` words; BOS, EOS and UNK are added first.
enum LexbeamStatus lexbeam_vocab_from_words(const char *const *words,
                                            size_t n,
                                            struct LexbeamVocab **out);

size_t lexbeam_vocab_size(const struct LexbeamVocab *vocab);

// Id of `surface`, or the UNK id when absent. Returns `UINT32_MAX` on bad
// arguments.
uint32_t lexbeam_vocab_lookup(const struct LexbeamVocab *vocab, const char *surface);

void lexbeam_vocab_free(struct LexbeamVocab *vocab);

enum LexbeamStatus lexbeam_scorer_uniform(const struct LexbeamVocab *vocab,
                                          struct LexbeamScorer **out);

// Seeded pseudo-random scorer, for benchmarking.
enum LexbeamStatus lexbeam_scorer_synthetic(const struct LexbeamVocab *vocab,
                                            uint64_t seed,
                                            struct LexbeamScorer **out);

// Loads a JSON lookup-table scorer.
enum LexbeamStatus lexbeam_scorer_table_load(const struct LexbeamVocab *vocab,
                                             const char *path,
                                             struct LexbeamScorer **out);

// Same as [`lexbeam_scorer_table_load`] from an in-memory JSON string.
enum LexbeamStatus lexbeam_scorer_table_from_json(const struct LexbeamVocab *vocab,
                                                  const char *json,
                                                  struct LexbeamScorer **out);

// Loads an n-gram model. The model carries its own vocabulary, returned
// through `out_vocab` unless that is null.
enum LexbeamStatus lexbeam_scorer_ngram_load(const char *path,
                                             struct LexbeamScorer **out,
                                             struct LexbeamVocab **out_vocab);

// Wraps a host scoring function. Returned rows are validated on every step:
// width, a `-inf` BOS column and normalization to within 1e-4.
enum LexbeamStatus lexbeam_scorer_callback(const struct LexbeamVocab *vocab,
                                           LexbeamScoreFn func,
                                           void *user_data,
                                           struct LexbeamScorer **out);

size_t lexbeam_scorer_vocab_size(const struct LexbeamScorer *scorer);

void lexbeam_scorer_free(struct LexbeamScorer *scorer);

struct LexbeamConfig lexbeam_config_default(void);

// Decodes with `n` whitespace-tokenized constraint strings. Unknown words
// map to UNK and are listed by [`lexbeam_result_unknown`]. `source` and
// `config` may be null; a null config means defaults.
enum LexbeamStatus lexbeam_decode(const struct LexbeamScorer *scorer,
                                  const struct LexbeamVocab *vocab,
                                  const char *const *constraints,
                                  size_t n,
                                  const char *source,
                                  const struct LexbeamConfig *config,
                                  struct LexbeamResult **out);

// Decodes with constraints given as token-id phrases: phrase `i` is
// `phrases[i][0..lengths[i]]`.
enum LexbeamStatus lexbeam_decode_ids(const struct LexbeamScorer *scorer,
                                      const struct LexbeamVocab *vocab,
                                      const uint32_t *const *phrases,
                                      const size_t *lengths,
                                      size_t n,
                                      const char *source,
                                      const struct LexbeamConfig *config,
                                      struct LexbeamResult **out);

// Output token ids, BOS first. `*len` receives the count.
const uint32_t *lexbeam_result_tokens(const struct LexbeamResult *result, size_t *len);

// Output text without BOS/EOS. Owned by the result.
const char *lexbeam_result_text(const struct LexbeamResult *result);

double lexbeam_result_raw_score(const struct LexbeamResult *result);

double lexbeam_result_normalized_score(const struct LexbeamResult *result);

bool lexbeam_result_constraints_met(const struct LexbeamResult *result);

size_t lexbeam_result_steps(const struct LexbeamResult *result);

size_t lexbeam_result_num_unknown(const struct LexbeamResult *result);

// The `i`-th constraint word that was not in the vocabulary, or null.
const char *lexbeam_result_unknown(const struct LexbeamResult *result, size_t i);

void lexbeam_result_free(struct LexbeamResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEXBEAM_H */
