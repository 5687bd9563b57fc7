#ifndef PROCSTRUCT_H
#define PROCSTRUCT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum PsStatus {
  PS_STATUS_OK = 0,
  PS_STATUS_NULL_POINTER = 1,
  PS_STATUS_INVALID_UTF8 = 2,
  PS_STATUS_PARSE = 3,
  PS_STATUS_FORMAT = 4,
  PS_STATUS_CONFIG = 5,
  PS_STATUS_CONTRACT = 6,
  PS_STATUS_SHAPE = 7,
  PS_STATUS_INDEX = 8,
  PS_STATUS_IO = 9,
  PS_STATUS_DIVERGED = 10,
  PS_STATUS_BUFFER_TOO_SMALL = 11,
  PS_STATUS_PANIC = 12,
} PsStatus;

/*
 Parsed and preprocessed corpus.
 */
typedef struct PsCorpus PsCorpus;

/*
 Trained language model loaded from a checkpoint.
 */
typedef struct PsModel PsModel;

/*
 Scoring options; obtain defaults from `ps_sim_options_default`.
 */
typedef struct PsSimOptions {
  double w1;
  double w2;
  double w3;
  double theta;
  bool filter_unmatched;
} PsSimOptions;

typedef struct PsSimScore {
  double simged;
  double node_rate;
  double edge_rate;
} PsSimScore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version, static storage.
 */
const char *ps_version(void);

/*
 Message of the last failed call on this thread ("" after a success).
 Valid until the next library call on the same thread.
 */
const char *ps_last_error(void);

/*
 Release a string returned by this library. NULL is ignored.

 # Safety
 `s` must come from this library and not have been freed.
 */
void ps_string_free(char *s);

/*
 Parse corpus text (outline-numbered sentences, blank-line separated
 processes) and apply the default length and depth preprocessing.

 # Safety
 `text` must be a NUL-terminated string; `out` must be writable.
 */
enum PsStatus ps_corpus_parse(const char *text, struct PsCorpus **out);

/*
 Number of processes; 0 for NULL.

 # Safety
 `corpus` must be NULL or a live handle.
 */
uintptr_t ps_corpus_len(const struct PsCorpus *corpus);

/*
 Sentence count of process `index`.

 # Safety
 `corpus` must be a live handle and `out` writable.
 */
enum PsStatus ps_corpus_sentences(const struct PsCorpus *corpus, uintptr_t index, uintptr_t *out);

/*
 Identifier of process `index`, as a caller-owned string.

 # Safety
 `corpus` must be a live handle and `out` writable.
 */
enum PsStatus ps_corpus_id(const struct PsCorpus *corpus, uintptr_t index, char **out);

/*
 # Safety
 `corpus` must be NULL or a handle not yet freed.
 */
void ps_corpus_free(struct PsCorpus *corpus);

/*
 Load a checkpoint written by `procstruct train`.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum PsStatus ps_model_load(const char *path, struct PsModel **out);

/*
 Number of ON-LSTM layers of a model; 0 for NULL.

 # Safety
 `model` must be NULL or a live handle.
 */
uintptr_t ps_model_layers(const struct PsModel *model);

/*
 # Safety
 `model` must be NULL or a handle not yet freed.
 */
void ps_model_free(struct PsModel *model);

/*
 Greedy top-down tree over `n + 1` sentences from `n` level distances
 (`d[k]` between sentences k and k+1), as a bracketed string like
 `(1 (2 3))`. `d` may be NULL when `n` is 0.

 # Safety
 `d` must point to `n` doubles; `out` must be writable.
 */
enum PsStatus ps_greedy_tree(const double *d, uintptr_t n, char **out);

/*
 Induce the tree of process `index`. `gate_layer` is 1-based; 0 picks
 the middle layer. When `distances` is non-NULL the `L - 1` level
 distances are copied into it; `distances_cap` must be at least `L - 1`.

 # Safety
 Handles must be live, `distances` must hold `distances_cap` doubles and
 `out_tree` must be writable.
 */
enum PsStatus ps_induce(const struct PsModel *model,
                        const struct PsCorpus *corpus,
                        uintptr_t index,
                        uint32_t gate_layer,
                        double *distances,
                        uintptr_t distances_cap,
                        char **out_tree);

struct PsSimOptions ps_sim_options_default(void);

/*
 Score a bracketed tree for process `index` against its gold outline.
 `opts` may be NULL for the defaults.

 # Safety
 `corpus` must be live, `tree` NUL-terminated, `out` writable.
 */
enum PsStatus ps_tree_score(const struct PsCorpus *corpus,
                            uintptr_t index,
                            const char *tree,
                            const struct PsSimOptions *opts,
                            struct PsSimScore *out);

/*
 Dice similarity of two labels' token multisets.

 # Safety
 `a` and `b` must be NUL-terminated; `out` writable.
 */
enum PsStatus ps_label_similarity(const char *a, const char *b, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROCSTRUCT_H */
