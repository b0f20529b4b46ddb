#ifndef VAA_H
#define VAA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Type I matches on answered questions, Type II on answers completed
// with predictions.
typedef enum VaaRecType {
  VAA_REC_TYPE_I = 1,
  VAA_REC_TYPE_II = 2,
} VaaRecType;

// Status codes returned by every fallible call.
typedef enum VaaStatus {
  VAA_STATUS_OK = 0,
  // The questionnaire has no further question.
  VAA_STATUS_DONE = 1,
  VAA_STATUS_NULL_ARGUMENT = -1,
  VAA_STATUS_INVALID_INPUT = -2,
  VAA_STATUS_UNKNOWN_QUESTION = -3,
  VAA_STATUS_ALREADY_ANSWERED = -4,
  VAA_STATUS_UNKNOWN_SELECTOR = -5,
  VAA_STATUS_IO = -6,
  VAA_STATUS_INTERNAL = -7,
  VAA_STATUS_PANIC = -8,
} VaaStatus;

typedef struct VaaEngine VaaEngine;

typedef struct VaaSession VaaSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failure on this thread; empty if none. The
// pointer stays valid until the next failing call on the same thread.
const char *vaa_last_error(void);

// Loads a fitted model (JSON) and the complete candidate answers (CSV)
// and builds a grid of `resolution`² cells (0 for the default).
//
// # Safety
// `model_path` and `candidates_path` must be NUL-terminated strings and
// `out` a valid pointer.
enum VaaStatus vaa_engine_load(const char *model_path,
                               const char *candidates_path,
                               uintptr_t resolution,
                               struct VaaEngine **out);

// # Safety
// `engine` must come from `vaa_engine_load` and not be used afterwards.
void vaa_engine_free(struct VaaEngine *engine);

// # Safety
// `engine` must be a live handle or null.
uintptr_t vaa_engine_n_questions(const struct VaaEngine *engine);

// # Safety
// `engine` must be a live handle or null.
uintptr_t vaa_engine_n_candidates(const struct VaaEngine *engine);

// Id of question `index`, owned by the engine; null when out of range.
//
// # Safety
// `engine` must be a live handle or null.
const char *vaa_engine_question_id(const struct VaaEngine *engine, uintptr_t index);

// Id of candidate `index`, owned by the engine; null when out of range.
//
// # Safety
// `engine` must be a live handle or null.
const char *vaa_engine_candidate_id(const struct VaaEngine *engine, uintptr_t index);

// Starts a respondent at the prior. `selector` is a registry name such
// as `posterior_rmse`; `seed` drives the random selector.
//
// # Safety
// `engine` must be live, `selector` NUL-terminated and `out` valid.
enum VaaStatus vaa_session_new(const struct VaaEngine *engine,
                               const char *selector,
                               uint64_t seed,
                               struct VaaSession **out);

// # Safety
// `session` must come from `vaa_session_new` and not be used afterwards.
void vaa_session_free(struct VaaSession *session);

// Writes the next question's index to `out`, or returns `Done`.
//
// # Safety
// `session` must be live and `out` valid.
enum VaaStatus vaa_session_next(struct VaaSession *session, uintptr_t *out);

// Records an answer: non-zero `agree` is agreement.
//
// # Safety
// `session` must be live.
enum VaaStatus vaa_session_answer(struct VaaSession *session, uintptr_t question, int agree);

// Skips a question: it is never offered again and carries no information.
//
// # Safety
// `session` must be live.
enum VaaStatus vaa_session_skip(struct VaaSession *session, uintptr_t question);

// Number of answered questions, or 0 for a null handle.
//
// # Safety
// `session` must be live or null.
uintptr_t vaa_session_n_answered(const struct VaaSession *session);

// Fills `out[0..len]` with the predictive agreement probability of every
// question; `len` must equal the number of questions.
//
// # Safety
// `session` must be live and `out` valid for `len` writes.
enum VaaStatus vaa_session_predictive(struct VaaSession *session, double *out, uintptr_t len);

// Writes the `m` closest candidates (row indices, ascending distance)
// and their distances. `distances` may be null.
//
// # Safety
// `session` must be live; `candidates` and non-null `distances` must be
// valid for `m` writes.
enum VaaStatus vaa_session_recommend(struct VaaSession *session,
                                     enum VaaRecType kind,
                                     uintptr_t m,
                                     uintptr_t *candidates,
                                     double *distances);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VAA_H */
