#ifndef QHMM_H
#define QHMM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QhmmStatus {
  QHMM_STATUS_OK = 0,
  QHMM_STATUS_NULL_POINTER = 1,
  QHMM_STATUS_INVALID_UTF8 = 2,
  QHMM_STATUS_INVALID_MODEL = 3,
  QHMM_STATUS_INVALID_ARGUMENT = 4,
  QHMM_STATUS_BUFFER_TOO_SMALL = 5,
  QHMM_STATUS_INTERNAL = 6,
} QhmmStatus;

// Opaque model handle.
typedef struct QhmmModel QhmmModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer stays
// valid until the next failing call on the same thread.
const char *qhmm_last_error(void);

// Library version as a static NUL-terminated string.
const char *qhmm_version(void);

// Parse a model from JSON (classical, Kraus or unitary form).
//
// # Safety
// `json` must be a NUL-terminated string and `out` a writable pointer.
enum QhmmStatus qhmm_model_from_json(const char *json, struct QhmmModel **out);

// Release a model. NULL is ignored.
//
// # Safety
// `model` must come from [`qhmm_model_from_json`] and not be freed twice.
void qhmm_model_free(struct QhmmModel *model);

// # Safety
// `model` must be a live handle and `out` writable.
enum QhmmStatus qhmm_model_n_symbols(const struct QhmmModel *model, size_t *out);

// Probability of the symbol sequence `seq[0..len]`.
//
// # Safety
// `seq` must point to `len` readable values (may be NULL when `len` is 0).
enum QhmmStatus qhmm_sequence_probability(const struct QhmmModel *model,
                                          const size_t *seq,
                                          size_t len,
                                          double *out);

// Probabilities of all `m^t` sequences of length `t` in lexicographic order.
// `*written` receives the required length even when the buffer is too small.
//
// # Safety
// `buf` must have room for `cap` doubles; `written` must be writable.
enum QhmmStatus qhmm_distribution(const struct QhmmModel *model,
                                  size_t t,
                                  double *buf,
                                  size_t cap,
                                  size_t *written);

// Sample `shots` sequences of length `t` into `buf`, row-major
// (`shots × t` symbols).
//
// # Safety
// `buf` must have room for `cap` values.
enum QhmmStatus qhmm_simulate(const struct QhmmModel *model,
                              size_t t,
                              size_t shots,
                              uint64_t seed,
                              size_t *buf,
                              size_t cap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QHMM_H */
