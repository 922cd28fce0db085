#ifndef NUMEROSITY_H
#define NUMEROSITY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  NM_STATUS_OK = 0,
  NM_STATUS_NULL_POINTER = 1,
  NM_STATUS_INVALID_UTF8 = 2,
  NM_STATUS_INVALID_ARGUMENT = 3,
  NM_STATUS_PARSE = 4,
  NM_STATUS_ILLEGAL_TRANSITION = 5,
  NM_STATUS_DOMAIN = 6,
  NM_STATUS_INTERNAL = 7,
} NmStatus;

/**
 * Opaque parsed log.
 */
typedef struct NmLog NmLog;

/**
 * Opaque game session.
 */
typedef struct NmSession NmSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failing call on this thread; empty if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *nm_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void nm_string_free(char *s);

/**
 * `P(X >= k)` for `X ~ Binomial(n, p)`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
NmStatus nm_binomial_tail(uint64_t k, uint64_t n, double p, double *out);

/**
 * Natural log of [`nm_binomial_tail`], finite where the tail underflows.
 *
 * # Safety
 * `out` must be valid for writes.
 */
NmStatus nm_binomial_tail_ln(uint64_t k, uint64_t n, double p, double *out);

/**
 * # Safety
 * `xs` and `ys` must point to `len` readable doubles; `out` must be writable.
 */
NmStatus nm_pearson(const double *xs, const double *ys, size_t len, double *out);

/**
 * Creates a session. `config_json` may be null for the defaults.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must be writable.
 */
NmStatus nm_session_new(const char *config_json,
                        const char *learner,
                        const char *trainer,
                        uint64_t seed,
                        NmSession **out);

/**
 * Applies one input (JSON, e.g. `{"type":"touch_slot","slot":0}`) at
 * `now_ms` milliseconds since the epoch, written to the log as wall-clock
 * time without zone conversion. Writes `{"events":[...],"record":...}`.
 *
 * # Safety
 * `session` must be a live handle; `out_json` must be writable.
 */
NmStatus nm_session_step(NmSession *session,
                         const char *input_json,
                         int64_t now_ms,
                         char **out_json);

/**
 * # Safety
 * `session` must be a live handle; `out_json` must be writable.
 */
NmStatus nm_session_snapshot(const NmSession *session, char **out_json);

/**
 * Removes and returns the queued feedback events as a JSON array.
 *
 * # Safety
 * `session` must be a live handle; `out_json` must be writable.
 */
NmStatus nm_session_drain_events(NmSession *session, char **out_json);

/**
 * The session's trial log in `.csv` form.
 *
 * # Safety
 * `session` must be a live handle; `out` must be writable.
 */
NmStatus nm_session_log_csv(const NmSession *session, char **out);

/**
 * # Safety
 * `session` must come from [`nm_session_new`] and not be used afterwards.
 */
void nm_session_free(NmSession *session);

/**
 * Parses a log; `format` is `"csv"` or `"txt"`.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must be writable.
 */
NmStatus nm_log_parse(const char *text, const char *format, NmLog **out);

/**
 * Number of records; 0 for a null handle.
 *
 * # Safety
 * `log` must be null or a live handle.
 */
size_t nm_log_len(const NmLog *log);

/**
 * # Safety
 * `log` must be null or a live handle.
 */
size_t nm_log_warning_count(const NmLog *log);

/**
 * Record `index` as JSON.
 *
 * # Safety
 * `log` must be a live handle; `out_json` must be writable.
 */
NmStatus nm_log_record_json(const NmLog *log, size_t index, char **out_json);

/**
 * # Safety
 * `log` must come from [`nm_log_parse`] and not be used afterwards.
 */
void nm_log_free(NmLog *log);

/**
 * Accuracy report over `count` logs. `options_json` (nullable) follows the
 * analysis options schema; `format` is `"md"`, `"csv"` or `"json"`.
 *
 * # Safety
 * `logs` must point to `count` live handles; `out` must be writable.
 */
NmStatus nm_analyze(const NmLog *const *logs,
                    size_t count,
                    const char *options_json,
                    const char *format,
                    char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NUMEROSITY_H */
