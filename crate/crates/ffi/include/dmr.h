#ifndef DMR_H
#define DMR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every call.
 */
typedef enum DmrStatus {
  DMR_STATUS_OK = 0,
  DMR_STATUS_NULL_POINTER = 1,
  DMR_STATUS_INVALID_UTF8 = 2,
  DMR_STATUS_INVALID_ARGUMENT = 3,
  DMR_STATUS_PARSE_ERROR = 4,
  DMR_STATUS_NOT_FOUND = 5,
  DMR_STATUS_IO = 6,
  DMR_STATUS_INTERNAL = 7,
} DmrStatus;

/*
 A dual-encoder model.
 */
typedef struct DmrModel DmrModel;

/*
 A ranked candidate list.
 */
typedef struct DmrRanking DmrRanking;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or null. Valid until the
 next call on the same thread.
 */
const char *dmr_last_error(void);

/*
 Releases a string returned by this library. Null is ignored.

 # Safety
 `s` must come from this library and not have been freed.
 */
void dmr_string_free(char *s);

/*
 # Safety
 `text` must be a NUL-terminated string; `out` must be writable.
 */
enum DmrStatus dmr_count_tokens(const char *text, size_t *out);

/*
 New model with n-gram orders 2, 3 and 4.

 # Safety
 `out` must be writable.
 */
enum DmrStatus dmr_model_new(size_t base_dim,
                             size_t proj_dim,
                             uint64_t seed,
                             struct DmrModel **out);

/*
 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum DmrStatus dmr_model_load(const char *path, struct DmrModel **out);

/*
 # Safety
 `model` must be a live handle; `path` a NUL-terminated string.
 */
enum DmrStatus dmr_model_save(const struct DmrModel *model, const char *path);

/*
 # Safety
 `model` must be null or a handle not yet freed.
 */
void dmr_model_free(struct DmrModel *model);

/*
 Ranks the candidate elements of `html` against `utterance`, with no
 interaction history. `target_uid` may be null. `token_limit` 0 means
 unlimited. The ranking keeps every candidate; `k` is recorded for
 callers that only want the head.

 # Safety
 `model` must be a live handle, string arguments NUL-terminated (or null
 where allowed) and `out` writable.
 */
enum DmrStatus dmr_rank_html(const struct DmrModel *model,
                             const char *html,
                             const char *utterance,
                             const char *target_uid,
                             size_t token_limit,
                             size_t k,
                             struct DmrRanking **out);

/*
 Number of ranked candidates, or 0 for a null handle.

 # Safety
 `ranking` must be null or a live handle.
 */
size_t dmr_ranking_len(const struct DmrRanking *ranking);

/*
 uid of the candidate at 0-based position `i`. The string is owned by the
 ranking.

 # Safety
 `ranking` must be a live handle; `out` writable.
 */
enum DmrStatus dmr_ranking_uid(const struct DmrRanking *ranking, size_t i, const char **out);

/*
 # Safety
 `ranking` must be a live handle; `out` writable.
 */
enum DmrStatus dmr_ranking_score(const struct DmrRanking *ranking, size_t i, double *out);

/*
 1-based rank of the target, or 0 when no target was given.

 # Safety
 `ranking` must be null or a live handle.
 */
size_t dmr_ranking_target_rank(const struct DmrRanking *ranking);

/*
 # Safety
 `ranking` must be null or a handle not yet freed.
 */
void dmr_ranking_free(struct DmrRanking *ranking);

/*
 # Safety
 String arguments must be NUL-terminated; `out` writable.
 */
enum DmrStatus dmr_chrf(const char *prediction,
                        const char *reference,
                        size_t max_order,
                        double *out);

/*
 Parses an action string and returns its canonical form.

 # Safety
 `text` must be NUL-terminated; `out` writable. Free the result with
 `dmr_string_free`.
 */
enum DmrStatus dmr_parse_action(const char *text, char **out);

/*
 Final score of a predicted action against the reference, both given as
 action strings.

 # Safety
 String arguments must be NUL-terminated; `out` writable.
 */
enum DmrStatus dmr_turn_score(const char *prediction,
                              const char *reference,
                              size_t max_order,
                              double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DMR_H */
