#ifndef FACTORLAT_H
#define FACTORLAT_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum FlStatus {
  FL_STATUS_OK = 0,
  FL_STATUS_INVALID_ARGUMENT = 1,
  FL_STATUS_INVALID_DISCRIMINANT = 2,
  FL_STATUS_EXPLICIT_UNAVAILABLE = 3,
  FL_STATUS_TOO_LARGE = 4,
  FL_STATUS_IO = 5,
  FL_STATUS_INTERNAL = 6,
  FL_STATUS_PANIC = 7,
} FlStatus;

// Opaque class group handle.
typedef struct FlClassGroup FlClassGroup;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// Valid until the next call into the library on the same thread.
const char *fl_last_error_message(void);

// Builds the class group of `disc`. Accepts a fundamental discriminant or a
// squarefree `d = 2, 3 mod 4`, meaning the field `Q(sqrt d)`.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum FlStatus fl_class_group_new(int64_t disc, struct FlClassGroup **out);

// # Safety
// `cg` must be null or a handle from [`fl_class_group_new`] not yet freed.
void fl_class_group_free(struct FlClassGroup *cg);

// # Safety
// `cg` must be a live handle and `out` writable.
enum FlStatus fl_class_group_order(const struct FlClassGroup *cg, uint64_t *out);

// Writes up to `cap` invariant factors to `out` and the full count to `len`.
// Returns `InvalidArgument` when `cap` is too small; `len` is still set.
//
// # Safety
// `cg` must be a live handle, `out` must hold `cap` values, `len` writable.
enum FlStatus fl_class_group_invariants(const struct FlClassGroup *cg,
                                        uint64_t *out,
                                        size_t cap,
                                        size_t *len);

// Reduced form number `index` (principal form first) as `[a, b, c]`.
//
// # Safety
// `cg` must be a live handle and `out` must hold three values.
enum FlStatus fl_class_group_form(const struct FlClassGroup *cg, size_t index, int64_t *out);

// Number of irreducible factorizations of `n`. `cap` bounds the sequence
// length; 0 selects the default.
//
// # Safety
// `cg` must be a live handle and `out` writable.
enum FlStatus fl_eta(const struct FlClassGroup *cg, uint64_t n, uint32_t cap, uint64_t *out);

// Factorization report of `n` as JSON. If explicit elements were requested
// but are unavailable, the symbolic report is still written and
// `ExplicitUnavailable` is returned.
//
// # Safety
// `cg` must be a live handle and `out` writable; release `*out` with
// [`fl_string_free`].
enum FlStatus fl_factorize_json(const struct FlClassGroup *cg,
                                uint64_t n,
                                bool want_explicit,
                                uint32_t cap,
                                char **out);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void fl_string_free(char *s);

// Number of minimal zero-sum partitions of a sequence over an abstract group.
// `group` is `"d1,d2,..."`; `seq` is `"id:c1.c2:mult,..."`.
//
// # Safety
// `group` and `seq` must be NUL-terminated strings and `out` writable.
enum FlStatus fl_partition_count(const char *group, const char *seq, uint32_t cap, uint64_t *out);

// Davenport constant of a nontrivial group given as `"d1,d2,..."`.
//
// # Safety
// `group` must be a NUL-terminated string and `out` writable.
enum FlStatus fl_davenport(const char *group, uint64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FACTORLAT_H */
