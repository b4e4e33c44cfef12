#ifndef SPECCY_H
#define SPECCY_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum SpStatus {
  SP_STATUS_OK = 0,
  SP_STATUS_NULL_POINTER = 1,
  SP_STATUS_INVALID_INPUT = 2,
  SP_STATUS_PRECONDITION = 3,
  /*
   The ledger was computed but at least one identity failed.
   */
  SP_STATUS_MISMATCH = 4,
  SP_STATUS_INTERNAL = 5,
} SpStatus;

/*
 Opaque handle to an even lattice.
 */
typedef struct SpLattice SpLattice;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or NULL. Valid until the next call.
 */
const char *sp_last_error(void);

/*
 Releases a string returned by this library. NULL is ignored.

 # Safety
 `s` must come from this library and not have been freed.
 */
void sp_string_free(char *s);

/*
 Builds a lattice from an `n × n` row-major Gram matrix.

 # Safety
 `gram` must point to `n*n` integers; `out` must be writable.
 */
enum SpStatus sp_lattice_new(const int64_t *gram, size_t n, struct SpLattice **out);

/*
 # Safety
 `l` must come from [`sp_lattice_new`] and not have been freed. NULL is ignored.
 */
void sp_lattice_free(struct SpLattice *l);

/*
 `|det|`, the order of the discriminant group.

 # Safety
 `l` must be a live handle; `out` must be writable.
 */
enum SpStatus sp_lattice_disc(const struct SpLattice *l, uint64_t *out);

/*
 Whether the discriminant form is anisotropic.

 # Safety
 `l` must be a live handle; `out` must be writable.
 */
enum SpStatus sp_lattice_is_maximal(const struct SpLattice *l, bool *out);

/*
 Degree of the CM cycle `Z(m, μ)` on a negative definite binary lattice, as JSON
 `{"m", "mu", "prime", "weighted_count", "degree"}`. `mu_index` follows the coset order of
 the discriminant group.

 # Safety
 `l0` must be a live handle; `out_json` must be writable.
 */
enum SpStatus sp_cm_degree(const struct SpLattice *l0,
                           int64_t m_num,
                           int64_t m_den,
                           size_t mu_index,
                           char **out_json);

/*
 Runs the degree ledger for `L` with sublattice columns `sub` (`sub_rank` vectors of length
 `rank(L)`, concatenated) and the principal part
 `c00 + Σ_i (c_num[i]/c_den[i])·q^{−m_num[i]/m_den[i]}·φ_{mu[i]}`.

 Writes the report as JSON and returns [`SpStatus::Mismatch`] when an identity fails.

 # Safety
 `sub` must hold `sub_rank * rank(L)` integers; the term arrays must each hold `terms`
 entries (they may be NULL when `terms == 0`); `out_json` must be writable.
 */
enum SpStatus sp_verify_ledger(const struct SpLattice *l,
                               const int64_t *sub,
                               size_t sub_rank,
                               const int64_t *m_num,
                               const int64_t *m_den,
                               const size_t *mu,
                               const int64_t *c_num,
                               const int64_t *c_den,
                               size_t terms,
                               int64_t c00,
                               char **out_json);

/*
 Runs the command-line front end with `argv[0..argc]` and captures its output.

 `exit_code` receives what the executable would return; both output strings must be freed.

 # Safety
 `argv` must hold `argc` NUL-terminated strings; the out pointers must be writable.
 */
enum SpStatus sp_run_cli(size_t argc,
                         const char *const *argv,
                         int32_t *exit_code,
                         char **out,
                         char **err);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPECCY_H */
