/* C bindings for the frobtrace library */

#ifndef FROBTRACE_H
#define FROBTRACE_H

/* generated by cbindgen from frobtrace-ffi; do not edit by hand */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum {
  FROB_STATUS_OK = 0,
  FROB_STATUS_NULL_POINTER = 1,
  FROB_STATUS_INVALID_ARGUMENT = 2,
  FROB_STATUS_SINGULAR_CURVE = 3,
  FROB_STATUS_BAD_REDUCTION = 4,
  FROB_STATUS_NOT_SERRE_PAIR = 5,
  FROB_STATUS_COMPUTATION_FAILED = 6,
  FROB_STATUS_OVERFLOW = 7,
} FrobStatus;

/**
 * Opaque Serre-pair profile handle.
 */
typedef struct FrobProfile FrobProfile;

/**
 * Factor breakdown of the density constant at one trace value.
 */
typedef struct {
  int64_t t;
  /**
   * 16 / (3 pi^2)
   */
  double sato_tate;
  /**
   * exceptional factor (exact rational, rounded to double)
   */
  double exceptional;
  /**
   * truncated universal product
   */
  double universal;
  /**
   * multiplicative tail bound of the truncation
   */
  double tail;
  /**
   * assembled constant
   */
  double c;
} FrobConstant;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, as a static NUL-terminated string.
 */
const char *frob_version(void);

/**
 * Discriminant of the long Weierstrass model `(a1, a2, a3, a4, a6)`.
 * Fails with `Overflow` when the value does not fit a 64-bit integer.
 */
FrobStatus frob_discriminant(int64_t a1,
                             int64_t a2,
                             int64_t a3,
                             int64_t a4,
                             int64_t a6,
                             int64_t *out);

/**
 * Frobenius trace `a_p` for a good prime `p` (baseline kernel for small
 * primes, order finding for large ones).
 */
FrobStatus frob_ap(int64_t a1,
                   int64_t a2,
                   int64_t a3,
                   int64_t a4,
                   int64_t a6,
                   uint64_t p,
                   int64_t *out);

/**
 * 1 when the family pair `y^2+xy = x^3+l1`, `y^2+xy = x^3+l2` carries the
 * Serre-pair certificate, 0 otherwise.
 */
int32_t frob_serre_family_check(uint64_t l1, uint64_t l2);

/**
 * Profile for a certified family pair.
 */
FrobStatus frob_profile_family(uint64_t l1, uint64_t l2, FrobProfile **out);

/**
 * Profile for arbitrary curves given as coefficient arrays
 * `[a1, a2, a3, a4, a6]`; `attest` must be nonzero for pairs outside the
 * certified family.
 */
FrobStatus frob_profile_new(const int64_t *curve1,
                            const int64_t *curve2,
                            int32_t attest,
                            FrobProfile **out);

/**
 * Release a profile handle.
 */
void frob_profile_free(FrobProfile *profile);

/**
 * Conductor `m_A`; `Overflow` when it exceeds 64 bits.
 */
FrobStatus frob_profile_conductor(const FrobProfile *profile, uint64_t *out);

/**
 * Signed fundamental discriminants of the pair; `Overflow` past 64 bits.
 */
FrobStatus frob_profile_discriminants(const FrobProfile *profile, int64_t *d1, int64_t *d2);

/**
 * Factor breakdown of `C(E1 x E2, T)` with the universal product truncated
 * at `trunc` (pass 0 for the default 10^4).
 */
FrobStatus frob_constant(const FrobProfile *profile, int64_t t, uint64_t trunc, FrobConstant *out);

/**
 * Predicted count of good primes up to `x` with trace sum `T`.
 */
FrobStatus frob_predict(const FrobProfile *profile,
                        int64_t t,
                        uint64_t x,
                        uint64_t trunc,
                        double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FROBTRACE_H */
