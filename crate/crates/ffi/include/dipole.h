#ifndef DIPOLE_H
#define DIPOLE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DpStatus {
  DP_STATUS_OK = 0,
  DP_STATUS_NULL_POINTER = 1,
  DP_STATUS_INVALID_ARGUMENT = 2,
  DP_STATUS_PARSE = 3,
  DP_STATUS_NUMERIC = 4,
  DP_STATUS_PANIC = 5,
} DpStatus;

// Shell distribution selector for [`dp_smear_shell`].
typedef enum DpShell {
  DP_SHELL_DELTA_PLUS = 0,
  DP_SHELL_DELTA_MINUS = 1,
  DP_SHELL_DELTA_PRIME_PLUS = 2,
  DP_SHELL_DELTA_PRIME_MINUS = 3,
} DpShell;

// Opaque moment model.
typedef struct DpModel DpModel;

// Opaque wave packet.
typedef struct DpPacket DpPacket;

// A complex value with its absolute error estimate.
typedef struct DpValue {
  double re;
  double im;
  double err_est;
  // 1 when the quadrature met its tolerance.
  int32_t converged;
} DpValue;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length in bytes.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t dp_last_error(char *buf, size_t len);

// Gaussian packet of dimension `dim` centered at `center[0..dim]` with
// isotropic width `sigma`.
//
// # Safety
// `center` must point to `dim` doubles; `out` must be writable.
enum DpStatus dp_packet_gaussian(size_t dim,
                                 const double *center,
                                 double sigma,
                                 struct DpPacket **out);

// Packet from its JSON form.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum DpStatus dp_packet_from_json(const char *json, struct DpPacket **out);

// Value of the packet at momentum `k[0..dim]`.
//
// # Safety
// `p` must be a live packet handle, `k` must point to its dimension's
// doubles and `out` must be writable.
enum DpStatus dp_packet_eval(const struct DpPacket *p, const double *k, struct DpValue *out);

// # Safety
// `p` must be null or a handle not yet freed.
void dp_packet_free(struct DpPacket *p);

// Model with cumulants `c_2 .. c_{n+1}` taken from `cumulants[0..n]`.
//
// # Safety
// `cumulants` must point to `n` doubles; `out` must be writable.
enum DpStatus dp_model_new(double mass,
                           size_t dim,
                           const double *cumulants,
                           size_t n,
                           struct DpModel **out);

// Model from its JSON form.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum DpStatus dp_model_from_json(const char *json, struct DpModel **out);

// # Safety
// `m` must be null or a handle not yet freed.
void dp_model_free(struct DpModel *m);

// Smear a mass-shell delta or its mass derivative against a packet with
// default quadrature settings.
//
// # Safety
// `p` must be a live packet handle; `out` must be writable.
enum DpStatus dp_smear_shell(enum DpShell shell,
                             double mass,
                             const struct DpPacket *p,
                             struct DpValue *out);

// Truncated `n`-point Wightman function of `model` smeared against
// `packets[0..n]`, mollified and extrapolated where the shells are
// over-determined.
//
// # Safety
// `model` must be a live handle, `packets` must point to `n` live packet
// handles and `out` must be writable.
enum DpStatus dp_wightman(const struct DpModel *model,
                          size_t n,
                          const struct DpPacket *const *packets,
                          struct DpValue *out);

// Euclidean kernel of the given order (1 or 2) at distance `r`.
//
// # Safety
// `out` must be writable.
enum DpStatus dp_euclid_kernel(uint32_t order, double r, double mass, size_t dim, double *out);

// Run the acceptance suite (`full` nonzero for the full tier) and return
// the JSON report, to be released with [`dp_string_free`]. `passed`
// receives 1 when every criterion passes.
//
// # Safety
// `out` and `passed` must be writable.
enum DpStatus dp_suite_run(int32_t full, uint64_t seed, char **out, int32_t *passed);

// # Safety
// `s` must be null or a string returned by this library and not yet freed.
void dp_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIPOLE_H */
