#ifndef TAILPOINT_H
#define TAILPOINT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define TP_SIDE_LEFT 0

#define TP_SIDE_RIGHT 1

#define TP_POINT_PINF 0

#define TP_POINT_PMCONV 1

#define TP_POINT_PMCURV 2

typedef enum TpStatus {
  TP_STATUS_OK = 0,
  TP_STATUS_NULL_POINTER = 1,
  // Bad input: unparsable spec, invalid parameter, bad data.
  TP_STATUS_INVALID_ARGUMENT = 2,
  // A numerical routine failed to converge.
  TP_STATUS_NUMERIC = 3,
  // The requested point does not exist for this distribution.
  TP_STATUS_ABSENT = 4,
  // Internal error; the library caught a panic.
  TP_STATUS_PANIC = 5,
} TpStatus;

// A distribution with its density, derivatives, cdf and quantile.
typedef struct TpDistribution TpDistribution;

// Kernel estimate of a density or one of its first two derivatives.
typedef struct TpKde TpKde;

// Delimiting points of a distribution on both sides of the mode.
typedef struct TpReport TpReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. Free with
// `tp_string_free`.
char *tp_last_error_message(void);

// # Safety
// `s` must be NULL or a string returned by this library, not yet freed.
void tp_string_free(char *s);

// Parse a spec such as `"studentt(nu=3)"` and build the distribution.
//
// # Safety
// `spec` must be a NUL-terminated string; `out` must be writable.
enum TpStatus tp_distribution_new(const char *spec, struct TpDistribution **out);

// # Safety
// `d` must be NULL or a handle from `tp_distribution_new`, not yet freed.
void tp_distribution_free(struct TpDistribution *d);

// Density (`order` 0) or its first or second derivative at `x`.
//
// # Safety
// `d` must be a live handle; `out` must be writable.
enum TpStatus tp_distribution_density(const struct TpDistribution *d,
                                      uint32_t order,
                                      double x,
                                      double *out);

// # Safety
// `d` must be a live handle; `out` must be writable.
enum TpStatus tp_distribution_cdf(const struct TpDistribution *d, double x, double *out);

// # Safety
// `d` must be a live handle; `out` must be writable.
enum TpStatus tp_distribution_quantile(const struct TpDistribution *d, double p, double *out);

// # Safety
// `d` must be a live handle; `out` must be writable.
enum TpStatus tp_distribution_mode(const struct TpDistribution *d, double *out);

// Write `count` draws seeded by `seed` into `buf`.
//
// # Safety
// `d` must be a live handle; `buf` must hold `count` doubles.
enum TpStatus tp_distribution_sample(const struct TpDistribution *d,
                                     uintptr_t count,
                                     uint64_t seed,
                                     double *buf);

// # Safety
// `d` must be a live handle; `out` must be writable.
enum TpStatus tp_report_new(const struct TpDistribution *d, struct TpReport **out);

// # Safety
// `r` must be NULL or a handle from `tp_report_new`, not yet freed.
void tp_report_free(struct TpReport *r);

// # Safety
// `r` must be a live handle; `out` must be writable.
enum TpStatus tp_report_mode(const struct TpReport *r, double *out);

// Location and cdf of one point (`TP_POINT_*`) on one side (`TP_SIDE_*`).
// Returns `Absent` when the distribution has no such point.
//
// # Safety
// `r` must be a live handle; `x` and `cdf` must be writable.
enum TpStatus tp_report_point(const struct TpReport *r,
                              uint32_t side,
                              uint32_t point,
                              double *x,
                              double *cdf);

// The report as a JSON document, or NULL on failure. Free with
// `tp_string_free`.
//
// # Safety
// `r` must be NULL or a live handle.
char *tp_report_to_json(const struct TpReport *r);

// Kernel estimate of derivative `order` (0..=2) with bandwidth `h`. The
// data are copied.
//
// # Safety
// `values` must point to `len` doubles; `out` must be writable.
enum TpStatus tp_kde_new(const double *values,
                         uintptr_t len,
                         uint32_t order,
                         double h,
                         struct TpKde **out);

// # Safety
// `k` must be NULL or a handle from `tp_kde_new`, not yet freed.
void tp_kde_free(struct TpKde *k);

// # Safety
// `k` must be a live handle; `out` must be writable.
enum TpStatus tp_kde_eval(const struct TpKde *k, double x, double *out);

// Sample inflection point (bandwidth `h1`) and point of maximum convexity
// (bandwidth `h2`) on one side of `mode`.
//
// # Safety
// `values` must point to `len` doubles; `pinf` and `pmconv` must be writable.
enum TpStatus tp_sample_points(const double *values,
                               uintptr_t len,
                               double mode,
                               uint32_t side,
                               double h1,
                               double h2,
                               double *pinf,
                               double *pmconv);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TAILPOINT_H */
