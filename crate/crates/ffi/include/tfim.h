#ifndef TFIM_H
#define TFIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Boundary condition codes.
#define TFIM_BC_FREE 0

#define TFIM_BC_PERIODIC 1

#define TFIM_BC_WIRED 2

typedef enum TfimStatus {
  TFIM_STATUS_OK = 0,
  TFIM_STATUS_NULL_POINTER = 1,
  TFIM_STATUS_INVALID_UTF8 = 2,
  TFIM_STATUS_INVALID_ARGUMENT = 3,
  TFIM_STATUS_CONFIG = 4,
  TFIM_STATUS_DOMAIN = 5,
  TFIM_STATUS_ESTIMATION = 6,
  TFIM_STATUS_NUMERICAL = 7,
  TFIM_STATUS_IO = 8,
  TFIM_STATUS_PANIC = 9,
} TfimStatus;

// Exact diagonalization of a box `{-half..half}^dim` (or `{-half+1..half}^dim`
// when `even_side` is nonzero).
typedef struct TfimModel TfimModel;

// A finished experiment run.
typedef struct TfimRun TfimRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until
// the next call into the library from the same thread.
const char *tfim_last_error_message(void);

// Parses `config` (TOML, or JSON when `is_json` is nonzero), runs it and
// stores the handle in `*out`.
//
// # Safety
// `config` must be a NUL-terminated string and `out` a valid pointer.
enum TfimStatus tfim_run_config(const char *config,
                                int32_t is_json,
                                uint32_t workers,
                                struct TfimRun **out);

// # Safety
// `run` must come from [`tfim_run_config`] and not be freed.
enum TfimStatus tfim_run_row_count(const struct TfimRun *run, size_t *out);

// Estimate and standard error of row `index`.
//
// # Safety
// `run` must be a live handle; `estimate` and `std_error` valid pointers.
enum TfimStatus tfim_run_row(const struct TfimRun *run,
                             size_t index,
                             double *estimate,
                             double *std_error);

// `*passed` is 1 when no check of the run failed, 0 otherwise.
//
// # Safety
// `run` must be a live handle and `passed` a valid pointer.
enum TfimStatus tfim_run_passed(const struct TfimRun *run, int32_t *passed);

// Writes the result table as CSV to `path`.
//
// # Safety
// `run` must be a live handle and `path` a NUL-terminated string.
enum TfimStatus tfim_run_write_csv(const struct TfimRun *run, const char *path);

// # Safety
// `run` must come from [`tfim_run_config`] or be null; it is invalid afterwards.
void tfim_run_free(struct TfimRun *run);

// # Safety
// `out` must be a valid pointer.
enum TfimStatus tfim_model_new(uint32_t dim,
                               uint32_t half,
                               int32_t even_side,
                               uint32_t space,
                               double lambda,
                               double delta,
                               struct TfimModel **out);

// # Safety
// `model` must be a live handle and `out` a valid pointer.
enum TfimStatus tfim_model_sites(const struct TfimModel *model, size_t *out);

// `⟨σ(x, s) σ(y, t)⟩` on the time interval of length `r` with time
// boundary `time`. Sites are indices into the box.
//
// # Safety
// `model` must be a live handle and `out` a valid pointer.
enum TfimStatus tfim_model_correlation(const struct TfimModel *model,
                                       size_t x,
                                       double s,
                                       size_t y,
                                       double t,
                                       uint32_t time,
                                       double r,
                                       double *out);

// # Safety
// `model` must come from [`tfim_model_new`] or be null; it is invalid afterwards.
void tfim_model_free(struct TfimModel *model);

// `⟨σ(0,0)⟩` in `{-half..half}^dim` with wired space and time on `[-r/2, r/2]`.
//
// # Safety
// `out` must be a valid pointer.
enum TfimStatus tfim_wired_magnetization(uint32_t dim,
                                         uint32_t half,
                                         double r,
                                         double lambda,
                                         double delta,
                                         double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TFIM_H */
