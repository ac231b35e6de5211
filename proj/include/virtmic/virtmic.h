// Copyright 2026 The virtmic Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VIRTMIC_VIRTMIC_H_
#define VIRTMIC_VIRTMIC_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define VM_API __declspec(dllexport)
#else
#define VM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Values 2, 3 and 4 double as CLI exit codes. */
typedef enum vm_status {
  VM_OK = 0,
  VM_ERR_INVALID_ARGUMENT = 1,
  VM_ERR_CONFIG = 2,
  VM_ERR_DIMENSION = 3,
  VM_ERR_DIVERGENCE = 4,
  VM_ERR_INSUFFICIENT_SAMPLES = 5,
  VM_ERR_INDEX = 6,
  VM_ERR_SINGULAR = 7,
  VM_ERR_NUMERICAL = 8,
  VM_ERR_IO = 9,
  VM_ERR_FORMAT = 10,
  VM_ERR_INTERNAL = 99
} vm_status;

typedef enum vm_corr_kind { VM_CORR_AUTO = 0, VM_CORR_CROSS = 1 } vm_corr_kind;
typedef enum vm_solver { VM_SOLVER_GD = 0, VM_SOLVER_CLOSED_FORM = 1 } vm_solver;

typedef struct vm_signal vm_signal;
typedef struct vm_matrix vm_matrix;
typedef struct vm_filter vm_filter;
typedef struct vm_calibration vm_calibration;
typedef struct vm_tracker vm_tracker;
typedef struct vm_config vm_config;
typedef struct vm_report vm_report;
typedef struct vm_mismatch vm_mismatch;

VM_API const char* vm_version(void);
VM_API const char* vm_status_string(vm_status status);
/* Message of the last failed call on this thread; "" if none. */
VM_API const char* vm_last_error(void);
VM_API void vm_string_free(char* s);

/* Signals: data is row-major, channels x samples. */
VM_API vm_status vm_signal_create(const double* data, size_t channels, size_t samples,
                                  double sample_rate, vm_signal** out);
/* WAV or CSV; sample_rate is used for CSV only. */
VM_API vm_status vm_signal_load(const char* path, double sample_rate, vm_signal** out);
VM_API vm_status vm_signal_dims(const vm_signal* sig, size_t* channels, size_t* samples,
                                double* sample_rate);
VM_API vm_status vm_signal_copy(const vm_signal* sig, double* out, size_t capacity);
VM_API void vm_signal_free(vm_signal* sig);

/* Stacked-tap correlation matrices. Auto: MI x MI; cross: MI x E. */
VM_API vm_status vm_corr_auto(const vm_signal* sig, int filter_len, size_t start,
                              size_t window, vm_matrix** out);
VM_API vm_status vm_corr_cross(const vm_signal* mon, const vm_signal* err, int filter_len,
                               size_t start, size_t window, vm_matrix** out);
VM_API vm_status vm_matrix_create(const double* data, size_t rows, size_t cols,
                                  int n_mics, int filter_len, int n_targets,
                                  vm_corr_kind kind, vm_matrix** out);
VM_API vm_status vm_matrix_dims(const vm_matrix* m, size_t* rows, size_t* cols);
VM_API vm_status vm_matrix_copy(const vm_matrix* m, double* out, size_t capacity);
VM_API vm_status vm_matrix_write(const vm_matrix* m, const char* path);
VM_API vm_status vm_matrix_read(const char* path, vm_matrix** out);
VM_API void vm_matrix_free(vm_matrix* m);

/* Observation filters. */
VM_API vm_status vm_filter_time_optimal(const vm_matrix* r_mm, const vm_matrix* r_me,
                                        double beta, double sample_rate, vm_filter** out);
VM_API vm_status vm_filter_apply(const vm_filter* of, const vm_signal* mon,
                                 vm_signal** out);
/* Time-domain taps, row-major E x MI. */
VM_API vm_status vm_filter_coeffs(const vm_filter* of, double* out, size_t capacity,
                                  size_t* rows, size_t* cols);
/* ".csv" writes a CSV table, anything else OBF1. */
VM_API vm_status vm_filter_write(const vm_filter* of, const char* path);
VM_API vm_status vm_filter_read(const char* path, vm_filter** out);
VM_API void vm_filter_free(vm_filter* of);
VM_API vm_status vm_estimation_error_db(const vm_signal* d_e, const vm_signal* d_e_hat,
                                        int fft_len, double* broadband_db);

/* Calibration sets. */
VM_API vm_status vm_calibration_from_signals(const vm_signal* const* mons,
                                             const vm_signal* const* errs,
                                             size_t n_sources, int filter_len,
                                             vm_calibration** out);
VM_API vm_status vm_calibration_load(const char* dir, vm_calibration** out);
VM_API vm_status vm_calibration_save(const vm_calibration* cal, const char* dir);
VM_API vm_status vm_calibration_dims(const vm_calibration* cal, int* n_sources,
                                     int* n_mics, int* filter_len, int* n_targets);
VM_API vm_status vm_reconstruct_auto(const vm_calibration* cal, const double* z, size_t n,
                                     vm_matrix** out);
VM_API vm_status vm_reconstruct_cross(const vm_calibration* cal, const double* z, size_t n,
                                      vm_matrix** out);
VM_API vm_status vm_calibration_filter(const vm_calibration* cal, const double* z,
                                       size_t n, double beta, vm_filter** out);
VM_API void vm_calibration_free(vm_calibration* cal);

/* Tracker settings. NULL arrays take defaults; arrays hold n_values entries
   (1 broadcasts to all sources). */
typedef struct vm_tracker_options {
  const double* alpha;
  const double* lower;
  const double* upper;
  const double* sigma;
  const double* z_init;
  size_t n_values;
  int iters_per_frame;
  int use_eq10_gradient;
  vm_solver solver;
} vm_tracker_options;

VM_API void vm_tracker_options_init(vm_tracker_options* opts);
VM_API vm_status vm_objective(const vm_matrix* r, const vm_calibration* cal,
                              const double* z, size_t n, const vm_tracker_options* opts,
                              double* q);
VM_API vm_status vm_gradient(const vm_matrix* r, const vm_calibration* cal,
                             const double* z, size_t n, const vm_tracker_options* opts,
                             double* grad);
VM_API vm_status vm_closed_form(const vm_matrix* r, const vm_calibration* cal, double* z,
                                size_t n, double* condition_number);
VM_API vm_status vm_stability_bound(const vm_calibration* cal, double* bound);
VM_API vm_status vm_normalized_error_db(const vm_matrix* r, const vm_matrix* r_hat,
                                       double* db);

VM_API vm_status vm_tracker_create(const vm_calibration* cal,
                                   const vm_tracker_options* opts, vm_tracker** out);
/* r_me may be NULL. */
VM_API vm_status vm_tracker_push(vm_tracker* t, const vm_matrix* r_mm,
                                 const vm_matrix* r_me, double time_s);
VM_API vm_status vm_tracker_z(const vm_tracker* t, double* z, size_t n);
VM_API vm_status vm_tracker_status(const vm_tracker* t, int64_t* frames, int* converged,
                                   int* diverged);
VM_API void vm_tracker_free(vm_tracker* t);

/* Configuration files. */
VM_API vm_status vm_config_load(const char* path, vm_config** out);
VM_API vm_status vm_config_parse(const char* text, const char* base_dir, vm_config** out);
VM_API vm_status vm_config_clone(const vm_config* cfg, vm_config** out);
VM_API vm_status vm_config_set_seed(vm_config* cfg, uint64_t noise_seed);
VM_API vm_status vm_config_set_solver(vm_config* cfg, vm_solver solver);
VM_API vm_status vm_config_set_use_eq10(vm_config* cfg, int enabled);
VM_API vm_status vm_config_n_sources(const vm_config* cfg, int* n_sources);
/* Caller frees *out with vm_string_free. */
VM_API vm_status vm_config_resolved_json(const vm_config* cfg, char** out);
/* Ratios from the optional mismatch section; VM_ERR_CONFIG when absent. */
VM_API vm_status vm_config_mismatch(const vm_config* cfg, double* z_true, double* z_used,
                                    size_t n, double* duration_s);
VM_API void vm_config_free(vm_config* cfg);

/* Writes monitor_irs.irt and virtual_irs.irt. */
VM_API vm_status vm_synth(const vm_config* cfg, const char* out_dir);
VM_API vm_status vm_run_calibration(const vm_config* cfg, vm_calibration** out);

typedef struct vm_report_summary {
  int64_t frames;
  int converged;
  int diverged;
  double plateau_l_mm_db;
  double plateau_l_me_db;
  double plateau_l_me_init_db;
  double l_eps_opt_db;
  double l_eps_hat_db;
  double l_eps_st_db;
  double l_eps_zero_db;
  double stability_bound;
  double alpha_max;
  double max_source_coherence;
} vm_report_summary;

/* cal may be NULL to calibrate inline. A diverged run still returns VM_OK
   with summary.diverged set and the last stable z. */
VM_API vm_status vm_run_tracking(const vm_config* cfg, const vm_calibration* cal,
                                 vm_report** out);
VM_API vm_status vm_report_summary_get(const vm_report* rep, vm_report_summary* out);
VM_API vm_status vm_report_z(const vm_report* rep, double* z, size_t n);
/* history.csv, spectra.csv, summary.json */
VM_API vm_status vm_report_write(const vm_report* rep, const char* dir);
VM_API void vm_report_free(vm_report* rep);

VM_API vm_status vm_run_mismatch(const vm_config* cfg, const vm_calibration* cal,
                                 const double* z_true, const double* z_used, size_t n,
                                 double duration_s, vm_mismatch** out);
VM_API vm_status vm_mismatch_summary(const vm_mismatch* m, double* nominal_db,
                                     double* matched_db, double* mismatched_db,
                                     double* degradation_db);
/* mismatch_spectra.csv, mismatch_summary.json */
VM_API vm_status vm_mismatch_write(const vm_mismatch* m, const char* dir);
VM_API void vm_mismatch_free(vm_mismatch* m);

#ifdef __cplusplus
}
#endif

#endif  // VIRTMIC_VIRTMIC_H_
