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

#include "virtmic/virtmic.h"

#include <cstring>
#include <filesystem>
#include <new>
#include <string>

#include "acoustic_sim.hpp"
#include "config.hpp"
#include "corr.hpp"
#include "rmt_filter.hpp"
#include "signal.hpp"
#include "source_decomp.hpp"
#include "source_track.hpp"

using namespace virtmic;

struct vm_signal {
  MultichannelSignal s;
};
struct vm_matrix {
  LaggedCorrMatrix m;
};
struct vm_filter {
  ObservationFilter of;
};
struct vm_calibration {
  CalibrationSet cal;
};
struct vm_tracker {
  SourceTracker tracker;
};
struct vm_config {
  RunConfig cfg;
};
struct vm_report {
  TrackingReport rep;
};
struct vm_mismatch {
  MismatchReport rep;
};

namespace {

thread_local std::string g_last_error;

vm_status Ok() {
  g_last_error.clear();
  return VM_OK;
}

vm_status Err(vm_status s, std::string msg) {
  g_last_error = std::move(msg);
  return s;
}

template <typename F>
vm_status Guard(F&& f) {
  try {
    f();
    return Ok();
  } catch (const Error& e) {
    return Err(static_cast<vm_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return Err(VM_ERR_INTERNAL, "out of memory");
  } catch (const std::filesystem::filesystem_error& e) {
    return Err(VM_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return Err(VM_ERR_INTERNAL, e.what());
  } catch (...) {
    return Err(VM_ERR_INTERNAL, "unknown exception");
  }
}

void Need(const void* p, const char* name) {
  if (p == nullptr) Fail(ErrorCode::kInvalidArgument, std::string(name) + " is NULL");
}

Vector ToVec(const double* z, size_t n, const char* name) {
  if (n > 0) Need(z, name);
  Vector v(static_cast<Eigen::Index>(n));
  for (size_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = z[i];
  return v;
}

void FromVec(const Vector& v, double* out, size_t n) {
  Need(out, "output");
  if (n != static_cast<size_t>(v.size()))
    Fail(ErrorCode::kDimensionMismatch,
         "output holds " + std::to_string(n) + " values, need " + std::to_string(v.size()));
  for (size_t i = 0; i < n; ++i) out[i] = v(static_cast<Eigen::Index>(i));
}

void CopyRowMajor(const Matrix& m, double* out, size_t capacity) {
  Need(out, "output");
  if (capacity < static_cast<size_t>(m.size()))
    Fail(ErrorCode::kInvalidArgument,
         "output capacity " + std::to_string(capacity) + " < " + std::to_string(m.size()));
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      out, m.rows(), m.cols()) = m;
}

Matrix FromRowMajor(const double* data, size_t rows, size_t cols) {
  Need(data, "data");
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                        Eigen::RowMajor>>(
      data, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

TrackerConfig ToTrackerConfig(const vm_tracker_options* o) {
  TrackerConfig t;
  if (o == nullptr) return t;
  const size_t n = o->n_values;
  if (o->alpha) t.alpha = ToVec(o->alpha, n, "alpha");
  if (o->lower) t.lower = ToVec(o->lower, n, "lower");
  if (o->upper) t.upper = ToVec(o->upper, n, "upper");
  if (o->sigma) t.sigma = ToVec(o->sigma, n, "sigma");
  if (o->z_init) t.z_init = ToVec(o->z_init, n, "z_init");
  t.iters_per_frame = o->iters_per_frame;
  t.use_eq10_gradient = o->use_eq10_gradient != 0;
  t.solver = o->solver == VM_SOLVER_CLOSED_FORM ? Solver::kClosedForm
                                                : Solver::kGradientDescent;
  return t;
}

TrackerConfig Resolved(const vm_tracker_options* o, const CalibrationSet& cal) {
  TrackerConfig t = ToTrackerConfig(o);
  t.Validate(cal.n_sources());
  return t.Resolve(cal);
}

char* DupString(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename T, typename... Args>
void Make(T** out, Args&&... args) {
  Need(out, "out");
  *out = new T{std::forward<Args>(args)...};
}

}  // namespace

extern "C" {

const char* vm_version(void) { return VIRTMIC_VERSION; }

const char* vm_status_string(vm_status s) {
  switch (s) {
    case VM_OK: return "ok";
    case VM_ERR_INVALID_ARGUMENT: return "invalid argument";
    case VM_ERR_CONFIG: return "configuration error";
    case VM_ERR_DIMENSION: return "dimension mismatch";
    case VM_ERR_DIVERGENCE: return "divergence";
    case VM_ERR_INSUFFICIENT_SAMPLES: return "insufficient samples";
    case VM_ERR_INDEX: return "index out of range";
    case VM_ERR_SINGULAR: return "singular matrix";
    case VM_ERR_NUMERICAL: return "numerical failure";
    case VM_ERR_IO: return "I/O error";
    case VM_ERR_FORMAT: return "file format error";
    case VM_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* vm_last_error(void) { return g_last_error.c_str(); }

void vm_string_free(char* s) { std::free(s); }

vm_status vm_signal_create(const double* data, size_t channels, size_t samples,
                           double sample_rate, vm_signal** out) {
  return Guard([&] {
    Make(out, MultichannelSignal(FromRowMajor(data, channels, samples), sample_rate));
  });
}

vm_status vm_signal_load(const char* path, double sample_rate, vm_signal** out) {
  return Guard([&] {
    Need(path, "path");
    Make(out, LoadSignal(path, sample_rate));
  });
}

vm_status vm_signal_dims(const vm_signal* sig, size_t* channels, size_t* samples,
                         double* sample_rate) {
  return Guard([&] {
    Need(sig, "signal");
    if (channels) *channels = static_cast<size_t>(sig->s.channels());
    if (samples) *samples = static_cast<size_t>(sig->s.length());
    if (sample_rate) *sample_rate = sig->s.sample_rate();
  });
}

vm_status vm_signal_copy(const vm_signal* sig, double* out, size_t capacity) {
  return Guard([&] {
    Need(sig, "signal");
    CopyRowMajor(sig->s.samples(), out, capacity);
  });
}

void vm_signal_free(vm_signal* sig) { delete sig; }

vm_status vm_corr_auto(const vm_signal* sig, int filter_len, size_t start, size_t window,
                       vm_matrix** out) {
  return Guard([&] {
    Need(sig, "signal");
    Make(out, EstimateCorrAuto(sig->s, filter_len, static_cast<Eigen::Index>(start),
                               static_cast<Eigen::Index>(window)));
  });
}

vm_status vm_corr_cross(const vm_signal* mon, const vm_signal* err, int filter_len,
                        size_t start, size_t window, vm_matrix** out) {
  return Guard([&] {
    Need(mon, "mon");
    Need(err, "err");
    Make(out, EstimateCorrCross(mon->s, err->s, filter_len,
                                static_cast<Eigen::Index>(start),
                                static_cast<Eigen::Index>(window)));
  });
}

vm_status vm_matrix_create(const double* data, size_t rows, size_t cols, int n_mics,
                           int filter_len, int n_targets, vm_corr_kind kind,
                           vm_matrix** out) {
  return Guard([&] {
    const CorrKind k = kind == VM_CORR_CROSS ? CorrKind::kMonitorCross : CorrKind::kMonitorAuto;
    Make(out, LaggedCorrMatrix(FromRowMajor(data, rows, cols), n_mics, filter_len,
                               n_targets, k));
  });
}

vm_status vm_matrix_dims(const vm_matrix* m, size_t* rows, size_t* cols) {
  return Guard([&] {
    Need(m, "matrix");
    if (rows) *rows = static_cast<size_t>(m->m.data().rows());
    if (cols) *cols = static_cast<size_t>(m->m.data().cols());
  });
}

vm_status vm_matrix_copy(const vm_matrix* m, double* out, size_t capacity) {
  return Guard([&] {
    Need(m, "matrix");
    CopyRowMajor(m->m.data(), out, capacity);
  });
}

vm_status vm_matrix_write(const vm_matrix* m, const char* path) {
  return Guard([&] {
    Need(m, "matrix");
    Need(path, "path");
    WriteLcm(path, m->m);
  });
}

vm_status vm_matrix_read(const char* path, vm_matrix** out) {
  return Guard([&] {
    Need(path, "path");
    Make(out, ReadLcm(path));
  });
}

void vm_matrix_free(vm_matrix* m) { delete m; }

vm_status vm_filter_time_optimal(const vm_matrix* r_mm, const vm_matrix* r_me, double beta,
                                 double sample_rate, vm_filter** out) {
  return Guard([&] {
    Need(r_mm, "r_mm");
    Need(r_me, "r_me");
    Make(out, OfTimeOptimal(r_mm->m, r_me->m, beta, sample_rate));
  });
}

vm_status vm_filter_apply(const vm_filter* of, const vm_signal* mon, vm_signal** out) {
  return Guard([&] {
    Need(of, "filter");
    Need(mon, "mon");
    Make(out, ApplyOf(of->of, mon->s));
  });
}

vm_status vm_filter_coeffs(const vm_filter* of, double* out, size_t capacity, size_t* rows,
                           size_t* cols) {
  return Guard([&] {
    Need(of, "filter");
    if (of->of.domain != FilterDomain::kTimeFir)
      Fail(ErrorCode::kInvalidArgument, "filter has no time-domain taps");
    const Matrix& c = of->of.time_coeffs;
    if (rows) *rows = static_cast<size_t>(c.rows());
    if (cols) *cols = static_cast<size_t>(c.cols());
    if (out) CopyRowMajor(c, out, capacity);
  });
}

vm_status vm_filter_write(const vm_filter* of, const char* path) {
  return Guard([&] {
    Need(of, "filter");
    Need(path, "path");
    const std::filesystem::path p(path);
    if (p.extension() == ".csv")
      WriteObfCsv(p, of->of);
    else
      WriteObf(p, of->of);
  });
}

vm_status vm_filter_read(const char* path, vm_filter** out) {
  return Guard([&] {
    Need(path, "path");
    Make(out, ReadObf(path));
  });
}

void vm_filter_free(vm_filter* of) { delete of; }

vm_status vm_estimation_error_db(const vm_signal* d_e, const vm_signal* d_e_hat,
                                 int fft_len, double* broadband_db) {
  return Guard([&] {
    Need(d_e, "d_e");
    Need(d_e_hat, "d_e_hat");
    Need(broadband_db, "broadband_db");
    *broadband_db = EstimationErrorSpectrum(d_e->s, d_e_hat->s, fft_len).broadband_db;
  });
}

vm_status vm_calibration_from_signals(const vm_signal* const* mons,
                                      const vm_signal* const* errs, size_t n_sources,
                                      int filter_len, vm_calibration** out) {
  return Guard([&] {
    Need(mons, "mons");
    Need(errs, "errs");
    std::vector<SignalPair> pairs;
    for (size_t i = 0; i < n_sources; ++i) {
      Need(mons[i], "mons[i]");
      Need(errs[i], "errs[i]");
      pairs.emplace_back(mons[i]->s, errs[i]->s);
    }
    Make(out, Calibrate(pairs, filter_len));
  });
}

vm_status vm_calibration_load(const char* dir, vm_calibration** out) {
  return Guard([&] {
    Need(dir, "dir");
    Make(out, LoadCalibration(dir));
  });
}

vm_status vm_calibration_save(const vm_calibration* cal, const char* dir) {
  return Guard([&] {
    Need(cal, "calibration");
    Need(dir, "dir");
    SaveCalibration(dir, cal->cal);
  });
}

vm_status vm_calibration_dims(const vm_calibration* cal, int* n_sources, int* n_mics,
                              int* filter_len, int* n_targets) {
  return Guard([&] {
    Need(cal, "calibration");
    if (n_sources) *n_sources = cal->cal.n_sources();
    if (n_mics) *n_mics = cal->cal.n_mics();
    if (filter_len) *filter_len = cal->cal.filter_len();
    if (n_targets) *n_targets = cal->cal.n_targets();
  });
}

vm_status vm_reconstruct_auto(const vm_calibration* cal, const double* z, size_t n,
                              vm_matrix** out) {
  return Guard([&] {
    Need(cal, "calibration");
    Make(out, ReconstructAuto(cal->cal, ToVec(z, n, "z")));
  });
}

vm_status vm_reconstruct_cross(const vm_calibration* cal, const double* z, size_t n,
                               vm_matrix** out) {
  return Guard([&] {
    Need(cal, "calibration");
    Make(out, ReconstructCross(cal->cal, ToVec(z, n, "z")));
  });
}

vm_status vm_calibration_filter(const vm_calibration* cal, const double* z, size_t n,
                                double beta, vm_filter** out) {
  return Guard([&] {
    Need(cal, "calibration");
    Make(out, OfDecomposed(cal->cal, ToVec(z, n, "z"), beta));
  });
}

void vm_calibration_free(vm_calibration* cal) { delete cal; }

void vm_tracker_options_init(vm_tracker_options* opts) {
  if (opts == nullptr) return;
  *opts = vm_tracker_options{};
  opts->iters_per_frame = 1;
  opts->solver = VM_SOLVER_GD;
}

vm_status vm_objective(const vm_matrix* r, const vm_calibration* cal, const double* z,
                       size_t n, const vm_tracker_options* opts, double* q) {
  return Guard([&] {
    Need(r, "r");
    Need(cal, "calibration");
    Need(q, "q");
    *q = Objective(r->m, cal->cal, ToVec(z, n, "z"), Resolved(opts, cal->cal));
  });
}

vm_status vm_gradient(const vm_matrix* r, const vm_calibration* cal, const double* z,
                      size_t n, const vm_tracker_options* opts, double* grad) {
  return Guard([&] {
    Need(r, "r");
    Need(cal, "calibration");
    FromVec(Gradient(r->m, cal->cal, ToVec(z, n, "z"), Resolved(opts, cal->cal)), grad, n);
  });
}

vm_status vm_closed_form(const vm_matrix* r, const vm_calibration* cal, double* z, size_t n,
                         double* condition_number) {
  return Guard([&] {
    Need(r, "r");
    Need(cal, "calibration");
    const ClosedFormSolution s = SolveClosedForm(r->m, cal->cal);
    FromVec(s.z, z, n);
    if (condition_number) *condition_number = s.condition_number;
  });
}

vm_status vm_stability_bound(const vm_calibration* cal, double* bound) {
  return Guard([&] {
    Need(cal, "calibration");
    Need(bound, "bound");
    *bound = StabilityBound(cal->cal);
  });
}

vm_status vm_normalized_error_db(const vm_matrix* r, const vm_matrix* r_hat, double* db) {
  return Guard([&] {
    Need(r, "r");
    Need(r_hat, "r_hat");
    Need(db, "db");
    *db = NormalizedErrorDb(r->m.data(), r_hat->m.data());
  });
}

vm_status vm_tracker_create(const vm_calibration* cal, const vm_tracker_options* opts,
                            vm_tracker** out) {
  return Guard([&] {
    Need(cal, "calibration");
    TrackerConfig t = ToTrackerConfig(opts);
    t.Validate(cal->cal.n_sources());
    Make(out, SourceTracker(cal->cal, t));
  });
}

vm_status vm_tracker_push(vm_tracker* t, const vm_matrix* r_mm, const vm_matrix* r_me,
                          double time_s) {
  return Guard([&] {
    Need(t, "tracker");
    Need(r_mm, "r_mm");
    t->tracker.PushFrame(r_mm->m, r_me ? &r_me->m : nullptr, time_s);
  });
}

vm_status vm_tracker_z(const vm_tracker* t, double* z, size_t n) {
  return Guard([&] {
    Need(t, "tracker");
    FromVec(t->tracker.state().z, z, n);
  });
}

vm_status vm_tracker_status(const vm_tracker* t, int64_t* frames, int* converged,
                            int* diverged) {
  return Guard([&] {
    Need(t, "tracker");
    const TrackerState& s = t->tracker.state();
    if (frames) *frames = s.frame_index;
    if (converged) *converged = s.converged ? 1 : 0;
    if (diverged) *diverged = s.diverged ? 1 : 0;
  });
}

void vm_tracker_free(vm_tracker* t) { delete t; }

vm_status vm_config_load(const char* path, vm_config** out) {
  return Guard([&] {
    Need(path, "path");
    Make(out, LoadConfig(path));
  });
}

vm_status vm_config_parse(const char* text, const char* base_dir, vm_config** out) {
  return Guard([&] {
    Need(text, "text");
    Make(out, ParseConfig(text, base_dir ? base_dir : ""));
  });
}

vm_status vm_config_clone(const vm_config* cfg, vm_config** out) {
  return Guard([&] {
    Need(cfg, "config");
    Make(out, cfg->cfg);
  });
}

vm_status vm_config_set_seed(vm_config* cfg, uint64_t noise_seed) {
  return Guard([&] {
    Need(cfg, "config");
    cfg->cfg.scene.noise_seed = noise_seed;
  });
}

vm_status vm_config_set_solver(vm_config* cfg, vm_solver solver) {
  return Guard([&] {
    Need(cfg, "config");
    if (solver != VM_SOLVER_GD && solver != VM_SOLVER_CLOSED_FORM)
      Fail(ErrorCode::kConfig, "unknown solver");
    cfg->cfg.scenario.tracker.solver =
        solver == VM_SOLVER_CLOSED_FORM ? Solver::kClosedForm : Solver::kGradientDescent;
  });
}

vm_status vm_config_set_use_eq10(vm_config* cfg, int enabled) {
  return Guard([&] {
    Need(cfg, "config");
    cfg->cfg.scenario.tracker.use_eq10_gradient = enabled != 0;
  });
}

vm_status vm_config_n_sources(const vm_config* cfg, int* n_sources) {
  return Guard([&] {
    Need(cfg, "config");
    Need(n_sources, "n_sources");
    *n_sources = cfg->cfg.scene.n_sources;
  });
}

vm_status vm_config_resolved_json(const vm_config* cfg, char** out) {
  return Guard([&] {
    Need(cfg, "config");
    Need(out, "out");
    *out = DupString(ResolvedConfigJson(cfg->cfg).dump(2));
  });
}

vm_status vm_config_mismatch(const vm_config* cfg, double* z_true, double* z_used, size_t n,
                             double* duration_s) {
  return Guard([&] {
    Need(cfg, "config");
    if (!cfg->cfg.mismatch) Fail(ErrorCode::kConfig, "configuration has no mismatch section");
    if (z_true) FromVec(cfg->cfg.mismatch->z_true, z_true, n);
    if (z_used) FromVec(cfg->cfg.mismatch->z_used, z_used, n);
    if (duration_s) *duration_s = cfg->cfg.mismatch->duration_s;
  });
}

void vm_config_free(vm_config* cfg) { delete cfg; }

vm_status vm_synth(const vm_config* cfg, const char* out_dir) {
  return Guard([&] {
    Need(cfg, "config");
    Need(out_dir, "out_dir");
    const ImpulseResponses irs = SynthIrs(cfg->cfg.scene, cfg->cfg.base_dir);
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    WriteIrt(dir / "monitor_irs.irt", irs.monitor, irs.sample_rate);
    WriteIrt(dir / "virtual_irs.irt", irs.virtual_mics, irs.sample_rate);
  });
}

vm_status vm_run_calibration(const vm_config* cfg, vm_calibration** out) {
  return Guard([&] {
    Need(cfg, "config");
    const RunConfig& c = cfg->cfg;
    Make(out, RunCalibration(c.scene, c.calibration, SynthIrs(c.scene, c.base_dir)));
  });
}

vm_status vm_run_tracking(const vm_config* cfg, const vm_calibration* cal,
                          vm_report** out) {
  return Guard([&] {
    Need(cfg, "config");
    const RunConfig& c = cfg->cfg;
    Make(out, RunTrackingScenario(c.scene, c.calibration, c.scenario,
                                  SynthIrs(c.scene, c.base_dir), cal ? &cal->cal : nullptr));
  });
}

vm_status vm_report_summary_get(const vm_report* rep, vm_report_summary* out) {
  return Guard([&] {
    Need(rep, "report");
    Need(out, "out");
    const TrackingReport& r = rep->rep;
    *out = vm_report_summary{};
    out->frames = static_cast<int64_t>(r.state.history.size());
    out->converged = r.state.converged ? 1 : 0;
    out->diverged = r.state.diverged ? 1 : 0;
    out->plateau_l_mm_db = r.plateau_l_mm_db;
    out->plateau_l_me_db = r.plateau_l_me_db;
    out->plateau_l_me_init_db = r.plateau_l_me_init_db;
    out->l_eps_opt_db = r.nominal.broadband_db;
    out->l_eps_hat_db = r.true_ratio.broadband_db;
    out->l_eps_st_db = r.tracked.broadband_db;
    out->l_eps_zero_db = r.zero_filter_db;
    out->stability_bound = r.stability_bound;
    out->alpha_max = r.tracker.alpha.size() ? r.tracker.alpha.maxCoeff() : 0.0;
    out->max_source_coherence = r.source_coherence;
  });
}

vm_status vm_report_z(const vm_report* rep, double* z, size_t n) {
  return Guard([&] {
    Need(rep, "report");
    FromVec(rep->rep.state.z, z, n);
  });
}

vm_status vm_report_write(const vm_report* rep, const char* dir) {
  return Guard([&] {
    Need(rep, "report");
    Need(dir, "dir");
    WriteTrackingReport(dir, rep->rep);
  });
}

void vm_report_free(vm_report* rep) { delete rep; }

vm_status vm_run_mismatch(const vm_config* cfg, const vm_calibration* cal,
                          const double* z_true, const double* z_used, size_t n,
                          double duration_s, vm_mismatch** out) {
  return Guard([&] {
    Need(cfg, "config");
    const RunConfig& c = cfg->cfg;
    Make(out, RunMismatchExperiment(c.scene, c.calibration, c.scenario,
                                    SynthIrs(c.scene, c.base_dir), ToVec(z_true, n, "z_true"),
                                    ToVec(z_used, n, "z_used"), duration_s,
                                    cal ? &cal->cal : nullptr));
  });
}

vm_status vm_mismatch_summary(const vm_mismatch* m, double* nominal_db, double* matched_db,
                              double* mismatched_db, double* degradation_db) {
  return Guard([&] {
    Need(m, "mismatch");
    if (nominal_db) *nominal_db = m->rep.nominal.broadband_db;
    if (matched_db) *matched_db = m->rep.matched.broadband_db;
    if (mismatched_db) *mismatched_db = m->rep.mismatched.broadband_db;
    if (degradation_db) *degradation_db = m->rep.degradation_db;
  });
}

vm_status vm_mismatch_write(const vm_mismatch* m, const char* dir) {
  return Guard([&] {
    Need(m, "mismatch");
    Need(dir, "dir");
    WriteMismatchReport(dir, m->rep);
  });
}

void vm_mismatch_free(vm_mismatch* m) { delete m; }

}  // extern "C"
