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

// virtmic command-line front end. Talks to the library only through the C API.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "virtmic/virtmic.h"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDimension = 3;
constexpr int kExitDivergence = 4;

int ExitCodeFor(vm_status s) {
  switch (s) {
    case VM_OK: return kExitOk;
    case VM_ERR_CONFIG: return kExitConfig;
    case VM_ERR_DIMENSION: return kExitDimension;
    case VM_ERR_DIVERGENCE:
    case VM_ERR_NUMERICAL:
    case VM_ERR_SINGULAR: return kExitDivergence;
    default: return kExitFailure;
  }
}

// Carries a library failure up to main().
struct CallError {
  vm_status status;
  std::string message;
};

void Check(vm_status s, const char* what) {
  if (s != VM_OK) throw CallError{s, std::string(what) + ": " + vm_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using ConfigPtr = std::unique_ptr<vm_config, Deleter<vm_config, vm_config_free>>;
using CalPtr = std::unique_ptr<vm_calibration, Deleter<vm_calibration, vm_calibration_free>>;
using ReportPtr = std::unique_ptr<vm_report, Deleter<vm_report, vm_report_free>>;
using MismatchPtr = std::unique_ptr<vm_mismatch, Deleter<vm_mismatch, vm_mismatch_free>>;
using FilterPtr = std::unique_ptr<vm_filter, Deleter<vm_filter, vm_filter_free>>;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string solver;
  bool use_eq10 = false;
  // per command
  std::string calibration;
  int repetitions = 1;
  std::vector<double> z_true;
  std::vector<double> z_used;
  std::vector<double> z;
  std::optional<double> beta;
};

struct RunResult {
  int exit_code = kExitOk;
  std::vector<std::string> outputs;  // relative to the output dir
  ojson seeds;
};

ojson ParseJson(char* s) {
  ojson j = ojson::parse(s);
  vm_string_free(s);
  return j;
}

ConfigPtr LoadConfig(const Options& o) {
  if (o.config.empty()) throw CallError{VM_ERR_CONFIG, "--config is required"};
  vm_config* raw = nullptr;
  Check(vm_config_load(o.config.c_str(), &raw), "config");
  ConfigPtr cfg(raw);
  if (o.seed) Check(vm_config_set_seed(cfg.get(), *o.seed), "--seed");
  if (!o.solver.empty())
    Check(vm_config_set_solver(cfg.get(), o.solver == "closed-form" ? VM_SOLVER_CLOSED_FORM
                                                                    : VM_SOLVER_GD),
          "--solver");
  if (o.use_eq10) Check(vm_config_set_use_eq10(cfg.get(), 1), "--use-eq10-gradient");
  return cfg;
}

ojson ResolvedJson(const vm_config* cfg) {
  char* s = nullptr;
  Check(vm_config_resolved_json(cfg, &s), "config");
  return ParseJson(s);
}

ojson SeedsOf(const ojson& resolved) {
  ojson seeds;
  seeds["noise_seed"] = resolved["scene"]["noise_seed"];
  const ojson& ir = resolved["scene"]["ir_model"];
  if (ir.contains("seed")) seeds["ir_seed"] = ir["seed"];
  if (ir.contains("tail")) seeds["ir_tail_seed"] = ir["tail"]["seed"];
  return seeds;
}

CalPtr CalibrationFor(const Options& o, const vm_config* cfg) {
  vm_calibration* raw = nullptr;
  if (!o.calibration.empty())
    Check(vm_calibration_load(o.calibration.c_str(), &raw), "--calibration");
  else
    Check(vm_run_calibration(cfg, &raw), "calibration");
  return CalPtr(raw);
}

std::vector<std::string> CalibrationFiles(int n_sources) {
  std::vector<std::string> files{"calibration.json"};
  char buf[32];
  for (int i = 1; i <= n_sources; ++i) {
    std::snprintf(buf, sizeof buf, "auto_%02d.lcm", i);
    files.emplace_back(buf);
    std::snprintf(buf, sizeof buf, "cross_%02d.lcm", i);
    files.emplace_back(buf);
  }
  return files;
}

void PrintVector(const char* label, const std::vector<double>& v) {
  std::printf("%s:", label);
  for (double x : v) std::printf(" %.6f", x);
  std::printf("\n");
}

RunResult CmdSynth(const Options& o) {
  ConfigPtr cfg = LoadConfig(o);
  Check(vm_synth(cfg.get(), o.out.c_str()), "synth");
  return {kExitOk, {"monitor_irs.irt", "virtual_irs.irt"}, SeedsOf(ResolvedJson(cfg.get()))};
}

RunResult CmdCalibrate(const Options& o) {
  ConfigPtr cfg = LoadConfig(o);
  CalPtr cal = CalibrationFor(Options{}, cfg.get());
  Check(vm_calibration_save(cal.get(), o.out.c_str()), "calibration");
  int n = 0;
  Check(vm_calibration_dims(cal.get(), &n, nullptr, nullptr, nullptr), "calibration");
  std::printf("calibrated %d sources into %s\n", n, o.out.c_str());
  return {kExitOk, CalibrationFiles(n), SeedsOf(ResolvedJson(cfg.get()))};
}

struct TrackOutcome {
  std::vector<double> z;
  vm_report_summary summary{};
  vm_status status = VM_OK;
  std::string error;
};

RunResult CmdTrack(const Options& o) {
  ConfigPtr base = LoadConfig(o);
  int n_sources = 0;
  Check(vm_config_n_sources(base.get(), &n_sources), "config");
  const ojson resolved = ResolvedJson(base.get());
  const std::uint64_t seed0 = resolved["scene"]["noise_seed"].get<std::uint64_t>();
  CalPtr cal = CalibrationFor(o, base.get());

  const int reps = o.repetitions;
  if (reps < 1) throw CallError{VM_ERR_CONFIG, "--repetitions must be >= 1"};
  std::vector<TrackOutcome> outcomes(static_cast<std::size_t>(reps));
  std::vector<std::string> dirs;
  for (int r = 0; r < reps; ++r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "rep_%03d", r);
    dirs.emplace_back(reps == 1 ? "" : buf);
  }

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < reps; r = next++) {
      TrackOutcome& out = outcomes[static_cast<std::size_t>(r)];
      vm_config* raw = nullptr;
      out.status = vm_config_clone(base.get(), &raw);
      ConfigPtr cfg(raw);
      if (out.status == VM_OK)
        out.status = vm_config_set_seed(cfg.get(), seed0 + static_cast<std::uint64_t>(r));
      vm_report* rep_raw = nullptr;
      if (out.status == VM_OK) out.status = vm_run_tracking(cfg.get(), cal.get(), &rep_raw);
      ReportPtr rep(rep_raw);
      if (out.status == VM_OK) {
        out.z.resize(static_cast<std::size_t>(n_sources));
        out.status = vm_report_z(rep.get(), out.z.data(), out.z.size());
      }
      if (out.status == VM_OK) out.status = vm_report_summary_get(rep.get(), &out.summary);
      if (out.status == VM_OK) {
        const fs::path dir = fs::path(o.out) / dirs[static_cast<std::size_t>(r)];
        out.status = vm_report_write(rep.get(), dir.string().c_str());
      }
      if (out.status != VM_OK) out.error = vm_last_error();
    }
  };
  const int jobs = std::clamp(o.jobs, 1, reps);
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  RunResult result;
  result.seeds = SeedsOf(resolved);
  if (reps > 1) result.seeds["repetition_noise_seeds"] = {seed0, seed0 + reps - 1};
  for (int r = 0; r < reps; ++r) {
    const TrackOutcome& out = outcomes[static_cast<std::size_t>(r)];
    if (out.status != VM_OK) throw CallError{out.status, "track: " + out.error};
    const vm_report_summary& s = out.summary;
    if (reps > 1) std::printf("[repetition %d, noise_seed %llu]\n", r,
                              static_cast<unsigned long long>(seed0 + r));
    PrintVector("z_final", out.z);
    std::printf("frames: %lld\n", static_cast<long long>(s.frames));
    std::printf("plateau L_mm: %.2f dB\n", s.plateau_l_mm_db);
    std::printf("plateau L_me: %.2f dB\n", s.plateau_l_me_db);
    std::printf("broadband L_eps: nominal %.2f dB, true-z %.2f dB, tracked %.2f dB, "
                "zero filter %.2f dB\n",
                s.l_eps_opt_db, s.l_eps_hat_db, s.l_eps_st_db, s.l_eps_zero_db);
    std::printf("stability bound 1/lambda_max(A): %.6g (alpha %.6g)\n", s.stability_bound,
                s.alpha_max);
    if (s.alpha_max > s.stability_bound)
      std::fprintf(stderr, "warning: alpha exceeds the stability bound 1/lambda_max(A)\n");
    if (s.max_source_coherence > 0.2)
      std::fprintf(stderr,
                   "warning: source signals are coherent (max coherence %.3f); "
                   "superposition may not hold\n",
                   s.max_source_coherence);
    if (s.diverged) {
      std::fprintf(stderr, "error: tracker diverged; reporting the last stable z\n");
      result.exit_code = kExitDivergence;
    }
    const std::string prefix = dirs[static_cast<std::size_t>(r)].empty()
                                   ? ""
                                   : dirs[static_cast<std::size_t>(r)] + "/";
    for (const char* f : {"history.csv", "spectra.csv", "summary.json"})
      result.outputs.push_back(prefix + f);
  }
  return result;
}

std::vector<double> MismatchVector(const std::vector<double>& flag, int n, const char* name) {
  if (flag.size() == 1) return std::vector<double>(static_cast<std::size_t>(n), flag[0]);
  if (static_cast<int>(flag.size()) != n)
    throw CallError{VM_ERR_DIMENSION, std::string(name) + " has " +
                                          std::to_string(flag.size()) +
                                          " values for " + std::to_string(n) + " sources"};
  return flag;
}

RunResult CmdMismatch(const Options& o) {
  ConfigPtr cfg = LoadConfig(o);
  int n = 0;
  Check(vm_config_n_sources(cfg.get(), &n), "config");
  std::vector<double> z_true(static_cast<std::size_t>(n)), z_used(z_true);
  double duration = 0.0;
  const bool from_config =
      vm_config_mismatch(cfg.get(), z_true.data(), z_used.data(), z_true.size(), &duration) ==
      VM_OK;
  if (!from_config) {
    const ojson resolved = ResolvedJson(cfg.get());
    duration = resolved["scenario"]["duration_s"].get<double>();
  }
  if (!o.z_true.empty()) z_true = MismatchVector(o.z_true, n, "--z-true");
  if (!o.z_used.empty()) z_used = MismatchVector(o.z_used, n, "--z-used");
  if (!from_config && (o.z_true.empty() || o.z_used.empty()))
    throw CallError{VM_ERR_CONFIG,
                    "mismatch needs --z-true and --z-used or a mismatch section in the config"};
  CalPtr cal = CalibrationFor(o, cfg.get());
  vm_mismatch* raw = nullptr;
  Check(vm_run_mismatch(cfg.get(), cal.get(), z_true.data(), z_used.data(), z_true.size(),
                        duration, &raw),
        "mismatch");
  MismatchPtr m(raw);
  Check(vm_mismatch_write(m.get(), o.out.c_str()), "mismatch");
  double nominal = 0, matched = 0, mismatched = 0, degradation = 0;
  Check(vm_mismatch_summary(m.get(), &nominal, &matched, &mismatched, &degradation),
        "mismatch");
  PrintVector("z_true", z_true);
  PrintVector("z_used", z_used);
  std::printf("broadband L_eps: nominal %.2f dB, matched %.2f dB, mismatched %.2f dB\n",
              nominal, matched, mismatched);
  std::printf("degradation: %.2f dB\n", degradation);

  RunResult result{kExitOk, {"mismatch_spectra.csv", "mismatch_summary.json"},
                   SeedsOf(ResolvedJson(cfg.get()))};
  result.seeds["z_true"] = z_true;
  result.seeds["z_used"] = z_used;
  return result;
}

RunResult CmdOfExport(const Options& o) {
  ConfigPtr cfg = LoadConfig(o);
  const ojson resolved = ResolvedJson(cfg.get());
  CalPtr cal = CalibrationFor(o, cfg.get());
  int n = 0;
  Check(vm_calibration_dims(cal.get(), &n, nullptr, nullptr, nullptr), "calibration");
  const std::vector<double> z =
      o.z.empty() ? std::vector<double>(static_cast<std::size_t>(n), 1.0)
                  : MismatchVector(o.z, n, "--z");
  const double beta = o.beta ? *o.beta : resolved["scenario"]["beta"].get<double>();
  vm_filter* raw = nullptr;
  Check(vm_calibration_filter(cal.get(), z.data(), z.size(), beta, &raw), "of-export");
  FilterPtr of(raw);
  fs::create_directories(o.out);
  Check(vm_filter_write(of.get(), (fs::path(o.out) / "observation_filter.obf").string().c_str()),
        "of-export");
  Check(vm_filter_write(of.get(), (fs::path(o.out) / "observation_filter.csv").string().c_str()),
        "of-export");
  PrintVector("z", z);
  std::printf("beta: %g\n", beta);
  RunResult result{kExitOk, {"observation_filter.obf", "observation_filter.csv"},
                   SeedsOf(resolved)};
  result.seeds["z"] = z;
  return result;
}

void WriteManifest(const fs::path& dir, const std::vector<std::string>& argv,
                   const std::string& command, const ojson& resolved, const RunResult& r,
                   double seconds) {
  ojson m;
  m["tool"] = "virtmic";
  m["version"] = vm_version();
  m["command"] = command;
  m["command_line"] = argv;
  m["exit_code"] = r.exit_code;
  m["seeds"] = r.seeds;
  m["resolved_config"] = resolved;
  ojson outputs = ojson::array();
  for (const auto& f : r.outputs) {
    if (!fs::exists(dir / f))
      throw CallError{VM_ERR_IO, "expected output missing: " + (dir / f).string()};
    outputs.push_back(f);
  }
  m["outputs"] = outputs;
  m["duration_s"] = seconds;
  const fs::path tmp = dir / "manifest.json.tmp";
  {
    std::ofstream out(tmp);
    out << m.dump(2) << '\n';
    if (!out) throw CallError{VM_ERR_IO, "cannot write " + tmp.string()};
  }
  fs::rename(tmp, dir / "manifest.json");
}

}  // namespace

int main(int argc, char** argv) {
  const auto t0 = std::chrono::steady_clock::now();
  CLI::App app{"virtmic: remote-microphone virtual sensing with source tracking"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(vm_version()));

  Options o;
  std::uint64_t seed = 0;
  app.add_option("--config,-c", o.config, "Scene/scenario configuration (JSON)")
      ->envname("VIRTMIC_CONFIG");
  app.add_option("--out,-o", o.out, "Output directory")->envname("VIRTMIC_OUT");
  auto* seed_opt = app.add_option("--seed", seed, "Override scene.noise_seed")
                       ->envname("VIRTMIC_SEED");
  app.add_option("--jobs,-j", o.jobs, "Parallel scenario repetitions")
      ->envname("VIRTMIC_JOBS")
      ->check(CLI::PositiveNumber);
  app.add_option("--solver", o.solver, "Tracker solver")
      ->envname("VIRTMIC_SOLVER")
      ->check(CLI::IsMember({"gd", "closed-form"}));
  app.add_flag("--use-eq10-gradient", o.use_eq10,
               "Step along the full objective gradient instead of the half-scaled trace term")
      ->envname("VIRTMIC_USE_EQ10_GRADIENT");

  auto* synth = app.add_subcommand("synth", "Write impulse responses (IRT1)");
  auto* calibrate = app.add_subcommand("calibrate", "Run the calibration stage");
  auto* track = app.add_subcommand("track", "Run the source-tracking scenario");
  track->add_option("--calibration", o.calibration, "Calibration directory")
      ->envname("VIRTMIC_CALIBRATION");
  track->add_option("--repetitions", o.repetitions, "Independent noise realisations")
      ->envname("VIRTMIC_REPETITIONS")
      ->check(CLI::PositiveNumber);
  auto* mismatch = app.add_subcommand("mismatch", "Matched vs mismatched filter experiment");
  mismatch->add_option("--calibration", o.calibration, "Calibration directory")
      ->envname("VIRTMIC_CALIBRATION");
  mismatch->add_option("--z-true", o.z_true, "True squared source ratios")
      ->delimiter(',')
      ->envname("VIRTMIC_Z_TRUE");
  mismatch->add_option("--z-used", o.z_used, "Squared ratios used for the filter")
      ->delimiter(',')
      ->envname("VIRTMIC_Z_USED");
  auto* of_export = app.add_subcommand("of-export", "Export a decomposed observation filter");
  of_export->add_option("--calibration", o.calibration, "Calibration directory")
      ->envname("VIRTMIC_CALIBRATION");
  of_export->add_option("--z", o.z, "Squared source ratios (default all 1)")
      ->delimiter(',')
      ->envname("VIRTMIC_Z");
  of_export->add_option("--beta", o.beta, "Regularisation (default scenario.beta)")
      ->envname("VIRTMIC_BETA");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  if (seed_opt->count() > 0) o.seed = seed;
  std::vector<std::string> args(argv, argv + argc);

  CLI::App* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  try {
    if (o.out.empty()) throw CallError{VM_ERR_CONFIG, "--out is required"};
    fs::create_directories(o.out);
    RunResult r;
    if (cmd == synth) r = CmdSynth(o);
    else if (cmd == calibrate) r = CmdCalibrate(o);
    else if (cmd == track) r = CmdTrack(o);
    else if (cmd == mismatch) r = CmdMismatch(o);
    else r = CmdOfExport(o);
    ConfigPtr cfg = LoadConfig(o);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    WriteManifest(o.out, args, name, ResolvedJson(cfg.get()), r, seconds);
    return r.exit_code;
  } catch (const CallError& e) {
    std::fprintf(stderr, "virtmic %s: error: %s\n", name.c_str(), e.message.c_str());
    return ExitCodeFor(e.status);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "virtmic %s: error: %s\n", name.c_str(), e.what());
    return kExitFailure;
  }
}
