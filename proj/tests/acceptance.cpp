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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <string>

#include <fmt/core.h>

#include "acoustic_sim.hpp"
#include "config.hpp"
#include "corr.hpp"
#include "rmt_filter.hpp"
#include "source_decomp.hpp"
#include "source_track.hpp"
#include "spectral.hpp"
#include "test_util.hpp"

using namespace virtmic;
using namespace testutil;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

LaggedCorrMatrix AutoOf(const Matrix& m, int mics, int taps) {
  return LaggedCorrMatrix(m, mics, taps, 0, CorrKind::kMonitorAuto);
}

fs::path ConfigPath(const std::string& name) { return fs::path(VIRTMIC_CONFIG_DIR) / name; }

Outcome GradientSuite() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> zd(-3.0, 8.0), sd(0.5, 50.0);
  int instances = 0, violating = 0;
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int nv = 1 + t % 6;
    const CalibrationSet cal = RandomCalibration(nv, 3, 3, 2, 7000 + t);
    const LaggedCorrMatrix r = AutoOf(RandomSpd(9, 8000 + t, 0.01, 3.0), 3, 3);
    TrackerConfig c;
    c.alpha = Vector::Ones(nv);
    c.lower = Vector::Zero(nv);
    c.upper = Vector::Constant(nv, 5.0);
    c.sigma = Vector::Constant(nv, sd(rng));
    c.z_init = Vector::Zero(nv);
    Vector z(nv);
    for (int i = 0; i < nv; ++i) {
      do z(i) = zd(rng);
      while (std::abs(z(i)) < 1e-3 || std::abs(z(i) - 5.0) < 1e-3);
    }
    if ((z.array() < 0.0).any() || (z.array() > 5.0).any()) ++violating;
    const Vector g = Gradient(r, cal, z, c);
    const double h = 1e-6;
    for (int i = 0; i < nv; ++i) {
      Vector zp = z, zm = z;
      zp(i) += h;
      zm(i) -= h;
      const double fd = (Objective(r, cal, zp, c) - Objective(r, cal, zm, c)) / (2 * h);
      const double scale = std::max(std::abs(g(i)), 1e-3 * g.cwiseAbs().maxCoeff());
      worst = std::max(worst, std::abs(fd - g(i)) / scale);
    }
    ++instances;
  }
  const double secs = Seconds(t0);
  Outcome o;
  o.pass = worst <= 1e-5 && instances >= 100 && violating > 0 && secs < 30.0;
  o.detail = fmt::format("{} instances ({} with z outside [a,b]), worst relative error {:.2e}, {:.2f} s",
                         instances, violating, worst, secs);
  return o;
}

Outcome ClosedFormSuite() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> zd(0.1, 4.9);
  double worst_oracle = 0.0, worst_recovery = 0.0, worst_sym = 0.0, worst_eig = 0.0;
  int instances = 0;
  for (int t = 0; t < 200; ++t) {
    const int nv = 1 + t % 6;
    const CalibrationSet cal = RandomCalibration(nv, 2, 4, 2, 9000 + t);
    const Matrix a = GramMatrix(cal);
    worst_sym = std::max(worst_sym, SymmetryError(a));
    worst_eig = std::min(worst_eig, MinEigenRatio(a));

    // Vectorised least squares on a generic measurement.
    const LaggedCorrMatrix r = AutoOf(RandomSpd(8, 9500 + t), 2, 4);
    Matrix v(64, nv);
    for (int i = 0; i < nv; ++i) v.col(i) = cal.autos()[i].data().reshaped();
    const Vector want = v.completeOrthogonalDecomposition().solve(r.data().reshaped().eval());
    const Vector got = SolveClosedForm(r, cal).z;
    worst_oracle = std::max(worst_oracle, (got - want).norm() / std::max(1.0, want.norm()));

    // Noiseless superposition.
    Vector z(nv);
    for (int i = 0; i < nv; ++i) z(i) = zd(rng);
    const Vector back = SolveClosedForm(ReconstructAuto(cal, z), cal).z;
    worst_recovery = std::max(worst_recovery, (back - z).cwiseAbs().maxCoeff());
    ++instances;
  }
  Outcome o;
  o.pass = worst_oracle <= 1e-9 && worst_recovery <= 1e-8 && worst_sym == 0.0 && worst_eig >= -1e-12;
  o.detail = fmt::format("{} instances, oracle gap {:.2e}, recovery error {:.2e}, A asymmetry {:.1e}, "
                         "min eigenvalue ratio {:.1e}",
                         instances, worst_oracle, worst_recovery, worst_sym, worst_eig);
  return o;
}

struct DeskResult {
  RunConfig cfg;
  TrackingReport report;
  double seconds = 0.0;
};

const DeskResult& Desk() {
  static const DeskResult d = [] {
    DeskResult r;
    const auto t0 = Clock::now();
    r.cfg = LoadConfig(ConfigPath("desk_scene.json"));
    const ImpulseResponses irs = SynthIrs(r.cfg.scene, r.cfg.base_dir);
    r.report = RunTrackingScenario(r.cfg.scene, r.cfg.calibration, r.cfg.scenario, irs);
    r.seconds = Seconds(t0);
    return r;
  }();
  return d;
}

Outcome Convergence() {
  const DeskResult& d = Desk();
  const TrackingReport& r = d.report;
  double dev = 0.0;
  for (Eigen::Index i = 0; i < r.state.z.size(); ++i) dev = std::max(dev, std::abs(r.state.z(i) - 1.0));
  const double t_end = r.state.history.empty() ? 0.0 : r.state.history.back().time_s;
  Outcome o;
  o.pass = !r.state.diverged && r.state.z.size() == 4 && dev <= 0.15 && t_end <= 10.0 + 1e-9 &&
           r.plateau_l_mm_db >= -17.0 && r.plateau_l_mm_db <= -9.0 && r.plateau_l_me_db >= -14.0 &&
           r.plateau_l_me_db <= -6.0 && d.seconds < 120.0;
  o.detail = fmt::format("z = [{:.3f} {:.3f} {:.3f} {:.3f}] at t = {:.2f} s (max |z-1| {:.3f}), "
                         "L_mm plateau {:.2f} dB, L_me plateau {:.2f} dB, {:.2f} s",
                         r.state.z(0), r.state.z(1), r.state.z(2), r.state.z(3), t_end, dev,
                         r.plateau_l_mm_db, r.plateau_l_me_db, d.seconds);
  return o;
}

Outcome Superposition() {
  const TrackingReport& r = Desk().report;
  const double gap = std::abs(r.true_ratio.broadband_db - r.nominal.broadband_db);

  // Single-source scene: any positive scale leaves the filter unchanged.
  RunConfig one = LoadConfig(ConfigPath("desk_scene.json"));
  one.scene.n_sources = 1;
  auto& da = std::get<DelayAttenuateModel>(one.scene.ir_model);
  da.sources.resize(1);
  one.scenario.schedule = AmplitudeSchedule::Constant(Vector::Ones(1));
  const ImpulseResponses irs = SynthIrs(one.scene, one.base_dir);
  const CalibrationSet cal = RunCalibration(one.scene, one.calibration, irs);
  double worst = 0.0;
  for (double s : {0.25, 0.5, 2.0, 4.0}) {
    const MismatchReport m = RunMismatchExperiment(one.scene, one.calibration, one.scenario, irs,
                                                   Vector::Ones(1), Vector::Constant(1, s), 5.0, &cal);
    worst = std::max(worst, std::abs(m.degradation_db));
  }
  Outcome o;
  o.pass = gap <= 2.0 && worst <= 0.1;
  o.detail = fmt::format("|L_eps(O_hat(z_true)) - L_eps(O_opt)| = {:.3f} dB, single-source scale change "
                         "{:.2e} dB",
                         gap, worst);
  return o;
}

Outcome Mismatch() {
  const RunConfig two = LoadConfig(ConfigPath("two_source_scene.json"));
  const ImpulseResponses irs = SynthIrs(two.scene, two.base_dir);
  const CalibrationSet cal = RunCalibration(two.scene, two.calibration, irs);
  // Amplitude ratios r, power ratios z = r^2.
  auto run = [&](double r1, double r2) {
    const Vector zt = (Vector(2) << r1 * r1, r2 * r2).finished();
    return RunMismatchExperiment(two.scene, two.calibration, two.scenario, irs, zt, zt.reverse(),
                                 two.mismatch ? two.mismatch->duration_s : 10.0, &cal);
  };
  const MismatchReport small = run(1.2, 0.8), large = run(1.5, 0.5);
  Outcome o;
  o.pass = small.degradation_db > 0.0 && large.degradation_db > 0.0 &&
           large.degradation_db > small.degradation_db;
  o.detail = fmt::format("1.2/0.8 swap: {:.2f} -> {:.2f} dB (+{:.2f}), 1.5/0.5 swap: {:.2f} -> {:.2f} dB (+{:.2f})",
                         small.matched.broadband_db, small.mismatched.broadband_db, small.degradation_db,
                         large.matched.broadband_db, large.mismatched.broadband_db, large.degradation_db);
  return o;
}

Outcome TrackingEndToEnd() {
  const TrackingReport& r = Desk().report;
  const double gap = std::abs(r.tracked.broadband_db - r.nominal.broadband_db);
  const double margin = r.zero_filter_db - r.tracked.broadband_db;
  Outcome o;
  o.pass = gap <= 3.0 && margin >= 3.0;
  o.detail = fmt::format("L_eps: O_opt {:.2f} dB, O_st {:.2f} dB (gap {:.2f}), zero filter {:.2f} dB "
                         "(margin {:.2f})",
                         r.nominal.broadband_db, r.tracked.broadband_db, gap, r.zero_filter_db, margin);
  return o;
}

Outcome Numerics() {
  double residual = 0.0;
  for (double beta : {0.0, 1e-6, 1e-2})
    for (int seed = 0; seed < 30; ++seed) {
      const int m = 1 + seed % 3, taps = 2 + seed % 5, e = 1 + seed % 4;
      const Matrix rmm = RandomSpd(m * taps, 100 + seed, 0.01, 5.0);
      const Matrix rme = WhiteNoise(m * taps, e, 200 + seed);
      const auto of = OfTimeOptimal(AutoOf(rmm, m, taps),
                                    LaggedCorrMatrix(rme, m, taps, e, CorrKind::kMonitorCross), beta);
      const Matrix reg = rmm + beta * Matrix::Identity(m * taps, m * taps);
      residual = std::max(residual, RelFro(of.time_coeffs * reg, rme.transpose()));
    }

  double loops = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int m = 1 + t % 3, taps = 1 + t % 6, e = 1 + t % 2;
    const Eigen::Index n = 300, start = taps - 1 + t % 20, w = 200;
    const Matrix x = WhiteNoise(m, n, 300 + t), y = WhiteNoise(e, n, 400 + t);
    const MultichannelSignal xs(x, 1.0), ys(y, 1.0);
    loops = std::max(loops, RelFro(EstimateCorrAuto(xs, taps, start, w).data(), LoopAuto(x, taps, start, w)));
    loops = std::max(loops, RelFro(EstimateCorrCross(xs, ys, taps, start, w).data(),
                                   LoopCross(x, y, taps, start, w)));
  }

  int cases = 0, bad = 0;
  std::mt19937_64 rng(303);
  for (int t = 0; t < 1000; ++t) {
    const int m = 1 + t % 4, taps = 1 + t % 7;
    Matrix x = WhiteNoise(m, taps + 20 + t % 50, 10000 + t) * std::pow(10.0, (t % 13) - 6.0);
    if (t % 7 == 0) x.row(0).setZero();
    const auto r = EstimateCorrAuto(MultichannelSignal(x, 1.0), taps, 0, x.cols());
    if (SymmetryError(r.data()) > 1e-10 || MinEigenRatio(r.data()) < -1e-8) ++bad;
    const int nfft = 8 << (t % 3);
    const SpectralMatrixSet s =
        EstimateCsd(MultichannelSignal(WhiteNoise(m, nfft * 3 + t % 17, 20000 + t), 1.0), nfft, 0.5);
    for (const auto& b : s.mm) {
      const bool herm = (b - b.adjoint()).norm() <= 1e-10 * std::max(b.norm(), 1e-300);
      Eigen::SelfAdjointEigenSolver<CMatrix> es(b);
      const bool psd = es.eigenvalues().minCoeff() >= -1e-10 * std::max(es.eigenvalues().maxCoeff(), 1e-300);
      if (!herm || !psd) ++bad;
    }
    ++cases;
  }
  Outcome o;
  o.pass = residual <= 1e-10 && loops <= 1e-12 && cases >= 1000 && bad == 0;
  o.detail = fmt::format("Wiener residual {:.2e}, estimator vs loops {:.2e}, {} fuzzed cases with {} "
                         "violations",
                         residual, loops, cases, bad);
  return o;
}

int Shell(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> Outputs(const fs::path& dir) {
  std::map<std::string, std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "manifest.json")
      out[fs::relative(e.path(), dir).string()] = ReadFile(e.path());
  return out;
}

Outcome Determinism() {
  const fs::path root = fs::temp_directory_path() / fmt::format("virtmic_accept_{}", ::getpid());
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string cli = VIRTMIC_CLI;
  const std::string desk = ConfigPath("desk_scene.json").string();
  const std::string two = ConfigPath("two_source_scene.json").string();
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"synth", "synth -c " + desk + " --seed 11"},
      {"calibrate", "calibrate -c " + desk + " --seed 11"},
      {"track", "track -c " + desk + " --seed 11"},
      {"track-cf", "track -c " + desk + " --seed 11 --solver closed-form"},
      {"mismatch", "mismatch -c " + two + " --seed 11"},
      {"of-export", "of-export -c " + desk + " --seed 11 --calibration " + (root / "calibrate_a").string()},
  };
  int ok = 0, files = 0;
  std::string failed;
  for (const auto& [name, args] : commands) {
    const fs::path a = root / (name + "_a"), b = root / (name + "_b");
    const int ca = Shell(cli + " " + args + " -o " + a.string());
    const int cb = Shell(cli + " " + args + " -o " + b.string());
    const auto fa = Outputs(a), fb = Outputs(b);
    if (ca == 0 && cb == 0 && !fa.empty() && fa == fb) {
      ++ok;
      files += static_cast<int>(fa.size());
    } else {
      failed += " " + name;
    }
  }
  fs::remove_all(root);
  Outcome o;
  o.pass = ok == static_cast<int>(commands.size());
  o.detail = fmt::format("{}/{} commands byte-identical across reruns ({} files compared){}", ok,
                         commands.size(), files, failed.empty() ? "" : "; differing:" + failed);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient vs finite differences", GradientSuite},
      {"closed-form solution", ClosedFormSuite},
      {"convergence on the desk scene", Convergence},
      {"superposition of calibrated sources", Superposition},
      {"mismatch degradation ordering", Mismatch},
      {"tracked filter end to end", TrackingEndToEnd},
      {"numerics", Numerics},
      {"CLI determinism", Determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failures;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
