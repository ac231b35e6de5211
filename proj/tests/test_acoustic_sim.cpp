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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "acoustic_sim.hpp"
#include "config.hpp"
#include "spectral.hpp"
#include "test_util.hpp"

using namespace virtmic;
using namespace testutil;

namespace {

SceneSpec RandomScene(int n_sources, int m, int e, std::uint64_t seed = 17) {
  SceneSpec s;
  s.n_sources = n_sources;
  s.n_monitor = m;
  s.n_virtual = e;
  s.sample_rate = 10000.0;
  s.noise_seed = 3;
  s.ir_model = RandomDecayModel{16, 2000.0, seed, 1.0};
  return s;
}

ImpulseResponses DeltaIrs(int n_sources) {
  ImpulseResponses irs;
  irs.sample_rate = 10000.0;
  for (int s = 0; s < n_sources; ++s) {
    irs.monitor.push_back(Matrix::Ones(1, 1));
    irs.virtual_mics.push_back(Matrix::Ones(1, 1));
  }
  return irs;
}

Matrix JointMinusSolo(const ImpulseResponses& irs, Eigen::Index n) {
  const int ns = irs.n_sources();
  const auto all = RenderScene(irs, AmplitudeSchedule::Constant(Vector::Ones(ns)), n, 11,
                               RenderStream::kScenario);
  const Matrix r_all = EstimateCorrAuto(all.mon, 4, 0, n).data();
  Matrix sum = Matrix::Zero(r_all.rows(), r_all.cols());
  for (int s = 0; s < ns; ++s) {
    Vector r = Vector::Zero(ns);
    r(s) = 1.0;
    const auto solo = RenderScene(irs, AmplitudeSchedule::Constant(r), n, 11,
                                  RenderStream::kScenario);
    sum += EstimateCorrAuto(solo.mon, 4, 0, n).data();
  }
  return (Matrix(1, 1) << (r_all - sum).norm() / r_all.norm()).finished();
}

struct Desk {
  RunConfig cfg;
  ImpulseResponses irs;
  std::optional<CalibrationSet> cal;
  TrackingReport report;
};

const Desk& DeskRun() {
  static const Desk desk = [] {
    Desk d;
    d.cfg = LoadConfig(std::filesystem::path(VIRTMIC_CONFIG_DIR) / "desk_scene.json");
    d.irs = SynthIrs(d.cfg.scene, d.cfg.base_dir);
    d.cal = RunCalibration(d.cfg.scene, d.cfg.calibration, d.irs);
    d.report = RunTrackingScenario(d.cfg.scene, d.cfg.calibration, d.cfg.scenario, d.irs, &*d.cal);
    return d;
  }();
  return desk;
}

}  // namespace

TEST_CASE("delay-attenuate taps") {
  SceneSpec s;
  DelayAttenuateModel m;
  m.sources = {Eigen::Vector3d(1.0, 0.0, 0.0)};
  m.monitors = {Eigen::Vector3d::Zero()};
  m.virtuals = {Eigen::Vector3d(0.0, 0.5, 0.0)};
  s.ir_model = m;
  const ImpulseResponses irs = SynthIrs(s);
  REQUIRE(irs.monitor.size() == 1);
  CHECK(irs.monitor[0].cols() == 34);  // shared with the farther virtual path
  Eigen::Index k;
  CHECK(irs.monitor[0].row(0).cwiseAbs().maxCoeff(&k) == 1.0);
  CHECK(k == 29);
  CHECK(irs.monitor[0].row(0).cwiseAbs().sum() == 1.0);
  // sqrt(1.25) m away.
  CHECK(irs.virtual_mics[0](0, std::lround(std::sqrt(1.25) / 343.0 * 1e4)) ==
        doctest::Approx(1.0 / std::sqrt(1.25)).epsilon(1e-15));

  SUBCASE("coincident source and microphone") {
    m.monitors = {Eigen::Vector3d(1.0, 0.0, 0.0)};
    s.ir_model = m;
    try {
      SynthIrs(s);
      FAIL("expected an exception");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kConfig);
    }
  }
  SUBCASE("tail is seeded and starts after the direct path") {
    m.tail = DiffuseTail{0.1, 500.0, 9};
    s.ir_model = m;
    const ImpulseResponses a = SynthIrs(s), b = SynthIrs(s);
    CHECK(a.monitor[0] == b.monitor[0]);
    CHECK(a.monitor[0].leftCols(29).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.monitor[0].cols() > 30);
    CHECK(a.monitor[0].rightCols(a.monitor[0].cols() - 30).cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("random-decay IRs") {
  SUBCASE("deterministic") {
    const SceneSpec s = RandomScene(3, 2, 2);
    const ImpulseResponses a = SynthIrs(s), b = SynthIrs(s);
    for (int i = 0; i < 3; ++i) {
      CHECK(a.monitor[i] == b.monitor[i]);
      CHECK(a.virtual_mics[i] == b.virtual_mics[i]);
    }
    const ImpulseResponses c = SynthIrs(RandomScene(3, 2, 2, 18));
    CHECK(c.monitor[0] != a.monitor[0]);
  }
  SUBCASE("energy envelope over 100 seeds") {
    const int len = 100;
    const double decay = 300.0, fs = 10000.0;
    Vector energy = Vector::Zero(len);
    int draws = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      SceneSpec s = RandomScene(4, 3, 5);
      s.ir_model = RandomDecayModel{len, decay, seed, 1.0};
      const ImpulseResponses irs = SynthIrs(s);
      for (int src = 0; src < 4; ++src) {
        energy += irs.monitor[src].array().square().colwise().sum().matrix().transpose();
        energy += irs.virtual_mics[src].array().square().colwise().sum().matrix().transpose();
        draws += 8;
      }
    }
    energy /= draws;
    // Blocks of ten taps against the expected exp(-2 d t) profile.
    for (int b = 0; b < len / 10; ++b) {
      double got = 0.0, want = 0.0;
      for (int k = 10 * b; k < 10 * b + 10; ++k) {
        got += energy(k);
        want += std::exp(-2.0 * decay * k / fs);
      }
      CHECK(std::abs(got / want - 1.0) <= 0.10);
    }
  }
}

TEST_CASE("rendering") {
  SUBCASE("delta IR passes the source through") {
    const auto r = RenderScene(DeltaIrs(1), AmplitudeSchedule::Constant(Vector::Ones(1)), 1000, 4,
                               RenderStream::kScenario);
    CHECK(r.mon.samples() == r.sources.samples());
    CHECK(r.err.samples() == r.sources.samples());
    const double var = r.sources.samples().squaredNorm() / 1000.0;
    CHECK(var == doctest::Approx(1.0).epsilon(0.15));
  }
  SUBCASE("silence") {
    const SceneSpec s = RandomScene(3, 2, 2);
    const auto r = RenderScene(SynthIrs(s), AmplitudeSchedule::Constant(Vector::Zero(3)), 500, 4,
                               RenderStream::kScenario);
    CHECK(r.mon.samples().cwiseAbs().maxCoeff() == 0.0);
    CHECK(r.err.samples().cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("schedule switches amplitude") {
    AmplitudeSchedule sched({{0.0, Vector::Ones(1)}, {0.05, Vector::Constant(1, 3.0)}});
    const auto a = RenderScene(DeltaIrs(1), sched, 1000, 4, RenderStream::kScenario);
    const auto b = RenderScene(DeltaIrs(1), AmplitudeSchedule::Constant(Vector::Ones(1)), 1000, 4,
                               RenderStream::kScenario);
    CHECK(a.mon.samples().leftCols(500) == b.mon.samples().leftCols(500));
    CHECK((a.mon.samples().rightCols(500) - 3.0 * b.mon.samples().rightCols(500)).norm() <= 1e-12);
  }
  SUBCASE("superposition of single-source correlations") {
    const ImpulseResponses irs = SynthIrs(RandomScene(2, 3, 1));
    const double big = JointMinusSolo(irs, 1000000)(0, 0);
    const double small = JointMinusSolo(irs, 10000)(0, 0);
    CHECK(big <= 0.05);
    CHECK(big < small);
  }
  SUBCASE("sources are incoherent") {
    const auto r = RenderScene(DeltaIrs(4), AmplitudeSchedule::Constant(Vector::Ones(4)), 100000, 8,
                               RenderStream::kScenario);
    CHECK(MaxCoherence(r.sources, 256) <= 0.05);
  }
  SUBCASE("deterministic per stream") {
    const ImpulseResponses irs = SynthIrs(RandomScene(2, 2, 2));
    const auto sched = AmplitudeSchedule::Constant(Vector::Ones(2));
    const auto a = RenderScene(irs, sched, 2000, 4, RenderStream::kScenario);
    const auto b = RenderScene(irs, sched, 2000, 4, RenderStream::kScenario);
    const auto c = RenderScene(irs, sched, 2000, 4, RenderStream::kCalibration);
    CHECK(a.mon.samples() == b.mon.samples());
    CHECK(a.mon.samples() != c.mon.samples());
  }
  SUBCASE("schedule validation") {
    const ImpulseResponses irs = DeltaIrs(2);
    CHECK_THROWS_AS(RenderScene(irs, AmplitudeSchedule::Constant(Vector::Ones(3)), 10, 1,
                                RenderStream::kScenario),
                    Error);
    CHECK_THROWS_AS(RenderScene(irs, AmplitudeSchedule::Constant(-Vector::Ones(2)), 10, 1,
                                RenderStream::kScenario),
                    Error);
    CHECK_THROWS_AS(RenderScene(irs, AmplitudeSchedule({{0.5, Vector::Ones(2)}}), 10, 1,
                                RenderStream::kScenario),
                    Error);
  }
}

TEST_CASE("calibration runs") {
  const SceneSpec s = RandomScene(2, 2, 1);
  const ImpulseResponses irs = SynthIrs(s);
  const CalibrationSpec spec{3, 0.5, 0};
  const CalibrationSet cal = RunCalibration(s, spec, irs);
  SUBCASE("matches a hand-built pipeline") {
    for (int src = 0; src < 2; ++src) {
      Vector r = Vector::Zero(2);
      r(src) = 1.0;
      const auto solo = RenderScene(irs, AmplitudeSchedule::Constant(r), 5000, s.noise_seed,
                                    RenderStream::kCalibration);
      CHECK(RelFro(cal.autos()[src].data(), LoopAuto(solo.mon.samples(), 3, 0, 5000)) <= 1e-12);
      CHECK(RelFro(cal.crosses()[src].data(),
                   LoopCross(solo.mon.samples(), solo.err.samples(), 3, 0, 5000)) <= 1e-12);
    }
  }
  SUBCASE("deterministic") {
    const CalibrationSet again = RunCalibration(s, spec, irs);
    for (int src = 0; src < 2; ++src) CHECK(again.autos()[src].data() == cal.autos()[src].data());
  }
  SUBCASE("filter length is required") {
    CHECK_THROWS_AS(RunCalibration(s, CalibrationSpec{0, 0.5, 0}, irs), Error);
  }
}

TEST_CASE("tracking scenario") {
  SUBCASE("zero duration gives an empty report") {
    const SceneSpec s = RandomScene(2, 2, 1);
    const ImpulseResponses irs = SynthIrs(s);
    ScenarioSpec sc;
    sc.duration_s = 0.0;
    sc.schedule = AmplitudeSchedule::Constant(Vector::Ones(2));
    const TrackingReport r = RunTrackingScenario(s, CalibrationSpec{3, 0.2, 0}, sc, irs);
    CHECK(r.state.history.empty());
    CHECK(r.empty());
  }
  SUBCASE("calibration shape is checked") {
    const SceneSpec s = RandomScene(2, 2, 1);
    const ImpulseResponses irs = SynthIrs(s);
    const CalibrationSet cal = RunCalibration(s, CalibrationSpec{3, 0.2, 0}, irs);
    ScenarioSpec sc;
    sc.duration_s = 0.5;
    sc.schedule = AmplitudeSchedule::Constant(Vector::Ones(2));
    try {
      RunTrackingScenario(s, CalibrationSpec{4, 0.2, 0}, sc, irs, &cal);
      FAIL("expected an exception");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kDimensionMismatch);
    }
  }
  SUBCASE("bit-identical reruns") {
    const SceneSpec s = RandomScene(2, 2, 2);
    const ImpulseResponses irs = SynthIrs(s);
    ScenarioSpec sc;
    sc.duration_s = 1.0;
    sc.fft_len = 256;
    sc.schedule = AmplitudeSchedule::Constant(Vector::Ones(2));
    const TrackingReport a = RunTrackingScenario(s, CalibrationSpec{4, 0.5, 0}, sc, irs);
    const TrackingReport b = RunTrackingScenario(s, CalibrationSpec{4, 0.5, 0}, sc, irs);
    REQUIRE(a.state.history.size() == b.state.history.size());
    CHECK(a.state.z == b.state.z);
    for (std::size_t k = 0; k < a.state.history.size(); ++k) {
      CHECK(a.state.history[k].q == b.state.history[k].q);
      CHECK(a.state.history[k].l_mm_db == b.state.history[k].l_mm_db);
    }
    CHECK(a.tracked.l_eps_db == b.tracked.l_eps_db);
    CHECK(a.nominal.l_eps_db == b.nominal.l_eps_db);
  }
}

TEST_CASE("desk scene") {
  const Desk& d = DeskRun();
  const TrackingReport& r = d.report;
  REQUIRE_FALSE(r.state.diverged);
  REQUIRE(r.state.history.size() > 900);
  CHECK(r.z_true == Vector::Ones(4));
  CHECK(r.state.history.back().time_s == doctest::Approx(10.0).epsilon(0.01));

  SUBCASE("tracked ratios settle near truth") {
    for (int i = 0; i < 4; ++i) CHECK(std::abs(r.state.z(i) - 1.0) <= 0.15);
  }
  SUBCASE("plateaus") {
    CHECK(r.plateau_l_mm_db >= -17.0);
    CHECK(r.plateau_l_mm_db <= -9.0);
    CHECK(r.plateau_l_me_db >= -14.0);
    CHECK(r.plateau_l_me_db <= -6.0);
    // Tracking must beat simply holding the initial ratios.
    CHECK(r.plateau_l_me_db <= r.plateau_l_me_init_db - 3.0);
  }
  SUBCASE("estimation error spectra") {
    CHECK(std::abs(r.true_ratio.broadband_db - r.nominal.broadband_db) <= 2.0);
    CHECK(std::abs(r.tracked.broadband_db - r.nominal.broadband_db) <= 3.0);
    CHECK(r.tracked.broadband_db <= r.zero_filter_db - 3.0);
    int bins = 0;
    for (std::size_t k = 0; k < r.tracked.freqs_hz.size(); ++k) {
      const double f = r.tracked.freqs_hz[k];
      if (f < 100.0 || f > 1500.0) continue;
      CHECK(std::abs(r.tracked.l_eps_db[k] - r.nominal.l_eps_db[k]) <= 3.0);
      ++bins;
    }
    CHECK(bins > 100);
  }
  SUBCASE("stability diagnostics") {
    CHECK(r.stability_bound == doctest::Approx(StabilityBound(*d.cal)));
    CHECK(r.source_coherence <= 0.05);
  }
}

TEST_CASE("mismatch experiment") {
  const Desk& d = DeskRun();
  RunConfig two = LoadConfig(std::filesystem::path(VIRTMIC_CONFIG_DIR) / "two_source_scene.json");
  const ImpulseResponses irs = SynthIrs(two.scene, two.base_dir);
  const CalibrationSet cal = RunCalibration(two.scene, two.calibration, irs);
  auto run = [&](double r1, double r2, bool swap) {
    const Vector zt = (Vector(2) << r1 * r1, r2 * r2).finished();
    const Vector zu = swap ? Vector(zt.reverse()) : zt;
    return RunMismatchExperiment(two.scene, two.calibration, two.scenario, irs, zt, zu, 5.0, &cal);
  };
  const MismatchReport same = run(1.2, 0.8, false);
  CHECK(std::abs(same.degradation_db) <= 0.1);
  const MismatchReport small = run(1.2, 0.8, true);
  const MismatchReport large = run(1.5, 0.5, true);
  CHECK(small.degradation_db > 0.0);
  CHECK(large.degradation_db > small.degradation_db);

  SUBCASE("one source is scale invariant") {
    const SceneSpec s = RandomScene(1, 3, 2);
    const ImpulseResponses one = SynthIrs(s);
    ScenarioSpec sc;
    sc.schedule = AmplitudeSchedule::Constant(Vector::Ones(1));
    for (double zu : {0.2, 0.7, 3.0, 40.0}) {
      const MismatchReport m = RunMismatchExperiment(s, CalibrationSpec{6, 2.0, 0}, sc, one,
                                                     Vector::Ones(1), Vector::Constant(1, zu), 2.0);
      CHECK(std::abs(m.degradation_db) <= 0.1);
    }
  }
  SUBCASE("ratio vectors are validated") {
    CHECK_THROWS_AS(RunMismatchExperiment(two.scene, two.calibration, two.scenario, irs,
                                          Vector::Ones(3), Vector::Ones(2), 1.0, &cal),
                    Error);
    CHECK_THROWS_AS(RunMismatchExperiment(two.scene, two.calibration, two.scenario, irs,
                                          -Vector::Ones(2), Vector::Ones(2), 1.0, &cal),
                    Error);
  }
  (void)d;
}

TEST_CASE("IR files") {
  const auto dir = TempDir("irt");
  const SceneSpec s = RandomScene(3, 2, 4);
  const ImpulseResponses irs = SynthIrs(s);
  WriteIrt(dir / "mon.irt", irs.monitor, irs.sample_rate);
  WriteIrt(dir / "virt.irt", irs.virtual_mics, irs.sample_rate);
  double fs = 0.0;
  const auto back = ReadIrt(dir / "mon.irt", &fs);
  CHECK(fs == 10000.0);
  REQUIRE(back.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(back[i] == irs.monitor[i]);

  SUBCASE("from_files scene") {
    SceneSpec f = s;
    f.ir_model = FromFilesModel{"mon.irt", "virt.irt"};
    const ImpulseResponses loaded = SynthIrs(f, dir);
    for (int i = 0; i < 3; ++i) {
      CHECK(loaded.monitor[i] == irs.monitor[i]);
      CHECK(loaded.virtual_mics[i] == irs.virtual_mics[i]);
    }
    f.n_virtual = 5;
    CHECK_THROWS_AS(SynthIrs(f, dir), Error);
  }
  SUBCASE("missing file is a configuration error") {
    SceneSpec f = s;
    f.ir_model = FromFilesModel{"nope.irt", "virt.irt"};
    try {
      SynthIrs(f, dir);
      FAIL("expected an exception");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kConfig);
    }
  }
  SUBCASE("corrupt header") {
    WriteFile(dir / "bad.irt", "IRT2xxxxxxxxxxxxxxxxxxxxxxxx");
    CHECK_THROWS_AS(ReadIrt(dir / "bad.irt"), Error);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("report files") {
  const Desk& d = DeskRun();
  const auto dir = TempDir("report");
  WriteTrackingReport(dir, d.report);
  const std::string hist = ReadFile(dir / "history.csv");
  CHECK(hist.rfind("frame_index,time_s,z_1,z_2,z_3,z_4,Q,L_mm_db,L_me_db\n", 0) == 0);
  CHECK(hist.back() == '\n');
  const std::string spec = ReadFile(dir / "spectra.csv");
  CHECK(spec.rfind("frequency_hz,L_eps_opt_db,L_eps_hat_db,L_eps_st_db\n", 0) == 0);
  CHECK(std::count(spec.begin(), spec.end(), '\n') == 1 + d.cfg.scenario.fft_len / 2 + 1);
  const auto summary = nlohmann::json::parse(ReadFile(dir / "summary.json"));
  CHECK(summary["frames"].get<std::size_t>() == d.report.state.history.size());
  CHECK(summary["z_final"].size() == 4);
  std::filesystem::remove_all(dir);
}
