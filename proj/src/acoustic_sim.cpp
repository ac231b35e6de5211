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

#include "acoustic_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "csv.hpp"

namespace virtmic {

void SceneSpec::Validate() const {
  if (n_sources < 1 || n_monitor < 1 || n_virtual < 1)
    Fail(ErrorCode::kConfig, "scene: source and microphone counts must be >= 1");
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate))
    Fail(ErrorCode::kConfig, "scene.sample_rate must be > 0");
  if (const auto* rd = std::get_if<RandomDecayModel>(&ir_model)) {
    if (rd->length < 1) Fail(ErrorCode::kConfig, "scene.ir_model.length must be >= 1");
    if (!(rd->decay_rate >= 0.0))
      Fail(ErrorCode::kConfig, "scene.ir_model.decay_rate must be >= 0");
  } else if (const auto* da = std::get_if<DelayAttenuateModel>(&ir_model)) {
    auto check = [](const std::vector<Eigen::Vector3d>& pts, std::size_t n,
                    const char* name) {
      if (pts.size() != n)
        Fail(ErrorCode::kConfig,
             fmt::format("scene.ir_model.{} lists {} positions, expected {}", name,
                         pts.size(), n));
      for (const auto& p : pts)
        if (!p.allFinite())
          Fail(ErrorCode::kConfig,
               fmt::format("scene.ir_model.{} has a non-finite position", name));
    };
    check(da->sources, static_cast<std::size_t>(n_sources), "sources");
    check(da->monitors, static_cast<std::size_t>(n_monitor), "monitors");
    check(da->virtuals, static_cast<std::size_t>(n_virtual), "virtual");
    if (!(da->speed_of_sound > 0.0))
      Fail(ErrorCode::kConfig, "scene.ir_model.speed_of_sound must be > 0");
    if (da->length < 0) Fail(ErrorCode::kConfig, "scene.ir_model.length must be >= 0");
  }
}

AmplitudeSchedule::AmplitudeSchedule(std::vector<ScheduleSegment> segments)
    : segments_(std::move(segments)) {
  std::stable_sort(segments_.begin(), segments_.end(),
                   [](const auto& a, const auto& b) { return a.start_s < b.start_s; });
}

AmplitudeSchedule AmplitudeSchedule::Constant(const Vector& r) {
  return AmplitudeSchedule({ScheduleSegment{0.0, r}});
}

const Vector& AmplitudeSchedule::At(double t_s) const {
  const ScheduleSegment* current = &segments_.front();
  for (const auto& s : segments_) {
    if (s.start_s > t_s) break;
    current = &s;
  }
  return current->r;
}

void AmplitudeSchedule::Validate(int n_sources) const {
  if (segments_.empty()) Fail(ErrorCode::kConfig, "scenario.schedule is empty");
  if (segments_.front().start_s != 0.0)
    Fail(ErrorCode::kConfig, "scenario.schedule must start at start_s = 0");
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const Vector& r = segments_[i].r;
    if (r.size() != n_sources)
      Fail(ErrorCode::kConfig,
           fmt::format("scenario.schedule[{}].r has {} entries, expected {}", i,
                       r.size(), n_sources));
    if (!r.allFinite() || (r.array() < 0.0).any())
      Fail(ErrorCode::kConfig,
           fmt::format("scenario.schedule[{}].r must be finite and >= 0", i));
  }
}

Eigen::Index ScenarioSpec::hop() const {
  return std::max<Eigen::Index>(
      1, frame_len - static_cast<Eigen::Index>(std::lround(overlap_frac * frame_len)));
}

void ScenarioSpec::Validate(int n_sources) const {
  if (!(duration_s >= 0.0) || !std::isfinite(duration_s))
    Fail(ErrorCode::kConfig, "scenario.duration_s must be >= 0");
  if (frame_len < 1) Fail(ErrorCode::kConfig, "scenario.frame_len must be >= 1");
  if (!(overlap_frac >= 0.0 && overlap_frac < 1.0))
    Fail(ErrorCode::kConfig, "scenario.overlap must lie in [0, 1)");
  if (corr_window < hop())
    Fail(ErrorCode::kConfig, "scenario.corr_window must be >= the frame advance");
  if (fft_len < 2) Fail(ErrorCode::kConfig, "scenario.fft_len must be >= 2");
  if (!(holdout_frac > 0.0 && holdout_frac < 1.0))
    Fail(ErrorCode::kConfig, "scenario.holdout_frac must lie in (0, 1)");
  if (!(beta >= 0.0)) Fail(ErrorCode::kConfig, "scenario.beta must be >= 0");
  if (tracker.iters_per_frame < 1)
    Fail(ErrorCode::kConfig, "scenario.tracker.iters_per_frame must be >= 1");
  schedule.Validate(n_sources);
}

std::mt19937_64 MakeEngine(std::uint64_t seed, std::uint64_t stream,
                           std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

Eigen::Index SamplesFor(double duration_s, double sample_rate) {
  return static_cast<Eigen::Index>(std::llround(duration_s * sample_rate));
}

namespace {

std::vector<Matrix> RandomDecayBank(int n_sources, int n_mics,
                                    const RandomDecayModel& m, double fs,
                                    std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::vector<Matrix> bank;
  for (int s = 0; s < n_sources; ++s) {
    Matrix h(n_mics, m.length);
    for (int j = 0; j < n_mics; ++j)
      for (int k = 0; k < m.length; ++k)
        h(j, k) = m.gain * normal(rng) * std::exp(-m.decay_rate * k / fs);
    bank.push_back(std::move(h));
  }
  return bank;
}

int DirectTap(const Eigen::Vector3d& src, const Eigen::Vector3d& mic,
              double c, double fs, double* distance) {
  *distance = (src - mic).norm();
  if (!(*distance > 0.0))
    Fail(ErrorCode::kConfig,
         "scene.ir_model: source and microphone coincide (distance 0)");
  return static_cast<int>(std::lround(*distance / c * fs));
}

std::vector<Matrix> DelayBank(const DelayAttenuateModel& m,
                              const std::vector<Eigen::Vector3d>& mics, int length,
                              double fs, std::mt19937_64* tail_rng) {
  std::normal_distribution<double> normal;
  std::vector<Matrix> bank;
  for (const auto& src : m.sources) {
    Matrix h = Matrix::Zero(static_cast<Eigen::Index>(mics.size()), length);
    for (std::size_t j = 0; j < mics.size(); ++j) {
      double d = 0.0;
      const int k0 = DirectTap(src, mics[j], m.speed_of_sound, fs, &d);
      if (k0 >= length)
        Fail(ErrorCode::kConfig,
             fmt::format("scene.ir_model.length {} is too short for a delay of {} "
                         "samples",
                         length, k0));
      const auto row = static_cast<Eigen::Index>(j);
      h(row, k0) = m.gain / d;
      if (m.tail) {
        for (int k = k0 + 1; k < length; ++k)
          h(row, k) += m.gain * m.tail->gain * normal(*tail_rng) *
                       std::exp(-m.tail->decay_rate * (k - k0) / fs);
      }
    }
    bank.push_back(std::move(h));
  }
  return bank;
}

int AutoLength(const DelayAttenuateModel& m, double fs) {
  int max_tap = 0;
  for (const auto& s : m.sources) {
    for (const auto* mics : {&m.monitors, &m.virtuals})
      for (const auto& p : *mics) {
        double d = 0.0;
        max_tap = std::max(max_tap, DirectTap(s, p, m.speed_of_sound, fs, &d));
      }
  }
  int length = max_tap + 1;
  if (m.tail && m.tail->decay_rate > 0.0)
    length += static_cast<int>(std::ceil(3.0 * fs / m.tail->decay_rate));
  return length;
}

std::filesystem::path Resolve(const std::filesystem::path& base,
                              const std::filesystem::path& p) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

ImpulseResponses SynthIrs(const SceneSpec& spec,
                          const std::filesystem::path& base_dir) {
  spec.Validate();
  ImpulseResponses irs;
  irs.sample_rate = spec.sample_rate;
  if (const auto* rd = std::get_if<RandomDecayModel>(&spec.ir_model)) {
    std::mt19937_64 rng = MakeEngine(rd->seed, 0, 0);
    irs.monitor = RandomDecayBank(spec.n_sources, spec.n_monitor, *rd,
                                  spec.sample_rate, rng);
    irs.virtual_mics = RandomDecayBank(spec.n_sources, spec.n_virtual, *rd,
                                       spec.sample_rate, rng);
  } else if (const auto* da = std::get_if<DelayAttenuateModel>(&spec.ir_model)) {
    const int length = da->length > 0 ? da->length : AutoLength(*da, spec.sample_rate);
    std::mt19937_64 rng = MakeEngine(da->tail ? da->tail->seed : 0, 0, 0);
    irs.monitor = DelayBank(*da, da->monitors, length, spec.sample_rate, &rng);
    irs.virtual_mics = DelayBank(*da, da->virtuals, length, spec.sample_rate, &rng);
  } else {
    const auto& ff = std::get<FromFilesModel>(spec.ir_model);
    const auto mon_path = Resolve(base_dir, ff.monitor);
    const auto vir_path = Resolve(base_dir, ff.virtual_mics);
    for (const auto& p : {mon_path, vir_path})
      if (!std::filesystem::exists(p))
        Fail(ErrorCode::kConfig, "scene.ir_model: IR file not found: " + p.string());
    double fs_m = 0.0, fs_v = 0.0;
    irs.monitor = ReadIrt(mon_path, &fs_m);
    irs.virtual_mics = ReadIrt(vir_path, &fs_v);
    if (fs_m != spec.sample_rate || fs_v != spec.sample_rate)
      Fail(ErrorCode::kConfig, "scene.ir_model: IR sample rate differs from scene");
    auto check = [&](const std::vector<Matrix>& b, int mics, const char* what) {
      if (static_cast<int>(b.size()) != spec.n_sources || b.front().rows() != mics)
        Fail(ErrorCode::kConfig,
             fmt::format("scene.ir_model.{}: file has {} sources x {} mics, scene "
                         "expects {} x {}",
                         what, b.size(), b.front().rows(), spec.n_sources, mics));
    };
    check(irs.monitor, spec.n_monitor, "monitor");
    check(irs.virtual_mics, spec.n_virtual, "virtual");
  }
  return irs;
}

RenderedScene RenderScene(const ImpulseResponses& irs,
                          const AmplitudeSchedule& schedule,
                          Eigen::Index n_samples, std::uint64_t seed,
                          RenderStream stream) {
  const int n_src = irs.n_sources();
  schedule.Validate(n_src);
  if (n_samples < 1)
    Fail(ErrorCode::kInsufficientSamples, "render needs at least one sample");
  const Eigen::Index n_mon = irs.monitor.front().rows();
  const Eigen::Index n_vir = irs.virtual_mics.front().rows();
  const double fs = irs.sample_rate;

  // Per-sample amplitude for each source.
  Matrix gains(n_src, n_samples);
  {
    const auto& segs = schedule.segments();
    std::size_t seg = 0;
    for (Eigen::Index n = 0; n < n_samples; ++n) {
      const double t = static_cast<double>(n) / fs;
      while (seg + 1 < segs.size() && segs[seg + 1].start_s <= t) ++seg;
      gains.col(n) = segs[seg].r;
    }
  }

  Matrix src = Matrix::Zero(n_src, n_samples);
  Matrix mon = Matrix::Zero(n_mon, n_samples);
  Matrix err = Matrix::Zero(n_vir, n_samples);
  auto convolve_into = [n_samples](const Eigen::Ref<const Vector>& v, const Matrix& h,
                                   Matrix& out) {
    for (Eigen::Index j = 0; j < h.rows(); ++j)
      for (Eigen::Index k = 0; k < h.cols() && k < n_samples; ++k) {
        const double tap = h(j, k);
        if (tap == 0.0) continue;
        out.row(j).segment(k, n_samples - k) +=
            tap * v.head(n_samples - k).transpose();
      }
  };
  for (int s = 0; s < n_src; ++s) {
    if ((gains.row(s).array() == 0.0).all()) continue;
    std::mt19937_64 rng =
        MakeEngine(seed, static_cast<std::uint64_t>(stream), static_cast<std::uint64_t>(s));
    std::normal_distribution<double> normal;
    for (Eigen::Index n = 0; n < n_samples; ++n)
      src(s, n) = gains(s, n) * normal(rng);
    const Vector v = src.row(s).transpose();
    convolve_into(v, irs.monitor[static_cast<std::size_t>(s)], mon);
    convolve_into(v, irs.virtual_mics[static_cast<std::size_t>(s)], err);
  }
  return {MultichannelSignal(std::move(mon), fs), MultichannelSignal(std::move(err), fs),
          MultichannelSignal(std::move(src), fs)};
}

CalibrationSet RunCalibration(const SceneSpec& scene, const CalibrationSpec& calib,
                              const ImpulseResponses& irs) {
  if (calib.filter_len < 1)
    Fail(ErrorCode::kConfig, "calibration.filter_len is required and must be >= 1");
  const Eigen::Index n = SamplesFor(calib.duration_s, scene.sample_rate);
  std::vector<SignalPair> pairs;
  for (int s = 0; s < irs.n_sources(); ++s) {
    Vector r = Vector::Zero(irs.n_sources());
    r(s) = 1.0;
    RenderedScene solo = RenderScene(irs, AmplitudeSchedule::Constant(r), n,
                                     scene.noise_seed, RenderStream::kCalibration);
    pairs.emplace_back(std::move(solo.mon), std::move(solo.err));
  }
  return Calibrate(pairs, calib.filter_len, calib.window);
}

namespace {

void CheckCalibration(const CalibrationSet& cal, const SceneSpec& scene,
                      const CalibrationSpec& calib) {
  if (cal.n_sources() != scene.n_sources || cal.n_mics() != scene.n_monitor ||
      cal.n_targets() != scene.n_virtual || cal.filter_len() != calib.filter_len)
    Fail(ErrorCode::kDimensionMismatch,
         fmt::format("calibration (N_v={}, M={}, E={}, I={}) does not match scene "
                     "(N_v={}, M={}, E={}, I={})",
                     cal.n_sources(), cal.n_mics(), cal.n_targets(), cal.filter_len(),
                     scene.n_sources, scene.n_monitor, scene.n_virtual,
                     calib.filter_len));
}

double TailMean(const std::vector<double>& v, std::size_t count) {
  if (count == 0) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (std::size_t i = v.size() - count; i < v.size(); ++i) sum += v[i];
  return sum / static_cast<double>(count);
}

struct HeldOut {
  Eigen::Index train;
  MultichannelSignal mon;  // includes I-1 lead-in samples
  MultichannelSignal err;
};

HeldOut SplitHoldout(const RenderedScene& scene, double holdout_frac,
                     int filter_len, int fft_len) {
  const Eigen::Index n = scene.mon.length();
  const auto hold = static_cast<Eigen::Index>(std::llround(holdout_frac * n));
  const Eigen::Index train = n - hold;
  if (hold < fft_len || train < std::max<Eigen::Index>(filter_len, 1) + filter_len)
    Fail(ErrorCode::kInsufficientSamples,
         fmt::format("render of {} samples too short for a held-out segment of {} "
                     "with fft_len {}",
                     n, hold, fft_len));
  const Eigen::Index lead = filter_len - 1;
  return {train, scene.mon.Slice(train - lead, hold + lead), scene.err.Slice(train, hold)};
}

ErrorSpectrum Score(const ObservationFilter& of, const HeldOut& ho, int fft_len) {
  return EstimationErrorSpectrum(ho.err, ApplyOf(of, ho.mon), fft_len);
}

}  // namespace

TrackingReport RunTrackingScenario(const SceneSpec& scene,
                                   const CalibrationSpec& calib,
                                   const ScenarioSpec& scenario,
                                   const ImpulseResponses& irs,
                                   const CalibrationSet* cal_in) {
  scenario.Validate(scene.n_sources);
  std::optional<CalibrationSet> own;
  if (cal_in == nullptr) own.emplace(RunCalibration(scene, calib, irs));
  const CalibrationSet& cal = cal_in ? *cal_in : *own;
  CheckCalibration(cal, scene, calib);

  TrackingReport report;
  report.tracker = scenario.tracker.Resolve(cal);
  report.state = InitialState(report.tracker);
  report.stability_bound = StabilityBound(cal);
  report.z_true = scenario.schedule.At(scenario.duration_s).array().square();
  report.n_samples = SamplesFor(scenario.duration_s, scene.sample_rate);
  if (report.n_samples == 0) return report;

  const RenderedScene rendered =
      RenderScene(irs, scenario.schedule, report.n_samples, scene.noise_seed,
                  RenderStream::kScenario);
  report.source_coherence = SourceCoherence(rendered.sources).max_coherence;

  const int taps = cal.filter_len();
  SourceTracker tracker(cal, report.tracker);
  const Eigen::Index window = scenario.corr_window;
  for (Eigen::Index end = scenario.frame_len; end <= report.n_samples;
       end += scenario.hop()) {
    if (end < window || window < taps) continue;
    const LaggedCorrMatrix r_mm = EstimateCorrAuto(rendered.mon, taps, end - window, window);
    const LaggedCorrMatrix r_me =
        EstimateCorrCross(rendered.mon, rendered.err, taps, end - window, window);
    tracker.PushFrame(r_mm, &r_me, static_cast<double>(end) / scene.sample_rate);
    if (r_me.data().squaredNorm() > 0.0)
      report.l_me_init_db.push_back(NormalizedErrorDb(
          r_me.data(), ReconstructCross(cal, report.tracker.z_init).data()));
    else
      report.l_me_init_db.push_back(std::numeric_limits<double>::quiet_NaN());
    if (tracker.state().diverged) break;
  }
  report.state = tracker.state();

  const auto& hist = report.state.history;
  if (!hist.empty()) {
    const std::size_t tail = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(kPlateauFraction * hist.size())));
    std::vector<double> lmm, lme;
    for (const auto& h : hist) {
      lmm.push_back(h.l_mm_db);
      lme.push_back(h.l_me_db);
    }
    report.plateau_l_mm_db = TailMean(lmm, tail);
    report.plateau_l_me_db = TailMean(lme, tail);
    report.plateau_l_me_init_db =
        TailMean(report.l_me_init_db, std::min(tail, report.l_me_init_db.size()));
  }

  const HeldOut ho = SplitHoldout(rendered, scenario.holdout_frac, taps, scenario.fft_len);
  report.holdout_samples = ho.err.length();
  const ObservationFilter nominal = OfTimeOptimal(
      EstimateCorrAuto(rendered.mon, taps, 0, ho.train),
      EstimateCorrCross(rendered.mon, rendered.err, taps, 0, ho.train), scenario.beta,
      scene.sample_rate);
  report.nominal = Score(nominal, ho, scenario.fft_len);
  report.true_ratio = Score(OfDecomposed(cal, report.z_true, scenario.beta), ho,
                            scenario.fft_len);
  report.tracked = Score(OfDecomposed(cal, report.state.z, scenario.beta), ho,
                         scenario.fft_len);
  ObservationFilter zero = nominal;
  zero.time_coeffs.setZero();
  report.zero_filter_db = Score(zero, ho, scenario.fft_len).broadband_db;
  return report;
}

MismatchReport RunMismatchExperiment(const SceneSpec& scene,
                                     const CalibrationSpec& calib,
                                     const ScenarioSpec& scenario,
                                     const ImpulseResponses& irs,
                                     const Vector& z_true, const Vector& z_used,
                                     double duration_s,
                                     const CalibrationSet* cal_in) {
  for (const Vector* z : {&z_true, &z_used}) {
    if (z->size() != scene.n_sources)
      Fail(ErrorCode::kDimensionMismatch,
           fmt::format("ratio vector has {} entries for {} sources", z->size(),
                       scene.n_sources));
    if (!z->allFinite() || (z->array() < 0.0).any())
      Fail(ErrorCode::kInvalidArgument, "squared ratios must be finite and >= 0");
  }
  std::optional<CalibrationSet> own;
  if (cal_in == nullptr) own.emplace(RunCalibration(scene, calib, irs));
  const CalibrationSet& cal = cal_in ? *cal_in : *own;
  CheckCalibration(cal, scene, calib);

  const Eigen::Index n = SamplesFor(duration_s, scene.sample_rate);
  const RenderedScene rendered =
      RenderScene(irs, AmplitudeSchedule::Constant(z_true.cwiseSqrt()), n,
                  scene.noise_seed, RenderStream::kMismatch);
  const int taps = cal.filter_len();
  const HeldOut ho = SplitHoldout(rendered, scenario.holdout_frac, taps, scenario.fft_len);

  MismatchReport report;
  report.z_true = z_true;
  report.z_used = z_used;
  report.nominal = Score(
      OfTimeOptimal(EstimateCorrAuto(rendered.mon, taps, 0, ho.train),
                    EstimateCorrCross(rendered.mon, rendered.err, taps, 0, ho.train),
                    scenario.beta, scene.sample_rate),
      ho, scenario.fft_len);
  report.matched = Score(OfDecomposed(cal, z_true, scenario.beta), ho, scenario.fft_len);
  report.mismatched =
      Score(OfDecomposed(cal, z_used, scenario.beta), ho, scenario.fft_len);
  report.degradation_db = report.mismatched.broadband_db - report.matched.broadband_db;
  return report;
}

void WriteIrt(const std::filesystem::path& path, const std::vector<Matrix>& irs,
              double sample_rate) {
  if (irs.empty()) Fail(ErrorCode::kInvalidArgument, "no impulse responses");
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path.string());
  ByteWriter w(out);
  w.Tag("IRT1");
  w.U32(static_cast<std::uint32_t>(irs.size()));
  w.U32(static_cast<std::uint32_t>(irs.front().rows()));
  w.U32(static_cast<std::uint32_t>(irs.front().cols()));
  w.F64(sample_rate);
  for (const Matrix& h : irs) {
    if (h.rows() != irs.front().rows() || h.cols() != irs.front().cols())
      Fail(ErrorCode::kDimensionMismatch, "IR bank shapes differ");
    for (Eigen::Index j = 0; j < h.rows(); ++j)
      for (Eigen::Index k = 0; k < h.cols(); ++k) w.F64(h(j, k));
  }
  if (!out) Fail(ErrorCode::kIo, "write failed: " + path.string());
}

std::vector<Matrix> ReadIrt(const std::filesystem::path& path, double* sample_rate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path.string());
  ByteReader r(in, path.string());
  if (r.Tag() != "IRT1") Fail(ErrorCode::kFormat, "bad IRT1 magic: " + path.string());
  const std::uint32_t n_src = r.U32();
  const std::uint32_t n_mic = r.U32();
  const std::uint32_t taps = r.U32();
  const double fs = r.F64();
  if (n_src == 0 || n_mic == 0 || taps == 0 || n_src > 4096 || n_mic > 4096 ||
      taps > (1u << 24))
    Fail(ErrorCode::kFormat, "implausible IRT1 dimensions");
  if (sample_rate) *sample_rate = fs;
  std::vector<Matrix> out;
  for (std::uint32_t s = 0; s < n_src; ++s) {
    Matrix h(n_mic, taps);
    for (Eigen::Index j = 0; j < h.rows(); ++j)
      for (Eigen::Index k = 0; k < h.cols(); ++k) h(j, k) = r.F64();
    out.push_back(std::move(h));
  }
  return out;
}

namespace {

nlohmann::ordered_json VecJson(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

void WriteJson(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) Fail(ErrorCode::kIo, "write failed: " + path.string());
}

}  // namespace

void WriteTrackingReport(const std::filesystem::path& dir,
                         const TrackingReport& report) {
  std::filesystem::create_directories(dir);
  WriteHistoryCsv(dir / "history.csv", report.state);

  CsvWriter csv(dir / "spectra.csv");
  csv.Header({"frequency_hz", "L_eps_opt_db", "L_eps_hat_db", "L_eps_st_db"});
  for (std::size_t b = 0; b < report.nominal.freqs_hz.size(); ++b)
    csv.Row(report.nominal.freqs_hz[b], report.nominal.l_eps_db[b],
            report.true_ratio.l_eps_db[b], report.tracked.l_eps_db[b]);
  csv.Close();

  nlohmann::ordered_json s;
  s["frames"] = report.state.history.size();
  s["n_samples"] = report.n_samples;
  s["holdout_samples"] = report.holdout_samples;
  s["z_final"] = VecJson(report.state.z);
  s["z_true"] = VecJson(report.z_true);
  s["diverged"] = report.state.diverged;
  s["converged"] = report.state.converged;
  s["converged_frame"] = report.state.converged_frame;
  s["plateau_fraction"] = kPlateauFraction;
  s["plateau_L_mm_db"] = report.plateau_l_mm_db;
  s["plateau_L_me_db"] = report.plateau_l_me_db;
  s["plateau_L_me_at_z_init_db"] = report.plateau_l_me_init_db;
  s["broadband_L_eps_opt_db"] = report.nominal.broadband_db;
  s["broadband_L_eps_hat_db"] = report.true_ratio.broadband_db;
  s["broadband_L_eps_st_db"] = report.tracked.broadband_db;
  s["broadband_L_eps_zero_db"] = report.zero_filter_db;
  s["alpha"] = VecJson(report.tracker.alpha);
  s["sigma"] = VecJson(report.tracker.sigma);
  s["stability_bound"] = report.stability_bound;
  s["max_source_coherence"] = report.source_coherence;
  WriteJson(dir / "summary.json", s);
}

void WriteMismatchReport(const std::filesystem::path& dir,
                         const MismatchReport& report) {
  std::filesystem::create_directories(dir);
  CsvWriter csv(dir / "mismatch_spectra.csv");
  csv.Header({"frequency_hz", "L_eps_opt_db", "L_eps_matched_db",
              "L_eps_mismatched_db"});
  for (std::size_t b = 0; b < report.nominal.freqs_hz.size(); ++b)
    csv.Row(report.nominal.freqs_hz[b], report.nominal.l_eps_db[b],
            report.matched.l_eps_db[b], report.mismatched.l_eps_db[b]);
  csv.Close();

  nlohmann::ordered_json s;
  s["z_true"] = VecJson(report.z_true);
  s["z_used"] = VecJson(report.z_used);
  s["broadband_L_eps_opt_db"] = report.nominal.broadband_db;
  s["broadband_L_eps_matched_db"] = report.matched.broadband_db;
  s["broadband_L_eps_mismatched_db"] = report.mismatched.broadband_db;
  s["degradation_db"] = report.degradation_db;
  WriteJson(dir / "mismatch_summary.json", s);
}

}  // namespace virtmic
