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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "common.hpp"
#include "rmt_filter.hpp"
#include "signal.hpp"
#include "source_decomp.hpp"
#include "source_track.hpp"

namespace virtmic {

// White taps shaped by gain * exp(-decay_rate * t).
struct RandomDecayModel {
  int length = 1;
  double decay_rate = 0.0;  // 1/s
  std::uint64_t seed = 0;
  double gain = 1.0;
};

// Seeded reverberant tail appended after each direct-path tap.
struct DiffuseTail {
  double gain = 0.0;
  double decay_rate = 0.0;  // 1/s
  std::uint64_t seed = 0;
};

// One tap of amplitude gain / distance at round(distance / c * Fs),
// optionally followed by a diffuse tail. length = 0 sizes the IR to fit.
struct DelayAttenuateModel {
  std::vector<Eigen::Vector3d> sources;
  std::vector<Eigen::Vector3d> monitors;
  std::vector<Eigen::Vector3d> virtuals;
  double speed_of_sound = 343.0;
  double gain = 1.0;
  int length = 0;
  std::optional<DiffuseTail> tail;
};

// Two IRT1 files produced by `synth` or converted from measurements.
struct FromFilesModel {
  std::filesystem::path monitor;
  std::filesystem::path virtual_mics;
};

using IrModel = std::variant<RandomDecayModel, DelayAttenuateModel, FromFilesModel>;

struct SceneSpec {
  int n_sources = 1;
  int n_monitor = 1;
  int n_virtual = 1;
  double sample_rate = 10000.0;
  IrModel ir_model;
  std::uint64_t noise_seed = 0;

  void Validate() const;
};

// Per source, a mics x taps matrix.
struct ImpulseResponses {
  std::vector<Matrix> monitor;
  std::vector<Matrix> virtual_mics;
  double sample_rate = 0.0;

  int n_sources() const { return static_cast<int>(monitor.size()); }
  Eigen::Index taps() const { return monitor.front().cols(); }
};

struct ScheduleSegment {
  double start_s = 0.0;
  Vector r;
};

// Piecewise-constant source amplitude ratios r(t).
class AmplitudeSchedule {
 public:
  AmplitudeSchedule() = default;
  explicit AmplitudeSchedule(std::vector<ScheduleSegment> segments);
  static AmplitudeSchedule Constant(const Vector& r);

  const Vector& At(double t_s) const;
  const std::vector<ScheduleSegment>& segments() const { return segments_; }
  void Validate(int n_sources) const;

 private:
  std::vector<ScheduleSegment> segments_;
};

struct CalibrationSpec {
  int filter_len = 0;
  double duration_s = 10.0;
  Eigen::Index window = 0;  // 0: whole render
};

struct ScenarioSpec {
  double duration_s = 10.0;
  int frame_len = 200;
  double overlap_frac = 0.5;
  Eigen::Index corr_window = 400;
  AmplitudeSchedule schedule;
  TrackerConfig tracker;
  double beta = 0.0;
  int fft_len = 1024;
  double holdout_frac = 0.2;

  Eigen::Index hop() const;
  void Validate(int n_sources) const;
};

// Render streams keep calibration, scenario and mismatch noise independent.
enum class RenderStream : std::uint64_t {
  kCalibration = 1,
  kScenario = 2,
  kMismatch = 3,
};

std::mt19937_64 MakeEngine(std::uint64_t seed, std::uint64_t stream,
                           std::uint64_t index);

// `base_dir` resolves relative FromFiles paths.
ImpulseResponses SynthIrs(const SceneSpec& spec,
                          const std::filesystem::path& base_dir = {});

struct RenderedScene {
  MultichannelSignal mon;
  MultichannelSignal err;
  MultichannelSignal sources;
};

// Each source emits independent unit-variance white Gaussian noise scaled
// by its schedule; microphones receive the sum of per-source convolutions.
RenderedScene RenderScene(const ImpulseResponses& irs,
                          const AmplitudeSchedule& schedule,
                          Eigen::Index n_samples, std::uint64_t seed,
                          RenderStream stream);

Eigen::Index SamplesFor(double duration_s, double sample_rate);

CalibrationSet RunCalibration(const SceneSpec& scene,
                              const CalibrationSpec& calib,
                              const ImpulseResponses& irs);

struct TrackingReport {
  TrackerState state;
  TrackerConfig tracker;  // resolved
  std::vector<double> l_me_init_db;  // per frame, reconstruction at z_init
  ErrorSpectrum nominal;             // O_opt from the joint training data
  ErrorSpectrum true_ratio;          // decomposed filter at the true z
  ErrorSpectrum tracked;             // decomposed filter at the final z
  double zero_filter_db = 0.0;
  Vector z_true;
  double plateau_l_mm_db = 0.0;
  double plateau_l_me_db = 0.0;
  double plateau_l_me_init_db = 0.0;
  double stability_bound = 0.0;
  double source_coherence = 0.0;
  Eigen::Index n_samples = 0;
  Eigen::Index holdout_samples = 0;

  bool empty() const { return state.history.empty() && n_samples == 0; }
};

// Fraction of trailing frames averaged for plateau values.
inline constexpr double kPlateauFraction = 0.25;

// Renders the scene, tracks z frame by frame, and scores the nominal, true-z
// and tracked filters on a held-out tail of the render. Uses `cal` when
// given, otherwise calibrates inline.
TrackingReport RunTrackingScenario(const SceneSpec& scene,
                                   const CalibrationSpec& calib,
                                   const ScenarioSpec& scenario,
                                   const ImpulseResponses& irs,
                                   const CalibrationSet* cal = nullptr);

struct MismatchReport {
  Vector z_true;
  Vector z_used;
  ErrorSpectrum nominal;
  ErrorSpectrum matched;
  ErrorSpectrum mismatched;
  double degradation_db = 0.0;  // mismatched - matched, broadband
};

MismatchReport RunMismatchExperiment(const SceneSpec& scene,
                                     const CalibrationSpec& calib,
                                     const ScenarioSpec& scenario,
                                     const ImpulseResponses& irs,
                                     const Vector& z_true, const Vector& z_used,
                                     double duration_s,
                                     const CalibrationSet* cal = nullptr);

// IRT1: "IRT1", u32 sources, u32 mics, u32 taps, f64 sample rate,
// f64 payload ordered [source][mic][tap].
void WriteIrt(const std::filesystem::path& path, const std::vector<Matrix>& irs,
              double sample_rate);
std::vector<Matrix> ReadIrt(const std::filesystem::path& path,
                            double* sample_rate = nullptr);

void WriteTrackingReport(const std::filesystem::path& dir,
                         const TrackingReport& report);
void WriteMismatchReport(const std::filesystem::path& dir,
                         const MismatchReport& report);

}  // namespace virtmic
