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
#include <vector>

#include "common.hpp"
#include "corr.hpp"
#include "source_decomp.hpp"

namespace virtmic {

enum class Solver { kGradientDescent, kClosedForm };

// Bound-constrained source-ratio tracker settings. Empty vectors are
// resolved against a calibration set by Resolve(): alpha 5, bounds [0, 5],
// sigma 10 * max diag(A), z_init 0.5.
struct TrackerConfig {
  Vector alpha;
  Vector lower;
  Vector upper;
  Vector sigma;
  Vector z_init;
  int iters_per_frame = 1;
  // Update with the full objective gradient instead of the half-scaled
  // trace term of the literal update rule.
  bool use_eq10_gradient = false;
  Solver solver = Solver::kGradientDescent;

  TrackerConfig Resolve(const CalibrationSet& cal) const;
  // Throws kConfig when lengths or signs are inconsistent.
  void Validate(int n_sources) const;
};

struct PenaltySwitches {
  Vector h;  // 1 where z < lower
  Vector g;  // 1 where z > upper
};

PenaltySwitches ComputePenaltySwitches(const Vector& z, const Vector& lower,
                                       const Vector& upper);

// Frobenius misfit plus quadratic bound penalty.
double Objective(const LaggedCorrMatrix& r_meas, const CalibrationSet& cal,
                 const Vector& z, const TrackerConfig& cfg);

Vector Gradient(const LaggedCorrMatrix& r_meas, const CalibrationSet& cal,
                const Vector& z, const TrackerConfig& cfg);

// A_ij = tr{R^(i) R^(j)T}: Gram matrix of the calibration set under the
// Frobenius inner product.
Matrix GramMatrix(const CalibrationSet& cal);

// c_i = tr{R_meas R^(i)T}.
Vector CrossTraces(const LaggedCorrMatrix& r_meas, const CalibrationSet& cal);

// 1 / lambda_max(A).
double StabilityBound(const CalibrationSet& cal);

struct ClosedFormSolution {
  Vector z;
  double condition_number = 0.0;
};

// Unconstrained minimiser z = A^-1 c. Throws kSingular (with the condition
// number) when A is numerically singular.
ClosedFormSolution SolveClosedForm(const LaggedCorrMatrix& r_meas,
                                   const CalibrationSet& cal);

// 10 log10(||R - R_hat||_F^2 / ||R||_F^2), -inf reported as kMinusInfDb.
double NormalizedErrorDb(const Matrix& r_true, const Matrix& r_hat);

struct HistoryEntry {
  std::int64_t frame_index = 0;
  double time_s = 0.0;
  Vector z;
  double q = 0.0;
  double l_mm_db = 0.0;
  double l_me_db = 0.0;  // NaN without a cross reference
};

struct TrackerState {
  Vector z;
  std::int64_t frame_index = 0;
  std::vector<HistoryEntry> history;
  bool converged = false;
  std::int64_t converged_frame = -1;
  int quiet_steps = 0;
  bool diverged = false;
};

inline constexpr double kDivergenceNorm = 1e6;
inline constexpr double kConvergenceRelChange = 1e-3;
inline constexpr int kConvergenceSteps = 10;

TrackerState InitialState(const TrackerConfig& resolved);

// One update of z for the given measured frame; appends a history entry
// evaluated at the new z. A step whose result exceeds kDivergenceNorm (or
// is non-finite) leaves z at its last stable value and sets `diverged`;
// later steps are no-ops.
TrackerState GdStep(TrackerState state, const LaggedCorrMatrix& r_meas,
                    const CalibrationSet& cal, const TrackerConfig& resolved,
                    const LaggedCorrMatrix* r_me_ref = nullptr,
                    double time_s = 0.0);

struct Frame {
  LaggedCorrMatrix r_mm;
  std::optional<LaggedCorrMatrix> r_me;
  double time_s = 0.0;
};

// Streaming front end: feed frames as they arrive.
class SourceTracker {
 public:
  SourceTracker(const CalibrationSet& cal, const TrackerConfig& cfg);

  void PushFrame(const LaggedCorrMatrix& r_mm, const LaggedCorrMatrix* r_me,
                 double time_s);

  const TrackerState& state() const { return state_; }
  const TrackerConfig& config() const { return cfg_; }
  const CalibrationSet& calibration() const { return cal_; }

 private:
  CalibrationSet cal_;
  TrackerConfig cfg_;
  TrackerState state_;
};

TrackerState Track(const std::vector<Frame>& frames, const CalibrationSet& cal,
                   const TrackerConfig& cfg);

// frame_index, time_s, z_1..z_Nv, Q, L_mm_db, L_me_db
void WriteHistoryCsv(const std::filesystem::path& path, const TrackerState& state);

}  // namespace virtmic
