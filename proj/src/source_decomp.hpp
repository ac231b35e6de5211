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

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"
#include "corr.hpp"
#include "rmt_filter.hpp"
#include "signal.hpp"
#include "spectral.hpp"

namespace virtmic {

// Per-source calibration correlation matrices, all sharing one shape.
// Immutable once built.
class CalibrationSet {
 public:
  CalibrationSet(std::vector<LaggedCorrMatrix> autos,
                 std::vector<LaggedCorrMatrix> crosses, double sample_rate,
                 std::vector<std::string> reference_strengths = {});

  int n_sources() const { return static_cast<int>(autos_.size()); }
  int n_mics() const { return autos_.front().n_mics(); }
  int filter_len() const { return autos_.front().filter_len(); }
  int n_targets() const { return crosses_.front().n_targets(); }
  double sample_rate() const { return sample_rate_; }
  Eigen::Index window_len() const { return autos_.front().window_len(); }

  const std::vector<LaggedCorrMatrix>& autos() const { return autos_; }
  const std::vector<LaggedCorrMatrix>& crosses() const { return crosses_; }
  const std::vector<std::string>& reference_strengths() const {
    return reference_strengths_;
  }

 private:
  std::vector<LaggedCorrMatrix> autos_;
  std::vector<LaggedCorrMatrix> crosses_;
  double sample_rate_;
  std::vector<std::string> reference_strengths_;
};

using SignalPair = std::pair<MultichannelSignal, MultichannelSignal>;

// One (monitor, virtual) capture per source, each with only that source
// active. window_len = 0 uses every sample.
CalibrationSet Calibrate(const std::vector<SignalPair>& per_source, int filter_len,
                         Eigen::Index window_len = 0);

// sum_nv z_nv R^(nv), accumulated in ascending source order.
LaggedCorrMatrix ReconstructAuto(const CalibrationSet& cal, const Vector& z);
LaggedCorrMatrix ReconstructCross(const CalibrationSet& cal, const Vector& z);

ObservationFilter OfDecomposed(const CalibrationSet& cal, const Vector& z,
                               double beta);

// Per-bin analogue over per-source spectral sets (mm and me populated).
ObservationFilter OfDecomposedFreq(const std::vector<SpectralMatrixSet>& per_source,
                                   const Vector& z, double beta);

struct CoherenceDiagnostic {
  double max_coherence = 0.0;
  bool warn = false;  // above 0.2
};

// Largest inter-source magnitude-squared coherence; one channel per source.
CoherenceDiagnostic SourceCoherence(const MultichannelSignal& sources,
                                    int fft_len = 256);

// Directory layout: calibration.json plus auto_NN.lcm / cross_NN.lcm.
void SaveCalibration(const std::filesystem::path& dir, const CalibrationSet& cal);
CalibrationSet LoadCalibration(const std::filesystem::path& dir);

}  // namespace virtmic
