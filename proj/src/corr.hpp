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

#include "common.hpp"
#include "signal.hpp"

namespace virtmic {

enum class CorrKind : std::uint8_t { kMonitorAuto = 0, kMonitorCross = 1 };

// Stacked-tap correlation matrix. Rows index (channel, tap) channel-major:
// row m*I + k holds monitoring channel m delayed by k samples. MonitorAuto
// is MI x MI, MonitorCross is MI x E.
class LaggedCorrMatrix {
 public:
  LaggedCorrMatrix(Matrix data, int n_mics, int filter_len, int n_targets,
                   CorrKind kind, Eigen::Index window_len = 0);

  const Matrix& data() const { return data_; }
  int n_mics() const { return n_mics_; }
  int filter_len() const { return filter_len_; }
  int n_targets() const { return n_targets_; }
  CorrKind kind() const { return kind_; }
  Eigen::Index window_len() const { return window_len_; }
  Eigen::Index stacked_dim() const {
    return static_cast<Eigen::Index>(n_mics_) * filter_len_;
  }

  bool SameShape(const LaggedCorrMatrix& other) const;

  // Throws kNumerical unless the matrix is symmetric to 1e-10 relative
  // Frobenius and its eigenvalues are >= -1e-8 * spectral norm.
  void CheckAutoInvariants() const;

 private:
  Matrix data_;
  int n_mics_;
  int filter_len_;
  int n_targets_;
  CorrKind kind_;
  Eigen::Index window_len_;
};

// [d_1[n..n-I+1], d_2[n..n-I+1], ...]; requires n >= I-1.
Vector StackTaps(const MultichannelSignal& sig, int filter_len,
                 Eigen::Index n);

// Averages over window indices n in [start, start+window_len) with
// n >= I-1, dividing by the number of such indices.
LaggedCorrMatrix EstimateCorrAuto(const MultichannelSignal& sig,
                                  int filter_len, Eigen::Index start,
                                  Eigen::Index window_len);

LaggedCorrMatrix EstimateCorrCross(const MultichannelSignal& mon,
                                   const MultichannelSignal& err,
                                   int filter_len, Eigen::Index start,
                                   Eigen::Index window_len);

// LCM1: "LCM1", u32 M, u32 I, u32 E, u8 kind, f64 row-major payload.
void WriteLcm(const std::filesystem::path& path, const LaggedCorrMatrix& r);
LaggedCorrMatrix ReadLcm(const std::filesystem::path& path);
void WriteMatrixCsv(const std::filesystem::path& path, const Matrix& m);

double SymmetryError(const Matrix& m);
double MinEigenRatio(const Matrix& m);

}  // namespace virtmic
