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
#include <vector>

#include "common.hpp"
#include "corr.hpp"
#include "signal.hpp"
#include "spectral.hpp"

namespace virtmic {

enum class FilterDomain : std::uint8_t { kTimeFir = 0, kFrequency = 1 };

// Maps monitoring signals to virtual-microphone estimates. TimeFir holds an
// E x MI matrix whose column m*I + k weights channel m delayed by k;
// Frequency holds an E x M response per bin.
struct ObservationFilter {
  FilterDomain domain = FilterDomain::kTimeFir;
  int n_mics = 0;
  int filter_len = 0;
  int n_targets = 0;
  double sample_rate = 0.0;
  Matrix time_coeffs;
  std::vector<double> freqs_hz;
  std::vector<CMatrix> freq_response;
};

// Responses from the modelled primary sources to each microphone:
// pm is M x N_v, pe is E x N_v, one matrix per bin.
struct TransferMatrixSet {
  std::vector<double> freqs_hz;
  std::vector<CMatrix> pm;
  std::vector<CMatrix> pe;
};

// Solves X * (A + beta I) = B for Hermitian PSD A. Falls back to the
// minimum-norm solution (eigenvalues below 1e-12 * max truncated) when the
// Cholesky factorisation fails or is too poorly conditioned.
Matrix SolveRightSymmetric(const Matrix& a, const Matrix& b, double beta);
CMatrix SolveRightHermitian(const CMatrix& a, const CMatrix& b, double beta);

// O = R_me^T (R_mm + beta I)^-1.
ObservationFilter OfTimeOptimal(const LaggedCorrMatrix& r_mm,
                                const LaggedCorrMatrix& r_me, double beta,
                                double sample_rate = 0.0);

// Per bin O = S_me (S_mm + beta I)^-1.
ObservationFilter OfFreqOptimal(const SpectralMatrixSet& s, double beta);

// Per bin O = P_e S_vv P_m^H (P_m S_vv P_m^H + beta I)^-1.
ObservationFilter OfFreqModel(const TransferMatrixSet& t,
                              const std::vector<CMatrix>& s_vv, double beta);

// d_hat_e[j] = O * StackTaps(mon, I, j + I - 1); n - I + 1 output samples.
MultichannelSignal ApplyOf(const ObservationFilter& of,
                           const MultichannelSignal& mon);

struct ErrorSpectrum {
  std::vector<double> freqs_hz;
  std::vector<double> l_eps_db;
  double broadband_db = 0.0;
};

// 10 log10(tr S_ee_resid / tr S_de_de) per bin and with bin-summed traces.
// Bins with no reference power report +inf.
ErrorSpectrum EstimationErrorSpectrum(const MultichannelSignal& d_e,
                                      const MultichannelSignal& d_e_hat,
                                      int fft_len);

// OBF1: "OBF1", u8 domain, u32 M, u32 I, u32 E, u32 n_bins, f64 sample
// rate, then either E x MI f64 row-major (time) or per bin f64 frequency
// followed by E x M (re, im) f64 pairs row-major (frequency).
void WriteObf(const std::filesystem::path& path, const ObservationFilter& of);
ObservationFilter ReadObf(const std::filesystem::path& path);
void WriteObfCsv(const std::filesystem::path& path, const ObservationFilter& of);
void WriteErrorSpectrumCsv(const std::filesystem::path& path,
                           const ErrorSpectrum& spectrum);

}  // namespace virtmic
