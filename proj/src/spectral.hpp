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

#include <optional>
#include <vector>

#include "common.hpp"
#include "signal.hpp"

namespace virtmic {

// Per-bin spectral density matrices with the convention S_xy = E[y x^H]:
// mm is M x M, me is E x M, ee is E x E.
struct SpectralMatrixSet {
  std::vector<double> freqs_hz;
  std::vector<CMatrix> mm;
  std::vector<CMatrix> me;
  std::vector<CMatrix> ee;
  std::vector<CMatrix> vv;

  std::size_t bins() const { return freqs_hz.size(); }
};

// Hann-windowed averaged periodogram, one-sided density scaling so that
// summing a channel's PSD times the bin width recovers its variance.
SpectralMatrixSet EstimateCsd(const MultichannelSignal& sig, int fft_len,
                              double overlap_frac);

// Joint estimate: fills mm from `mon`, me and ee from `err`.
SpectralMatrixSet EstimateCsd(const MultichannelSignal& mon,
                              const MultichannelSignal& err, int fft_len,
                              double overlap_frac);

// Auto spectra only, channels x bins.
Matrix EstimatePsd(const MultichannelSignal& sig, int fft_len,
                   double overlap_frac, std::vector<double>* freqs = nullptr);

// Magnitude-squared coherence between channels i and j of a bin's matrix.
double Coherence(const CMatrix& s, Eigen::Index i, Eigen::Index j);

// Largest magnitude-squared coherence over all bins and distinct channel
// pairs of `sig`.
double MaxCoherence(const MultichannelSignal& sig, int fft_len);

}  // namespace virtmic
