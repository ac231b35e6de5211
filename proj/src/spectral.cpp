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

#include "spectral.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>
#include <unsupported/Eigen/FFT>

namespace virtmic {

namespace {

struct Segmentation {
  int fft_len;
  Eigen::Index step;
  Eigen::Index count;
  Vector window;
  double scale;  // density normalisation, two-sided
};

Segmentation Plan(Eigen::Index n_samples, double sample_rate, int fft_len,
                  double overlap_frac) {
  if (fft_len < 2) Fail(ErrorCode::kInvalidArgument, "fft_len must be >= 2");
  if (!(overlap_frac >= 0.0 && overlap_frac < 1.0))
    Fail(ErrorCode::kInvalidArgument, "overlap must lie in [0, 1)");
  if (fft_len > n_samples)
    Fail(ErrorCode::kInsufficientSamples,
         fmt::format("fft_len {} exceeds {} samples", fft_len, n_samples));
  Segmentation p;
  p.fft_len = fft_len;
  p.step = std::max<Eigen::Index>(
      1, fft_len - static_cast<Eigen::Index>(std::lround(overlap_frac * fft_len)));
  p.count = 1 + (n_samples - fft_len) / p.step;
  p.window.resize(fft_len);
  for (int k = 0; k < fft_len; ++k)
    p.window(k) = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * k / fft_len);
  p.scale = 1.0 / (sample_rate * p.window.squaredNorm() *
                   static_cast<double>(p.count));
  return p;
}

std::vector<double> BinFreqs(int fft_len, double sample_rate) {
  std::vector<double> f(fft_len / 2 + 1);
  for (std::size_t k = 0; k < f.size(); ++k)
    f[k] = static_cast<double>(k) * sample_rate / fft_len;
  return f;
}

double OneSidedFactor(std::size_t k, int fft_len) {
  const bool edge = k == 0 || (fft_len % 2 == 0 &&
                               k == static_cast<std::size_t>(fft_len / 2));
  return edge ? 1.0 : 2.0;
}

// Windowed spectra of every channel for one segment: channels x bins.
CMatrix SegmentSpectra(const Matrix& x, Eigen::Index start,
                       const Segmentation& p, Eigen::FFT<double>& fft) {
  const Eigen::Index bins = p.fft_len / 2 + 1;
  CMatrix out(x.rows(), bins);
  std::vector<double> in(p.fft_len);
  std::vector<Complex> spec;
  for (Eigen::Index c = 0; c < x.rows(); ++c) {
    for (int k = 0; k < p.fft_len; ++k)
      in[k] = x(c, start + k) * p.window(k);
    fft.fwd(spec, in);
    for (Eigen::Index b = 0; b < bins; ++b) out(c, b) = spec[b];
  }
  return out;
}

}  // namespace

SpectralMatrixSet EstimateCsd(const MultichannelSignal& sig, int fft_len,
                              double overlap_frac) {
  const Segmentation p =
      Plan(sig.length(), sig.sample_rate(), fft_len, overlap_frac);
  SpectralMatrixSet out;
  out.freqs_hz = BinFreqs(fft_len, sig.sample_rate());
  const Eigen::Index m = sig.channels();
  out.mm.assign(out.bins(), CMatrix::Zero(m, m));
  Eigen::FFT<double> fft;
  for (Eigen::Index s = 0; s < p.count; ++s) {
    const CMatrix x = SegmentSpectra(sig.samples(), s * p.step, p, fft);
    for (std::size_t b = 0; b < out.bins(); ++b) {
      const auto col = x.col(static_cast<Eigen::Index>(b));
      out.mm[b].noalias() += col * col.adjoint();
    }
  }
  for (std::size_t b = 0; b < out.bins(); ++b) {
    out.mm[b] *= p.scale * OneSidedFactor(b, fft_len);
    out.mm[b] = 0.5 * (out.mm[b] + out.mm[b].adjoint()).eval();
  }
  return out;
}

SpectralMatrixSet EstimateCsd(const MultichannelSignal& mon,
                              const MultichannelSignal& err, int fft_len,
                              double overlap_frac) {
  if (mon.length() != err.length())
    Fail(ErrorCode::kDimensionMismatch, "monitor/virtual length mismatch");
  const Eigen::Index m = mon.channels();
  const Eigen::Index e = err.channels();
  Matrix joint(m + e, mon.length());
  joint << mon.samples(), err.samples();
  const SpectralMatrixSet all = EstimateCsd(
      MultichannelSignal(std::move(joint), mon.sample_rate()), fft_len,
      overlap_frac);
  SpectralMatrixSet out;
  out.freqs_hz = all.freqs_hz;
  for (const CMatrix& s : all.mm) {
    out.mm.push_back(s.topLeftCorner(m, m));
    out.me.push_back(s.bottomLeftCorner(e, m));
    out.ee.push_back(s.bottomRightCorner(e, e));
  }
  return out;
}

Matrix EstimatePsd(const MultichannelSignal& sig, int fft_len,
                   double overlap_frac, std::vector<double>* freqs) {
  const Segmentation p =
      Plan(sig.length(), sig.sample_rate(), fft_len, overlap_frac);
  const Eigen::Index bins = fft_len / 2 + 1;
  Matrix psd = Matrix::Zero(sig.channels(), bins);
  Eigen::FFT<double> fft;
  for (Eigen::Index s = 0; s < p.count; ++s)
    psd += SegmentSpectra(sig.samples(), s * p.step, p, fft).cwiseAbs2();
  for (Eigen::Index b = 0; b < bins; ++b)
    psd.col(b) *= p.scale * OneSidedFactor(static_cast<std::size_t>(b), fft_len);
  if (freqs) *freqs = BinFreqs(fft_len, sig.sample_rate());
  return psd;
}

double Coherence(const CMatrix& s, Eigen::Index i, Eigen::Index j) {
  const double denom = s(i, i).real() * s(j, j).real();
  if (denom <= 0.0) return 0.0;
  return std::norm(s(i, j)) / denom;
}

double MaxCoherence(const MultichannelSignal& sig, int fft_len) {
  const SpectralMatrixSet s = EstimateCsd(sig, fft_len, 0.5);
  double best = 0.0;
  // Skip DC and Nyquist: a real window leaves them real-valued and biased.
  for (std::size_t b = 1; b + 1 < s.bins(); ++b)
    for (Eigen::Index i = 0; i < sig.channels(); ++i)
      for (Eigen::Index j = i + 1; j < sig.channels(); ++j)
        best = std::max(best, Coherence(s.mm[b], i, j));
  return best;
}

}  // namespace virtmic
