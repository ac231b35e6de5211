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

#include "rmt_filter.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "binary_io.hpp"
#include "csv.hpp"

namespace virtmic {

namespace {

template <typename Mat>
Mat SolveRight(const Mat& a, const Mat& b, double beta) {
  if (a.rows() != a.cols() || b.cols() != a.rows())
    Fail(ErrorCode::kDimensionMismatch,
         fmt::format("cannot solve X*A = B with A {}x{}, B {}x{}", a.rows(),
                     a.cols(), b.rows(), b.cols()));
  if (!(beta >= 0.0)) Fail(ErrorCode::kInvalidArgument, "beta must be >= 0");
  Mat reg = a;
  reg.diagonal().array() += beta;
  // X * A = B  <=>  A^H X^H = B^H, and A is Hermitian.
  const Mat rhs = b.adjoint();
  Mat xh;
  Eigen::LLT<Mat> llt(reg);
  if (llt.info() == Eigen::Success && llt.rcond() >= 1e-12) {
    xh = llt.solve(rhs);
  } else {
    Eigen::SelfAdjointEigenSolver<Mat> es(reg);
    if (es.info() != Eigen::Success)
      Fail(ErrorCode::kNumerical, "eigendecomposition did not converge");
    const auto& ev = es.eigenvalues();
    const double cutoff = 1e-12 * ev.cwiseAbs().maxCoeff();
    Vector inv(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      inv(i) = std::abs(ev(i)) > cutoff ? 1.0 / ev(i) : 0.0;
    xh = es.eigenvectors() *
         (inv.asDiagonal() * (es.eigenvectors().adjoint() * rhs));
  }
  if (!xh.allFinite()) Fail(ErrorCode::kNumerical, "filter solve produced NaN");
  return xh.adjoint();
}

}  // namespace

Matrix SolveRightSymmetric(const Matrix& a, const Matrix& b, double beta) {
  return SolveRight<Matrix>(a, b, beta);
}

CMatrix SolveRightHermitian(const CMatrix& a, const CMatrix& b, double beta) {
  return SolveRight<CMatrix>(a, b, beta);
}

ObservationFilter OfTimeOptimal(const LaggedCorrMatrix& r_mm,
                                const LaggedCorrMatrix& r_me, double beta,
                                double sample_rate) {
  if (r_mm.kind() != CorrKind::kMonitorAuto ||
      r_me.kind() != CorrKind::kMonitorCross)
    Fail(ErrorCode::kInvalidArgument, "expected auto and cross matrices");
  if (r_mm.n_mics() != r_me.n_mics() || r_mm.filter_len() != r_me.filter_len())
    Fail(ErrorCode::kDimensionMismatch,
         fmt::format("auto matrix (M={}, I={}) vs cross matrix (M={}, I={})",
                     r_mm.n_mics(), r_mm.filter_len(), r_me.n_mics(),
                     r_me.filter_len()));
  ObservationFilter of;
  of.domain = FilterDomain::kTimeFir;
  of.n_mics = r_mm.n_mics();
  of.filter_len = r_mm.filter_len();
  of.n_targets = r_me.n_targets();
  of.sample_rate = sample_rate;
  of.time_coeffs =
      SolveRightSymmetric(r_mm.data(), r_me.data().transpose(), beta);
  return of;
}

ObservationFilter OfFreqOptimal(const SpectralMatrixSet& s, double beta) {
  if (s.me.size() != s.mm.size() || s.mm.empty())
    Fail(ErrorCode::kDimensionMismatch, "spectral set lacks cross spectra");
  ObservationFilter of;
  of.domain = FilterDomain::kFrequency;
  of.n_mics = static_cast<int>(s.mm[0].rows());
  of.filter_len = 1;
  of.n_targets = static_cast<int>(s.me[0].rows());
  of.freqs_hz = s.freqs_hz;
  if (s.freqs_hz.size() >= 2)
    of.sample_rate = 2.0 * s.freqs_hz.back();
  of.freq_response.resize(s.mm.size());
  for (std::size_t b = 0; b < s.mm.size(); ++b)
    of.freq_response[b] = SolveRightHermitian(s.mm[b], s.me[b], beta);
  return of;
}

ObservationFilter OfFreqModel(const TransferMatrixSet& t,
                              const std::vector<CMatrix>& s_vv, double beta) {
  if (t.pm.size() != t.pe.size() || t.pm.size() != s_vv.size() ||
      t.pm.empty())
    Fail(ErrorCode::kDimensionMismatch, "transfer/source spectra bin counts");
  SpectralMatrixSet s;
  s.freqs_hz = t.freqs_hz;
  for (std::size_t b = 0; b < t.pm.size(); ++b) {
    const CMatrix& pm = t.pm[b];
    const CMatrix& pe = t.pe[b];
    if (pm.cols() != s_vv[b].rows() || pe.cols() != s_vv[b].rows() ||
        s_vv[b].rows() != s_vv[b].cols())
      Fail(ErrorCode::kDimensionMismatch,
           fmt::format("bin {}: P_m {}x{}, P_e {}x{}, S_vv {}x{}", b,
                       pm.rows(), pm.cols(), pe.rows(), pe.cols(),
                       s_vv[b].rows(), s_vv[b].cols()));
    const CMatrix sv_pmh = s_vv[b] * pm.adjoint();
    s.mm.push_back(pm * sv_pmh);
    s.me.push_back(pe * sv_pmh);
  }
  ObservationFilter of = OfFreqOptimal(s, beta);
  of.freqs_hz = t.freqs_hz;
  return of;
}

MultichannelSignal ApplyOf(const ObservationFilter& of,
                           const MultichannelSignal& mon) {
  if (of.domain != FilterDomain::kTimeFir)
    Fail(ErrorCode::kInvalidArgument, "only time-domain filters apply to signals");
  if (mon.channels() != of.n_mics)
    Fail(ErrorCode::kDimensionMismatch,
         fmt::format("filter expects {} monitoring channels, got {}",
                     of.n_mics, mon.channels()));
  const int taps = of.filter_len;
  if (mon.length() < taps)
    Fail(ErrorCode::kInsufficientSamples, "signal shorter than filter");
  const Eigen::Index out_len = mon.length() - taps + 1;
  Matrix y = Matrix::Zero(of.n_targets, out_len);
  for (int c = 0; c < of.n_mics; ++c)
    for (int k = 0; k < taps; ++k)
      y.noalias() += of.time_coeffs.col(c * taps + k) *
                     mon.samples().row(c).segment(taps - 1 - k, out_len);
  return MultichannelSignal(std::move(y), mon.sample_rate());
}

ErrorSpectrum EstimationErrorSpectrum(const MultichannelSignal& d_e,
                                      const MultichannelSignal& d_e_hat,
                                      int fft_len) {
  if (d_e.length() != d_e_hat.length() || d_e.channels() != d_e_hat.channels())
    Fail(ErrorCode::kDimensionMismatch,
         fmt::format("reference {}x{} vs estimate {}x{}", d_e.channels(),
                     d_e.length(), d_e_hat.channels(), d_e_hat.length()));
  const MultichannelSignal resid(d_e.samples() - d_e_hat.samples(),
                                 d_e.sample_rate());
  ErrorSpectrum out;
  const Matrix p_ref = EstimatePsd(d_e, fft_len, 0.5, &out.freqs_hz);
  const Matrix p_res = EstimatePsd(resid, fft_len, 0.5);
  const Vector tr_ref = p_ref.colwise().sum();
  const Vector tr_res = p_res.colwise().sum();
  out.l_eps_db.resize(out.freqs_hz.size());
  for (Eigen::Index b = 0; b < tr_ref.size(); ++b)
    out.l_eps_db[static_cast<std::size_t>(b)] = RatioDb(tr_res(b), tr_ref(b));
  out.broadband_db = RatioDb(tr_res.sum(), tr_ref.sum());
  return out;
}

void WriteObf(const std::filesystem::path& path, const ObservationFilter& of) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path.string());
  ByteWriter w(out);
  w.Tag("OBF1");
  w.U8(static_cast<std::uint8_t>(of.domain));
  w.U32(static_cast<std::uint32_t>(of.n_mics));
  w.U32(static_cast<std::uint32_t>(of.filter_len));
  w.U32(static_cast<std::uint32_t>(of.n_targets));
  w.U32(static_cast<std::uint32_t>(of.freq_response.size()));
  w.F64(of.sample_rate);
  if (of.domain == FilterDomain::kTimeFir) {
    for (Eigen::Index i = 0; i < of.time_coeffs.rows(); ++i)
      for (Eigen::Index j = 0; j < of.time_coeffs.cols(); ++j)
        w.F64(of.time_coeffs(i, j));
  } else {
    for (std::size_t b = 0; b < of.freq_response.size(); ++b) {
      w.F64(of.freqs_hz[b]);
      const CMatrix& h = of.freq_response[b];
      for (Eigen::Index i = 0; i < h.rows(); ++i)
        for (Eigen::Index j = 0; j < h.cols(); ++j) {
          w.F64(h(i, j).real());
          w.F64(h(i, j).imag());
        }
    }
  }
  if (!out) Fail(ErrorCode::kIo, "write failed: " + path.string());
}

ObservationFilter ReadObf(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path.string());
  ByteReader r(in, path.string());
  if (r.Tag() != "OBF1") Fail(ErrorCode::kFormat, "bad OBF1 magic");
  ObservationFilter of;
  const std::uint8_t domain = r.U8();
  if (domain > 1) Fail(ErrorCode::kFormat, "bad OBF1 domain byte");
  of.domain = static_cast<FilterDomain>(domain);
  of.n_mics = static_cast<int>(r.U32());
  of.filter_len = static_cast<int>(r.U32());
  of.n_targets = static_cast<int>(r.U32());
  const std::uint32_t bins = r.U32();
  of.sample_rate = r.F64();
  if (of.n_mics < 1 || of.filter_len < 1 || of.n_targets < 1 ||
      of.n_mics > 1 << 16 || of.filter_len > 1 << 16 || of.n_targets > 1 << 16)
    Fail(ErrorCode::kFormat, "implausible OBF1 dimensions");
  if (of.domain == FilterDomain::kTimeFir) {
    of.time_coeffs.resize(of.n_targets,
                          static_cast<Eigen::Index>(of.n_mics) * of.filter_len);
    for (Eigen::Index i = 0; i < of.time_coeffs.rows(); ++i)
      for (Eigen::Index j = 0; j < of.time_coeffs.cols(); ++j)
        of.time_coeffs(i, j) = r.F64();
  } else {
    for (std::uint32_t b = 0; b < bins; ++b) {
      of.freqs_hz.push_back(r.F64());
      CMatrix h(of.n_targets, of.n_mics);
      for (Eigen::Index i = 0; i < h.rows(); ++i)
        for (Eigen::Index j = 0; j < h.cols(); ++j) {
          const double re = r.F64();
          h(i, j) = Complex(re, r.F64());
        }
      of.freq_response.push_back(std::move(h));
    }
  }
  return of;
}

void WriteObfCsv(const std::filesystem::path& path,
                 const ObservationFilter& of) {
  CsvWriter csv(path);
  if (of.domain == FilterDomain::kTimeFir) {
    csv.Header({"target", "mic", "tap", "coefficient"});
    for (int e = 0; e < of.n_targets; ++e)
      for (int m = 0; m < of.n_mics; ++m)
        for (int k = 0; k < of.filter_len; ++k)
          csv.Row(e + 1, m + 1, k, of.time_coeffs(e, m * of.filter_len + k));
  } else {
    csv.Header({"frequency_hz", "target", "mic", "re", "im"});
    for (std::size_t b = 0; b < of.freq_response.size(); ++b)
      for (int e = 0; e < of.n_targets; ++e)
        for (int m = 0; m < of.n_mics; ++m)
          csv.Row(of.freqs_hz[b], e + 1, m + 1,
                  of.freq_response[b](e, m).real(),
                  of.freq_response[b](e, m).imag());
  }
  csv.Close();
}

void WriteErrorSpectrumCsv(const std::filesystem::path& path,
                           const ErrorSpectrum& spectrum) {
  CsvWriter csv(path);
  csv.Header({"frequency_hz", "L_eps_db"});
  for (std::size_t b = 0; b < spectrum.freqs_hz.size(); ++b)
    csv.Row(spectrum.freqs_hz[b], spectrum.l_eps_db[b]);
  csv.Close();
}

}  // namespace virtmic
