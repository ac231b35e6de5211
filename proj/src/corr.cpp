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

#include "corr.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>

#include "binary_io.hpp"

namespace virtmic {

LaggedCorrMatrix::LaggedCorrMatrix(Matrix data, int n_mics, int filter_len,
                                   int n_targets, CorrKind kind,
                                   Eigen::Index window_len)
    : data_(std::move(data)),
      n_mics_(n_mics),
      filter_len_(filter_len),
      n_targets_(n_targets),
      kind_(kind),
      window_len_(window_len) {
  if (n_mics_ < 1 || filter_len_ < 1)
    Fail(ErrorCode::kInvalidArgument, "M and I must be >= 1");
  const Eigen::Index mi = stacked_dim();
  const Eigen::Index cols = kind_ == CorrKind::kMonitorAuto ? mi : n_targets_;
  if (kind_ == CorrKind::kMonitorAuto && n_targets_ != 0)
    Fail(ErrorCode::kInvalidArgument, "auto matrix must have E = 0");
  if (kind_ == CorrKind::kMonitorCross && n_targets_ < 1)
    Fail(ErrorCode::kInvalidArgument, "cross matrix needs E >= 1");
  if (data_.rows() != mi || data_.cols() != cols)
    Fail(ErrorCode::kDimensionMismatch,
         fmt::format("correlation data is {}x{}, expected {}x{}", data_.rows(),
                     data_.cols(), mi, cols));
}

bool LaggedCorrMatrix::SameShape(const LaggedCorrMatrix& o) const {
  return n_mics_ == o.n_mics_ && filter_len_ == o.filter_len_ &&
         n_targets_ == o.n_targets_ && kind_ == o.kind_;
}

double SymmetryError(const Matrix& m) {
  const double norm = m.norm();
  if (norm == 0.0) return 0.0;
  return (m - m.transpose()).norm() / norm;
}

double MinEigenRatio(const Matrix& m) {
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();
  const double spectral = ev.cwiseAbs().maxCoeff();
  if (spectral == 0.0) return 0.0;
  return ev.minCoeff() / spectral;
}

void LaggedCorrMatrix::CheckAutoInvariants() const {
  if (kind_ != CorrKind::kMonitorAuto) return;
  if (!data_.allFinite())
    Fail(ErrorCode::kNumerical, "correlation matrix has non-finite entries");
  const double asym = SymmetryError(data_);
  if (asym > 1e-10)
    Fail(ErrorCode::kNumerical,
         fmt::format("auto matrix not symmetric (rel err {:.3g})", asym));
  const double min_ratio = MinEigenRatio(data_);
  if (min_ratio < -1e-8)
    Fail(ErrorCode::kNumerical,
         fmt::format("auto matrix not PSD (min eig ratio {:.3g})", min_ratio));
}

Vector StackTaps(const MultichannelSignal& sig, int filter_len,
                 Eigen::Index n) {
  if (filter_len < 1) Fail(ErrorCode::kInvalidArgument, "I must be >= 1");
  if (n < filter_len - 1 || n >= sig.length())
    Fail(ErrorCode::kIndexOutOfRange,
         fmt::format("stack index {} outside [{}, {})", n, filter_len - 1,
                     sig.length()));
  Vector x(sig.channels() * filter_len);
  for (Eigen::Index c = 0; c < sig.channels(); ++c)
    for (int k = 0; k < filter_len; ++k)
      x(c * filter_len + k) = sig.samples()(c, n - k);
  return x;
}

namespace {

constexpr Eigen::Index kChunk = 4096;

struct ValidRange {
  Eigen::Index lo;
  Eigen::Index hi;
};

ValidRange CheckWindow(const MultichannelSignal& sig, int filter_len,
                       Eigen::Index start, Eigen::Index window_len) {
  if (filter_len < 1) Fail(ErrorCode::kInvalidArgument, "I must be >= 1");
  if (start < 0 || window_len < filter_len ||
      start + window_len > sig.length())
    Fail(ErrorCode::kInsufficientSamples,
         fmt::format("window [{}, {}) with I={} does not fit {} samples",
                     start, start + window_len, filter_len, sig.length()));
  return {std::max<Eigen::Index>(start, filter_len - 1), start + window_len};
}

// Stacked-tap block for indices [lo, lo+count).
void FillStacked(const MultichannelSignal& sig, int filter_len,
                 Eigen::Index lo, Eigen::Index count, Matrix& x) {
  x.resize(sig.channels() * filter_len, count);
  for (Eigen::Index c = 0; c < sig.channels(); ++c)
    for (int k = 0; k < filter_len; ++k)
      x.row(c * filter_len + k) = sig.samples().row(c).segment(lo - k, count);
}

}  // namespace

LaggedCorrMatrix EstimateCorrAuto(const MultichannelSignal& sig,
                                  int filter_len, Eigen::Index start,
                                  Eigen::Index window_len) {
  const auto [lo, hi] = CheckWindow(sig, filter_len, start, window_len);
  const Eigen::Index mi = sig.channels() * filter_len;
  Matrix acc = Matrix::Zero(mi, mi);
  Matrix x;
  for (Eigen::Index s = lo; s < hi; s += kChunk) {
    const Eigen::Index count = std::min(kChunk, hi - s);
    FillStacked(sig, filter_len, s, count, x);
    acc.selfadjointView<Eigen::Lower>().rankUpdate(x);
  }
  acc.triangularView<Eigen::StrictlyUpper>() = acc.transpose();
  acc /= static_cast<double>(hi - lo);
  return LaggedCorrMatrix(std::move(acc), static_cast<int>(sig.channels()),
                          filter_len, 0, CorrKind::kMonitorAuto, window_len);
}

LaggedCorrMatrix EstimateCorrCross(const MultichannelSignal& mon,
                                   const MultichannelSignal& err,
                                   int filter_len, Eigen::Index start,
                                   Eigen::Index window_len) {
  if (mon.length() != err.length())
    Fail(ErrorCode::kDimensionMismatch,
         fmt::format("monitor length {} != virtual length {}", mon.length(),
                     err.length()));
  if (mon.sample_rate() != err.sample_rate())
    Fail(ErrorCode::kDimensionMismatch, "sample rates differ");
  const auto [lo, hi] = CheckWindow(mon, filter_len, start, window_len);
  const Eigen::Index mi = mon.channels() * filter_len;
  Matrix acc = Matrix::Zero(mi, err.channels());
  Matrix x;
  for (Eigen::Index s = lo; s < hi; s += kChunk) {
    const Eigen::Index count = std::min(kChunk, hi - s);
    FillStacked(mon, filter_len, s, count, x);
    acc.noalias() += x * err.samples().middleCols(s, count).transpose();
  }
  acc /= static_cast<double>(hi - lo);
  return LaggedCorrMatrix(std::move(acc), static_cast<int>(mon.channels()),
                          filter_len, static_cast<int>(err.channels()),
                          CorrKind::kMonitorCross, window_len);
}

void WriteLcm(const std::filesystem::path& path, const LaggedCorrMatrix& r) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path.string());
  ByteWriter w(out);
  w.Tag("LCM1");
  w.U32(static_cast<std::uint32_t>(r.n_mics()));
  w.U32(static_cast<std::uint32_t>(r.filter_len()));
  w.U32(static_cast<std::uint32_t>(r.n_targets()));
  w.U8(static_cast<std::uint8_t>(r.kind()));
  for (Eigen::Index i = 0; i < r.data().rows(); ++i)
    for (Eigen::Index j = 0; j < r.data().cols(); ++j) w.F64(r.data()(i, j));
  if (!out) Fail(ErrorCode::kIo, "write failed: " + path.string());
}

LaggedCorrMatrix ReadLcm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path.string());
  ByteReader r(in, path.string());
  if (r.Tag() != "LCM1") Fail(ErrorCode::kFormat, "bad LCM1 magic");
  const auto m = static_cast<int>(r.U32());
  const auto taps = static_cast<int>(r.U32());
  const auto e = static_cast<int>(r.U32());
  const std::uint8_t kind_byte = r.U8();
  if (kind_byte > 1) Fail(ErrorCode::kFormat, "bad LCM1 kind byte");
  const auto kind = static_cast<CorrKind>(kind_byte);
  if (m < 1 || taps < 1 || m > 1 << 16 || taps > 1 << 16 || e > 1 << 16)
    Fail(ErrorCode::kFormat, "implausible LCM1 dimensions");
  const Eigen::Index rows = static_cast<Eigen::Index>(m) * taps;
  const Eigen::Index cols = kind == CorrKind::kMonitorAuto ? rows : e;
  Matrix data(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) data(i, j) = r.F64();
  return LaggedCorrMatrix(std::move(data), m, taps, e, kind);
}

void WriteMatrixCsv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path.string());
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    out << (j ? "," : "") << "c" << j;
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out << (j ? "," : "") << fmt::format("{:.17g}", m(i, j));
    out << '\n';
  }
}

}  // namespace virtmic
