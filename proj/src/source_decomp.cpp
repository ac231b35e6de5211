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

#include "source_decomp.hpp"

#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace virtmic {

CalibrationSet::CalibrationSet(std::vector<LaggedCorrMatrix> autos,
                               std::vector<LaggedCorrMatrix> crosses,
                               double sample_rate,
                               std::vector<std::string> reference_strengths)
    : autos_(std::move(autos)),
      crosses_(std::move(crosses)),
      sample_rate_(sample_rate),
      reference_strengths_(std::move(reference_strengths)) {
  if (autos_.empty()) Fail(ErrorCode::kInvalidArgument, "no calibration sources");
  if (autos_.size() != crosses_.size())
    Fail(ErrorCode::kDimensionMismatch, "auto/cross calibration counts differ");
  if (!(sample_rate_ > 0.0))
    Fail(ErrorCode::kInvalidArgument, "calibration sample rate must be > 0");
  for (std::size_t i = 0; i < autos_.size(); ++i) {
    if (autos_[i].kind() != CorrKind::kMonitorAuto ||
        crosses_[i].kind() != CorrKind::kMonitorCross)
      Fail(ErrorCode::kInvalidArgument, "calibration matrix kinds");
    if (!autos_[i].SameShape(autos_.front()) ||
        !crosses_[i].SameShape(crosses_.front()) ||
        crosses_[i].n_mics() != autos_[i].n_mics() ||
        crosses_[i].filter_len() != autos_[i].filter_len())
      Fail(ErrorCode::kDimensionMismatch,
           fmt::format("calibration source {} has inconsistent dimensions", i + 1));
    autos_[i].CheckAutoInvariants();
  }
  if (reference_strengths_.empty())
    reference_strengths_.assign(autos_.size(), "unit-variance white noise");
  if (reference_strengths_.size() != autos_.size())
    Fail(ErrorCode::kDimensionMismatch, "reference strength count");
}

CalibrationSet Calibrate(const std::vector<SignalPair>& per_source,
                         int filter_len, Eigen::Index window_len) {
  if (per_source.empty())
    Fail(ErrorCode::kInvalidArgument, "no calibration signals");
  const auto& [mon0, err0] = per_source.front();
  std::vector<LaggedCorrMatrix> autos, crosses;
  for (std::size_t i = 0; i < per_source.size(); ++i) {
    const auto& [mon, err] = per_source[i];
    if (mon.channels() != mon0.channels() || err.channels() != err0.channels() ||
        mon.sample_rate() != mon0.sample_rate())
      Fail(ErrorCode::kDimensionMismatch,
           fmt::format("calibration source {} has inconsistent M, E or Fs", i + 1));
    const Eigen::Index w = window_len > 0 ? window_len : mon.length();
    autos.push_back(EstimateCorrAuto(mon, filter_len, 0, w));
    crosses.push_back(EstimateCorrCross(mon, err, filter_len, 0, w));
  }
  return CalibrationSet(std::move(autos), std::move(crosses), mon0.sample_rate());
}

namespace {

LaggedCorrMatrix Superpose(const std::vector<LaggedCorrMatrix>& parts,
                           const Vector& z) {
  if (z.size() != static_cast<Eigen::Index>(parts.size()))
    Fail(ErrorCode::kDimensionMismatch,
         fmt::format("ratio vector has {} entries for {} sources", z.size(),
                     parts.size()));
  if (!z.allFinite()) Fail(ErrorCode::kInvalidArgument, "non-finite ratio");
  const LaggedCorrMatrix& first = parts.front();
  Matrix acc = Matrix::Zero(first.data().rows(), first.data().cols());
  for (std::size_t i = 0; i < parts.size(); ++i)
    acc += z(static_cast<Eigen::Index>(i)) * parts[i].data();
  return LaggedCorrMatrix(std::move(acc), first.n_mics(), first.filter_len(),
                          first.n_targets(), first.kind(), first.window_len());
}

}  // namespace

LaggedCorrMatrix ReconstructAuto(const CalibrationSet& cal, const Vector& z) {
  return Superpose(cal.autos(), z);
}

LaggedCorrMatrix ReconstructCross(const CalibrationSet& cal, const Vector& z) {
  return Superpose(cal.crosses(), z);
}

ObservationFilter OfDecomposed(const CalibrationSet& cal, const Vector& z,
                               double beta) {
  return OfTimeOptimal(ReconstructAuto(cal, z), ReconstructCross(cal, z), beta,
                       cal.sample_rate());
}

ObservationFilter OfDecomposedFreq(
    const std::vector<SpectralMatrixSet>& per_source, const Vector& z,
    double beta) {
  if (per_source.empty())
    Fail(ErrorCode::kInvalidArgument, "no per-source spectra");
  if (z.size() != static_cast<Eigen::Index>(per_source.size()))
    Fail(ErrorCode::kDimensionMismatch, "ratio vector length");
  const SpectralMatrixSet& first = per_source.front();
  SpectralMatrixSet sum;
  sum.freqs_hz = first.freqs_hz;
  for (std::size_t b = 0; b < first.bins(); ++b) {
    sum.mm.push_back(CMatrix::Zero(first.mm[b].rows(), first.mm[b].cols()));
    sum.me.push_back(CMatrix::Zero(first.me[b].rows(), first.me[b].cols()));
  }
  for (std::size_t i = 0; i < per_source.size(); ++i) {
    const SpectralMatrixSet& s = per_source[i];
    if (s.bins() != first.bins() || s.me.size() != s.mm.size())
      Fail(ErrorCode::kDimensionMismatch, "per-source spectra bin grids differ");
    const double w = z(static_cast<Eigen::Index>(i));
    for (std::size_t b = 0; b < s.bins(); ++b) {
      if (s.mm[b].rows() != sum.mm[b].rows() || s.me[b].rows() != sum.me[b].rows())
        Fail(ErrorCode::kDimensionMismatch, "per-source spectra shapes differ");
      sum.mm[b] += w * s.mm[b];
      sum.me[b] += w * s.me[b];
    }
  }
  return OfFreqOptimal(sum, beta);
}

CoherenceDiagnostic SourceCoherence(const MultichannelSignal& sources,
                                    int fft_len) {
  CoherenceDiagnostic d;
  if (sources.channels() < 2) return d;
  d.max_coherence = MaxCoherence(sources, fft_len);
  d.warn = d.max_coherence > 0.2;
  return d;
}

void SaveCalibration(const std::filesystem::path& dir,
                     const CalibrationSet& cal) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["format"] = "virtmic-calibration";
  manifest["schema_version"] = 1;
  manifest["n_sources"] = cal.n_sources();
  manifest["n_mics"] = cal.n_mics();
  manifest["filter_len"] = cal.filter_len();
  manifest["n_targets"] = cal.n_targets();
  manifest["sample_rate"] = cal.sample_rate();
  manifest["window_len"] = cal.window_len();
  manifest["reference_strengths"] = cal.reference_strengths();
  std::vector<std::string> autos, crosses;
  for (int i = 0; i < cal.n_sources(); ++i) {
    autos.push_back(fmt::format("auto_{:02d}.lcm", i + 1));
    crosses.push_back(fmt::format("cross_{:02d}.lcm", i + 1));
    WriteLcm(dir / autos.back(), cal.autos()[static_cast<std::size_t>(i)]);
    WriteLcm(dir / crosses.back(), cal.crosses()[static_cast<std::size_t>(i)]);
  }
  manifest["auto_files"] = autos;
  manifest["cross_files"] = crosses;
  std::ofstream out(dir / "calibration.json");
  out << manifest.dump(2) << '\n';
  if (!out) Fail(ErrorCode::kIo, "cannot write calibration manifest");
}

CalibrationSet LoadCalibration(const std::filesystem::path& dir) {
  std::ifstream in(dir / "calibration.json");
  if (!in)
    Fail(ErrorCode::kIo, "no calibration.json in " + dir.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
    const auto n = manifest.at("n_sources").get<int>();
    const auto autos_f = manifest.at("auto_files").get<std::vector<std::string>>();
    const auto cross_f = manifest.at("cross_files").get<std::vector<std::string>>();
    if (n < 1 || autos_f.size() != static_cast<std::size_t>(n) ||
        cross_f.size() != static_cast<std::size_t>(n))
      Fail(ErrorCode::kFormat, "calibration manifest file lists do not match n_sources");
    const auto window = manifest.value("window_len", Eigen::Index{0});
    std::vector<LaggedCorrMatrix> autos, crosses;
    for (int i = 0; i < n; ++i) {
      const LaggedCorrMatrix a = ReadLcm(dir / autos_f[static_cast<std::size_t>(i)]);
      const LaggedCorrMatrix c = ReadLcm(dir / cross_f[static_cast<std::size_t>(i)]);
      autos.emplace_back(a.data(), a.n_mics(), a.filter_len(), 0, a.kind(), window);
      crosses.emplace_back(c.data(), c.n_mics(), c.filter_len(), c.n_targets(),
                           c.kind(), window);
    }
    std::vector<std::string> refs;
    if (manifest.contains("reference_strengths"))
      refs = manifest["reference_strengths"].get<std::vector<std::string>>();
    CalibrationSet cal(std::move(autos), std::move(crosses),
                       manifest.at("sample_rate").get<double>(), refs);
    if (cal.n_mics() != manifest.at("n_mics").get<int>() ||
        cal.filter_len() != manifest.at("filter_len").get<int>() ||
        cal.n_targets() != manifest.at("n_targets").get<int>())
      Fail(ErrorCode::kFormat, "calibration manifest dims disagree with files");
    return cal;
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kFormat,
         fmt::format("bad calibration manifest in {}: {}", dir.string(), e.what()));
  }
}

}  // namespace virtmic
