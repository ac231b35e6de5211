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

#include "source_track.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "csv.hpp"

namespace virtmic {

namespace {

double Frob(const Matrix& a, const Matrix& b) {
  return a.cwiseProduct(b).sum();
}

void CheckConformable(const LaggedCorrMatrix& r_meas, const CalibrationSet& cal,
                      const Vector& z) {
  if (!r_meas.SameShape(cal.autos().front()))
    Fail(ErrorCode::kDimensionMismatch,
         fmt::format("measured matrix (M={}, I={}) does not match calibration "
                     "(M={}, I={})",
                     r_meas.n_mics(), r_meas.filter_len(), cal.n_mics(),
                     cal.filter_len()));
  if (z.size() != cal.n_sources())
    Fail(ErrorCode::kDimensionMismatch,
         fmt::format("z has {} entries for {} sources", z.size(), cal.n_sources()));
}

Vector Fill(const Vector& v, int n, double dflt) {
  if (v.size() == 0) return Vector::Constant(n, dflt);
  if (v.size() == 1 && n > 1) return Vector::Constant(n, v(0));
  return v;
}

// Per-source penalty derivative term (z-a)h + (z-b)g.
Vector PenaltyTerm(const Vector& z, const TrackerConfig& cfg) {
  const PenaltySwitches s = ComputePenaltySwitches(z, cfg.lower, cfg.upper);
  return (z - cfg.lower).cwiseProduct(s.h) + (z - cfg.upper).cwiseProduct(s.g);
}

}  // namespace

TrackerConfig TrackerConfig::Resolve(const CalibrationSet& cal) const {
  const int n = cal.n_sources();
  TrackerConfig out = *this;
  out.alpha = Fill(alpha, n, 5.0);
  out.lower = Fill(lower, n, 0.0);
  out.upper = Fill(upper, n, 5.0);
  out.z_init = Fill(z_init, n, 0.5);
  if (sigma.size() == 0)
    out.sigma = Vector::Constant(n, 10.0 * GramMatrix(cal).diagonal().maxCoeff());
  else
    out.sigma = Fill(sigma, n, 0.0);
  out.Validate(n);
  return out;
}

void TrackerConfig::Validate(int n) const {
  // Accepts unresolved settings too: empty takes the default, one entry
  // broadcasts.
  auto check_len = [n](const Vector& v, const char* name, double fallback) {
    if (v.size() != n && v.size() > 1)
      Fail(ErrorCode::kConfig,
           fmt::format("tracker.{} has {} entries, expected 1 or {}", name, v.size(), n));
    if (!v.allFinite())
      Fail(ErrorCode::kConfig, fmt::format("tracker.{} must be finite", name));
    return Fill(v, n, fallback);
  };
  const Vector a = check_len(alpha, "alpha", 5.0);
  const Vector lo = check_len(lower, "lower", 0.0);
  const Vector hi = check_len(upper, "upper", 5.0);
  const Vector sg = check_len(sigma, "sigma", 1.0);
  check_len(z_init, "z_init", 0.5);
  if ((a.array() <= 0.0).any())
    Fail(ErrorCode::kConfig, "tracker.alpha must be > 0");
  if ((sg.array() <= 0.0).any())
    Fail(ErrorCode::kConfig, "tracker.sigma must be > 0");
  if ((lo.array() < 0.0).any())
    Fail(ErrorCode::kConfig, "tracker.lower must be >= 0");
  if ((hi.array() < lo.array()).any())
    Fail(ErrorCode::kConfig, "tracker.upper must be >= tracker.lower");
  if (iters_per_frame < 1)
    Fail(ErrorCode::kConfig, "tracker.iters_per_frame must be >= 1");
}

PenaltySwitches ComputePenaltySwitches(const Vector& z, const Vector& lower,
                                       const Vector& upper) {
  if (lower.size() != z.size() || upper.size() != z.size())
    Fail(ErrorCode::kDimensionMismatch, "bound vectors do not match z");
  PenaltySwitches s{Vector::Zero(z.size()), Vector::Zero(z.size())};
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    s.h(i) = z(i) < lower(i) ? 1.0 : 0.0;
    s.g(i) = z(i) > upper(i) ? 1.0 : 0.0;
  }
  return s;
}

double Objective(const LaggedCorrMatrix& r_meas, const CalibrationSet& cal,
                 const Vector& z, const TrackerConfig& cfg) {
  CheckConformable(r_meas, cal, z);
  const Matrix resid = r_meas.data() - ReconstructAuto(cal, z).data();
  const PenaltySwitches s = ComputePenaltySwitches(z, cfg.lower, cfg.upper);
  double q = resid.squaredNorm();
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double lo = z(i) - cfg.lower(i);
    const double hi = z(i) - cfg.upper(i);
    q += cfg.sigma(i) * (s.h(i) * lo * lo + s.g(i) * hi * hi);
  }
  return q;
}

Vector Gradient(const LaggedCorrMatrix& r_meas, const CalibrationSet& cal,
                const Vector& z, const TrackerConfig& cfg) {
  CheckConformable(r_meas, cal, z);
  const Matrix r_hat = ReconstructAuto(cal, z).data();
  const Vector pen = PenaltyTerm(z, cfg);
  Vector grad(z.size());
  for (Eigen::Index n = 0; n < z.size(); ++n) {
    const Matrix& rn = cal.autos()[static_cast<std::size_t>(n)].data();
    // tr{A B^T} is the Frobenius inner product <A, B>.
    const double tr = -Frob(r_meas.data(), rn) + Frob(rn, r_hat);
    grad(n) = 2.0 * tr + 2.0 * cfg.sigma(n) * pen(n);
  }
  return grad;
}

Matrix GramMatrix(const CalibrationSet& cal) {
  const int n = cal.n_sources();
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      a(i, j) = Frob(cal.autos()[static_cast<std::size_t>(i)].data(),
                     cal.autos()[static_cast<std::size_t>(j)].data());
      a(j, i) = a(i, j);
    }
  return a;
}

Vector CrossTraces(const LaggedCorrMatrix& r_meas, const CalibrationSet& cal) {
  CheckConformable(r_meas, cal, Vector::Zero(cal.n_sources()));
  Vector c(cal.n_sources());
  for (int i = 0; i < cal.n_sources(); ++i)
    c(i) = Frob(r_meas.data(), cal.autos()[static_cast<std::size_t>(i)].data());
  return c;
}

double StabilityBound(const CalibrationSet& cal) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(GramMatrix(cal), Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().maxCoeff();
  return lmax > 0.0 ? 1.0 / lmax : std::numeric_limits<double>::infinity();
}

ClosedFormSolution SolveClosedForm(const LaggedCorrMatrix& r_meas,
                                   const CalibrationSet& cal) {
  const Matrix a = GramMatrix(cal);
  const Vector c = CrossTraces(r_meas, cal);
  if (SymmetryError(a) != 0.0)
    Fail(ErrorCode::kNumerical, "Gram matrix lost symmetry");
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().maxCoeff();
  const double lmin = es.eigenvalues().minCoeff();
  ClosedFormSolution out;
  out.condition_number = lmin > 0.0 ? lmax / lmin
                                    : std::numeric_limits<double>::infinity();
  if (!(lmax > 0.0) || out.condition_number > 1e12)
    Fail(ErrorCode::kSingular,
         fmt::format("calibration Gram matrix is singular (condition number "
                     "{:.3g}); use the gradient-descent solver instead",
                     out.condition_number));
  out.z = a.ldlt().solve(c);
  return out;
}

double NormalizedErrorDb(const Matrix& r_true, const Matrix& r_hat) {
  if (r_true.rows() != r_hat.rows() || r_true.cols() != r_hat.cols())
    Fail(ErrorCode::kDimensionMismatch, "normalized error operands differ in shape");
  const double den = r_true.squaredNorm();
  if (!(den > 0.0))
    Fail(ErrorCode::kInvalidArgument, "reference matrix has zero norm");
  return RatioDb((r_true - r_hat).squaredNorm(), den);
}

TrackerState InitialState(const TrackerConfig& resolved) {
  TrackerState s;
  s.z = resolved.z_init;
  return s;
}

namespace {

void Record(TrackerState& state, const LaggedCorrMatrix& r_meas,
            const CalibrationSet& cal, const TrackerConfig& cfg,
            const LaggedCorrMatrix* r_me_ref, double time_s) {
  HistoryEntry h;
  h.frame_index = state.frame_index;
  h.time_s = time_s;
  h.z = state.z;
  h.q = Objective(r_meas, cal, state.z, cfg);
  h.l_mm_db = NormalizedErrorDb(r_meas.data(), ReconstructAuto(cal, state.z).data());
  h.l_me_db = std::numeric_limits<double>::quiet_NaN();
  if (r_me_ref != nullptr && r_me_ref->data().squaredNorm() > 0.0)
    h.l_me_db = NormalizedErrorDb(r_me_ref->data(),
                                  ReconstructCross(cal, state.z).data());
  state.history.push_back(std::move(h));
}

void UpdateConvergence(TrackerState& state, const Vector& previous) {
  const double scale = std::max(previous.norm(), 1e-300);
  if ((state.z - previous).norm() / scale < kConvergenceRelChange)
    ++state.quiet_steps;
  else
    state.quiet_steps = 0;
  if (!state.converged && state.quiet_steps >= kConvergenceSteps) {
    state.converged = true;
    state.converged_frame = state.frame_index;
  }
}

}  // namespace

TrackerState GdStep(TrackerState state, const LaggedCorrMatrix& r_meas,
                    const CalibrationSet& cal, const TrackerConfig& cfg,
                    const LaggedCorrMatrix* r_me_ref, double time_s) {
  CheckConformable(r_meas, cal, state.z);
  if (state.diverged) return state;
  const Vector previous = state.z;
  Vector next;
  if (cfg.solver == Solver::kClosedForm) {
    next = SolveClosedForm(r_meas, cal).z;
  } else if (cfg.use_eq10_gradient) {
    next = state.z - cfg.alpha.cwiseProduct(Gradient(r_meas, cal, state.z, cfg));
  } else {
    // z <- z - alpha { tr{R^(n) R_hat^T - R R^(n)T} + sigma [(z-a)h + (z-b)g] }
    const Matrix r_hat = ReconstructAuto(cal, state.z).data();
    const Vector pen = PenaltyTerm(state.z, cfg);
    next = state.z;
    for (Eigen::Index n = 0; n < state.z.size(); ++n) {
      const Matrix& rn = cal.autos()[static_cast<std::size_t>(n)].data();
      const double tr = Frob(rn, r_hat) - Frob(r_meas.data(), rn);
      next(n) -= cfg.alpha(n) * (tr + cfg.sigma(n) * pen(n));
    }
  }
  if (!next.allFinite() || next.norm() > kDivergenceNorm) {
    state.diverged = true;
    return state;
  }
  state.z = std::move(next);
  UpdateConvergence(state, previous);
  Record(state, r_meas, cal, cfg, r_me_ref, time_s);
  return state;
}

SourceTracker::SourceTracker(const CalibrationSet& cal, const TrackerConfig& cfg)
    : cal_(cal), cfg_(cfg.Resolve(cal)), state_(InitialState(cfg_)) {}

void SourceTracker::PushFrame(const LaggedCorrMatrix& r_mm,
                              const LaggedCorrMatrix* r_me, double time_s) {
  for (int it = 0; it < cfg_.iters_per_frame && !state_.diverged; ++it)
    state_ = GdStep(std::move(state_), r_mm, cal_, cfg_, r_me, time_s);
  ++state_.frame_index;
}

TrackerState Track(const std::vector<Frame>& frames, const CalibrationSet& cal,
                   const TrackerConfig& cfg) {
  SourceTracker tracker(cal, cfg);
  for (const Frame& f : frames) {
    if (tracker.state().diverged) break;
    tracker.PushFrame(f.r_mm, f.r_me ? &*f.r_me : nullptr, f.time_s);
  }
  return tracker.state();
}

void WriteHistoryCsv(const std::filesystem::path& path,
                     const TrackerState& state) {
  CsvWriter csv(path);
  std::vector<std::string> cols = {"frame_index", "time_s"};
  const Eigen::Index n = state.z.size();
  for (Eigen::Index i = 0; i < n; ++i) cols.push_back(fmt::format("z_{}", i + 1));
  cols.insert(cols.end(), {"Q", "L_mm_db", "L_me_db"});
  csv.Header(cols);
  for (const HistoryEntry& h : state.history) {
    std::vector<std::string> row = {CsvWriter::Cell(h.frame_index),
                                    CsvWriter::Cell(h.time_s)};
    for (Eigen::Index i = 0; i < h.z.size(); ++i) row.push_back(CsvWriter::Cell(h.z(i)));
    row.push_back(CsvWriter::Cell(h.q));
    row.push_back(CsvWriter::Cell(h.l_mm_db));
    row.push_back(CsvWriter::Cell(h.l_me_db));
    csv.RawRow(row);
  }
  csv.Close();
}

}  // namespace virtmic
