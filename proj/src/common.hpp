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

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace virtmic {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

// Numeric values mirror the public vm_status codes.
enum class ErrorCode {
  kInvalidArgument = 1,
  kConfig = 2,
  kDimensionMismatch = 3,
  kDivergence = 4,
  kInsufficientSamples = 5,
  kIndexOutOfRange = 6,
  kSingular = 7,
  kNumerical = 8,
  kIo = 9,
  kFormat = 10,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

// Sentinel reported in place of -inf dB (exact match / zero residual).
inline constexpr double kMinusInfDb = -300.0;

// 10*log10(num/den) with the -inf sentinel; +inf when den is zero.
double RatioDb(double num, double den);

}  // namespace virtmic
