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

#include "common.hpp"

#include <cmath>
#include <limits>

namespace virtmic {

double RatioDb(double num, double den) {
  if (den <= 0.0) return std::numeric_limits<double>::infinity();
  if (num <= 0.0) return kMinusInfDb;
  return std::max(kMinusInfDb, 10.0 * std::log10(num / den));
}

}  // namespace virtmic
