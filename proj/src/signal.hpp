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

#include <filesystem>
#include <string>
#include <vector>

#include "common.hpp"

namespace virtmic {

// A block of real samples, one row per channel, at a fixed sample rate.
class MultichannelSignal {
 public:
  MultichannelSignal(Matrix samples, double sample_rate,
                     std::vector<std::string> labels = {});

  Eigen::Index channels() const { return samples_.rows(); }
  Eigen::Index length() const { return samples_.cols(); }
  double sample_rate() const { return sample_rate_; }
  const Matrix& samples() const { return samples_; }
  const std::vector<std::string>& labels() const { return labels_; }

  // Samples [start, start + count) of every channel.
  MultichannelSignal Slice(Eigen::Index start, Eigen::Index count) const;

 private:
  Matrix samples_;
  double sample_rate_;
  std::vector<std::string> labels_;
};

enum class WavEncoding { kPcm16, kPcm24, kFloat32 };

MultichannelSignal ReadWav(const std::filesystem::path& path);
void WriteWav(const std::filesystem::path& path, const MultichannelSignal& sig,
              WavEncoding encoding = WavEncoding::kFloat32);

// One column per channel, header row of channel labels. CSV carries no
// sample rate, so the caller supplies it.
MultichannelSignal ReadSignalCsv(const std::filesystem::path& path,
                                 double sample_rate);
void WriteSignalCsv(const std::filesystem::path& path,
                    const MultichannelSignal& sig);

// Dispatches on extension (.wav / .csv).
MultichannelSignal LoadSignal(const std::filesystem::path& path,
                              double csv_sample_rate);

}  // namespace virtmic
