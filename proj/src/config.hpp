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
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "acoustic_sim.hpp"

namespace virtmic {

inline constexpr int kSchemaVersion = 1;

struct MismatchSpec {
  double duration_s = 10.0;
  Vector z_true;
  Vector z_used;
};

// Everything one configuration file describes. `base_dir` is the directory
// of the file, used to resolve relative IR paths.
struct RunConfig {
  SceneSpec scene;
  CalibrationSpec calibration;
  ScenarioSpec scenario;
  std::optional<MismatchSpec> mismatch;
  std::filesystem::path base_dir;
};

// Throws kConfig with the offending field path, or the line and column for
// malformed JSON.
RunConfig ParseConfig(const std::string& text,
                      const std::filesystem::path& base_dir = {},
                      const std::string& source_name = "<config>");
RunConfig LoadConfig(const std::filesystem::path& path);

// Fully resolved configuration in the input schema; parses back to an
// equivalent RunConfig.
nlohmann::ordered_json ResolvedConfigJson(const RunConfig& cfg);

}  // namespace virtmic
