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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "config.hpp"
#include "test_util.hpp"

using namespace virtmic;
using namespace testutil;
using nlohmann::json;

namespace {

const std::filesystem::path kDesk = std::filesystem::path(VIRTMIC_CONFIG_DIR) / "desk_scene.json";

json Desk() { return json::parse(ReadFile(kDesk)); }

// Message of the kConfig error raised by parsing `j`, or "" on success.
std::string ConfigError(const json& j) {
  try {
    ParseConfig(j.dump(2));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfig);
    return e.what();
  }
  return "";
}

bool Mentions(const std::string& msg, const std::string& needle) {
  return msg.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("shipped configurations load") {
  const RunConfig cfg = LoadConfig(kDesk);
  CHECK(cfg.scene.n_sources == 4);
  CHECK(cfg.scene.n_monitor == 3);
  CHECK(cfg.scene.n_virtual == 5);
  CHECK(cfg.scene.sample_rate == 10000.0);
  CHECK(cfg.calibration.filter_len == 12);
  CHECK(cfg.scenario.frame_len == 200);
  CHECK(cfg.scenario.hop() == 100);
  CHECK(cfg.scenario.corr_window == 400);
  CHECK(cfg.scenario.tracker.alpha == Vector::Constant(1, 5.0));
  CHECK(cfg.base_dir == kDesk.parent_path());
  const auto* da = std::get_if<DelayAttenuateModel>(&cfg.scene.ir_model);
  REQUIRE(da != nullptr);
  CHECK(da->sources.size() == 4);
  CHECK(da->sources[0] == Eigen::Vector3d(1.2, -0.9, 0.0));
  REQUIRE(da->tail.has_value());
  CHECK_FALSE(cfg.mismatch.has_value());

  const RunConfig two = LoadConfig(kDesk.parent_path() / "two_source_scene.json");
  CHECK(two.scene.n_sources == 2);
  REQUIRE(two.mismatch.has_value());
  CHECK(two.mismatch->z_true.size() == 2);
}

TEST_CASE("resolved configuration round-trips") {
  for (const char* name : {"desk_scene.json", "two_source_scene.json"}) {
    const RunConfig cfg = LoadConfig(kDesk.parent_path() / name);
    const auto first = ResolvedConfigJson(cfg);
    CHECK(first["schema_version"] == kSchemaVersion);
    const RunConfig again = ParseConfig(first.dump(), cfg.base_dir);
    CHECK(ResolvedConfigJson(again) == first);
  }
  SUBCASE("random-decay and from-files models") {
    json j = Desk();
    j["scene"]["ir_model"] = {{"type", "random_decay"}, {"length", 64}, {"decay_rate", 300},
                              {"seed", 4}};
    const RunConfig rd = ParseConfig(j.dump());
    const auto* m = std::get_if<RandomDecayModel>(&rd.scene.ir_model);
    REQUIRE(m != nullptr);
    CHECK(m->length == 64);
    CHECK(m->seed == 4);
    CHECK(ResolvedConfigJson(ParseConfig(ResolvedConfigJson(rd).dump())) == ResolvedConfigJson(rd));
    j["scene"]["ir_model"] = {{"type", "from_files"}, {"monitor", "m.irt"}, {"virtual", "v.irt"}};
    const RunConfig ff = ParseConfig(j.dump(), "/data");
    CHECK(std::get<FromFilesModel>(ff.scene.ir_model).monitor == "m.irt");
    CHECK(ff.base_dir == "/data");
  }
}

TEST_CASE("defaults fill omitted optional fields") {
  json j = Desk();
  j["scenario"].erase("tracker");
  j["scenario"].erase("fft_len");
  j["calibration"].erase("duration_s");
  const RunConfig cfg = ParseConfig(j.dump());
  CHECK(cfg.scenario.fft_len == 1024);
  CHECK(cfg.calibration.duration_s == 10.0);
  CHECK(cfg.scenario.tracker.iters_per_frame == 1);
  CHECK(cfg.scenario.tracker.solver == Solver::kGradientDescent);
}

TEST_CASE("malformed JSON reports line and column") {
  const std::string text = "{\n  \"schema_version\": 1,\n  \"scene\": {\n    \"n_sources\": 4,,\n  }\n}\n";
  try {
    ParseConfig(text, {}, "bad.json");
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfig);
    CHECK(Mentions(e.what(), "bad.json:4:"));
  }
}

TEST_CASE("validation names the offending field") {
  const std::vector<std::pair<std::function<void(json&)>, std::string>> cases = {
      {[](json& j) { j["scene"]["n_monitors"] = 3; }, "scene.n_monitors"},
      {[](json& j) { j["scenario"]["tracker"]["iters_per_frame"] = 0; }, "iters_per_frame"},
      {[](json& j) { j["scenario"]["overlap"] = 1.0; }, "overlap"},
      {[](json& j) { j["scenario"]["corr_window"] = 50; }, "corr_window"},
      {[](json& j) { j["scenario"]["tracker"]["solver"] = "newton"; }, "solver"},
      {[](json& j) { j["scenario"]["tracker"]["alpha"] = {1, 2}; }, "alpha"},
      {[](json& j) { j["scenario"]["tracker"]["lower"] = 6; }, "lower"},
      {[](json& j) { j["scene"]["n_sources"] = 0; }, "n_sources"},
      {[](json& j) { j["scene"]["n_sources"] = "four"; }, "scene.n_sources"},
      {[](json& j) { j["scene"]["sample_rate"] = -1; }, "sample_rate"},
      {[](json& j) { j["scene"]["ir_model"]["type"] = "image_source"; }, "ir_model.type"},
      {[](json& j) { j["scene"]["ir_model"]["sources"][0] = {1.0}; }, "sources"},
      {[](json& j) { j["scene"]["ir_model"]["monitors"][1] = {1, 2, 3, 4}; }, "monitors"},
      {[](json& j) { j["calibration"].erase("filter_len"); }, "calibration.filter_len"},
      {[](json& j) { j["scenario"]["schedule"] = json::array(); }, "schedule"},
      {[](json& j) { j["scenario"]["schedule"][0]["r"] = {1, 1}; }, "schedule"},
      {[](json& j) { j["schema_version"] = 2; }, "schema_version"},
      {[](json& j) { j.erase("schema_version"); }, "schema_version"},
      {[](json& j) { j["mismatch"] = {{"z_true", {1, 1, 1, 1}}, {"z_used", {1, 1}}}; }, "mismatch"},
  };
  for (const auto& [mutate, field] : cases) {
    json j = Desk();
    mutate(j);
    const std::string msg = ConfigError(j);
    CAPTURE(field);
    CAPTURE(msg);
    CHECK(Mentions(msg, field));
  }
}

TEST_CASE("unreadable file") {
  try {
    LoadConfig("/nonexistent/virtmic.json");
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfig);
  }
}
