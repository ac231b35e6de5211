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

#include "config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace virtmic {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

// Walks one JSON object, remembering its path for diagnostics and
// rejecting keys that were never asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) Fail(ErrorCode::kConfig, fmt::format("{} must be an object", Where()));
  }

  std::string Field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool Has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& Raw(const std::string& key) {
    if (!Has(key)) Fail(ErrorCode::kConfig, fmt::format("{} is required", Field(key)));
    return j_.at(key);
  }

  Section Child(const std::string& key) { return Section(Raw(key), Field(key)); }

  double Number(const std::string& key) {
    const json& v = Raw(key);
    if (!v.is_number())
      Fail(ErrorCode::kConfig, fmt::format("{} must be a number", Field(key)));
    const double d = v.get<double>();
    if (!std::isfinite(d))
      Fail(ErrorCode::kConfig, fmt::format("{} must be finite", Field(key)));
    return d;
  }
  double Number(const std::string& key, double fallback) {
    return Has(key) ? Number(key) : fallback;
  }

  std::int64_t Integer(const std::string& key) {
    const json& v = Raw(key);
    if (!v.is_number_integer())
      Fail(ErrorCode::kConfig, fmt::format("{} must be an integer", Field(key)));
    return v.get<std::int64_t>();
  }
  std::int64_t Integer(const std::string& key, std::int64_t fallback) {
    return Has(key) ? Integer(key) : fallback;
  }

  std::uint64_t Seed(const std::string& key, std::uint64_t fallback) {
    if (!Has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned())
      Fail(ErrorCode::kConfig,
           fmt::format("{} must be a non-negative integer", Field(key)));
    return v.get<std::uint64_t>();
  }

  bool Bool(const std::string& key, bool fallback) {
    if (!Has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean())
      Fail(ErrorCode::kConfig, fmt::format("{} must be true or false", Field(key)));
    return v.get<bool>();
  }

  std::string String(const std::string& key) {
    const json& v = Raw(key);
    if (!v.is_string())
      Fail(ErrorCode::kConfig, fmt::format("{} must be a string", Field(key)));
    return v.get<std::string>();
  }

  Vector Vec(const std::string& key) {
    const json& v = Raw(key);
    if (v.is_number()) return Vector::Constant(1, Number(key));
    if (!v.is_array())
      Fail(ErrorCode::kConfig,
           fmt::format("{} must be a number or an array of numbers", Field(key)));
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number() || !std::isfinite(v[i].get<double>()))
        Fail(ErrorCode::kConfig,
             fmt::format("{}[{}] must be a finite number", Field(key), i));
      out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    return out;
  }
  Vector Vec(const std::string& key, const Vector& fallback) {
    return Has(key) ? Vec(key) : fallback;
  }

  std::vector<Eigen::Vector3d> Points(const std::string& key) {
    const json& v = Raw(key);
    if (!v.is_array())
      Fail(ErrorCode::kConfig, fmt::format("{} must be an array of positions", Field(key)));
    std::vector<Eigen::Vector3d> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const json& p = v[i];
      if (!p.is_array() || p.size() < 2 || p.size() > 3)
        Fail(ErrorCode::kConfig,
             fmt::format("{}[{}] must be [x, y] or [x, y, z] in meters", Field(key), i));
      Eigen::Vector3d q = Eigen::Vector3d::Zero();
      for (std::size_t k = 0; k < p.size(); ++k) {
        if (!p[k].is_number() || !std::isfinite(p[k].get<double>()))
          Fail(ErrorCode::kConfig,
               fmt::format("{}[{}] has a non-finite coordinate", Field(key), i));
        q(static_cast<Eigen::Index>(k)) = p[k].get<double>();
      }
      out.push_back(q);
    }
    return out;
  }

  // Call once every known key has been read.
  void Finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key()))
        Fail(ErrorCode::kConfig, fmt::format("unknown field {}", Field(item.key())));
  }

  std::string Where() const { return path_.empty() ? "configuration" : path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

int ToInt(std::int64_t v, const std::string& field, std::int64_t lo) {
  if (v < lo || v > std::numeric_limits<int>::max())
    Fail(ErrorCode::kConfig, fmt::format("{} must be >= {}", field, lo));
  return static_cast<int>(v);
}

IrModel ParseIrModel(Section s) {
  const std::string type = s.String("type");
  IrModel model;
  if (type == "random_decay") {
    RandomDecayModel m;
    m.length = ToInt(s.Integer("length"), s.Field("length"), 1);
    m.decay_rate = s.Number("decay_rate");
    m.seed = s.Seed("seed", 0);
    m.gain = s.Number("gain", 1.0);
    model = m;
  } else if (type == "delay_attenuate") {
    DelayAttenuateModel m;
    m.sources = s.Points("sources");
    m.monitors = s.Points("monitors");
    m.virtuals = s.Points("virtual");
    m.speed_of_sound = s.Number("speed_of_sound", 343.0);
    m.gain = s.Number("gain", 1.0);
    m.length = ToInt(s.Integer("length", 0), s.Field("length"), 0);
    if (s.Has("tail")) {
      Section t = s.Child("tail");
      DiffuseTail tail;
      tail.gain = t.Number("gain");
      tail.decay_rate = t.Number("decay_rate");
      tail.seed = t.Seed("seed", 0);
      if (tail.decay_rate < 0.0)
        Fail(ErrorCode::kConfig, t.Field("decay_rate") + " must be >= 0");
      t.Finish();
      m.tail = tail;
    }
    model = m;
  } else if (type == "from_files") {
    FromFilesModel m;
    m.monitor = s.String("monitor");
    m.virtual_mics = s.String("virtual");
    model = m;
  } else {
    Fail(ErrorCode::kConfig,
         fmt::format("{} must be one of random_decay, delay_attenuate, from_files "
                     "(got \"{}\")",
                     s.Field("type"), type));
  }
  s.Finish();
  return model;
}

SceneSpec ParseScene(Section s) {
  SceneSpec sc;
  sc.n_sources = ToInt(s.Integer("n_sources"), s.Field("n_sources"), 1);
  sc.n_monitor = ToInt(s.Integer("n_monitor"), s.Field("n_monitor"), 1);
  sc.n_virtual = ToInt(s.Integer("n_virtual"), s.Field("n_virtual"), 1);
  sc.sample_rate = s.Number("sample_rate");
  sc.noise_seed = s.Seed("noise_seed", 0);
  sc.ir_model = ParseIrModel(s.Child("ir_model"));
  s.Finish();
  sc.Validate();
  return sc;
}

TrackerConfig ParseTracker(Section s) {
  TrackerConfig t;
  t.alpha = s.Vec("alpha", t.alpha);
  t.lower = s.Vec("lower", t.lower);
  t.upper = s.Vec("upper", t.upper);
  t.sigma = s.Vec("sigma", t.sigma);
  t.z_init = s.Vec("z_init", t.z_init);
  t.iters_per_frame = ToInt(s.Integer("iters_per_frame", 1), s.Field("iters_per_frame"), 1);
  t.use_eq10_gradient = s.Bool("use_eq10_gradient", false);
  if (s.Has("solver")) {
    const std::string solver = s.String("solver");
    if (solver == "gd")
      t.solver = Solver::kGradientDescent;
    else if (solver == "closed-form")
      t.solver = Solver::kClosedForm;
    else
      Fail(ErrorCode::kConfig,
           fmt::format("{} must be \"gd\" or \"closed-form\"", s.Field("solver")));
  }
  s.Finish();
  return t;
}

ScenarioSpec ParseScenario(Section s, int n_sources) {
  ScenarioSpec sp;
  sp.duration_s = s.Number("duration_s", sp.duration_s);
  sp.frame_len = ToInt(s.Integer("frame_len", sp.frame_len), s.Field("frame_len"), 1);
  sp.overlap_frac = s.Number("overlap", sp.overlap_frac);
  sp.corr_window = ToInt(s.Integer("corr_window", sp.corr_window), s.Field("corr_window"), 1);
  sp.beta = s.Number("beta", sp.beta);
  sp.fft_len = ToInt(s.Integer("fft_len", sp.fft_len), s.Field("fft_len"), 2);
  sp.holdout_frac = s.Number("holdout_frac", sp.holdout_frac);
  if (s.Has("schedule")) {
    const json& arr = s.Raw("schedule");
    if (!arr.is_array() || arr.empty())
      Fail(ErrorCode::kConfig, s.Field("schedule") + " must be a non-empty array");
    std::vector<ScheduleSegment> segs;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Section seg(arr[i], fmt::format("{}[{}]", s.Field("schedule"), i));
      ScheduleSegment out;
      out.start_s = seg.Number("start_s");
      out.r = seg.Vec("r");
      seg.Finish();
      segs.push_back(std::move(out));
    }
    sp.schedule = AmplitudeSchedule(std::move(segs));
  } else {
    sp.schedule = AmplitudeSchedule::Constant(Vector::Ones(n_sources));
  }
  if (s.Has("tracker")) sp.tracker = ParseTracker(s.Child("tracker"));
  s.Finish();
  sp.tracker.Validate(n_sources);
  sp.Validate(n_sources);
  return sp;
}

int LineOf(const std::string& text, std::size_t byte, int* column) {
  int line = 1;
  std::size_t line_start = 0;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') {
      ++line;
      line_start = i + 1;
    }
  *column = static_cast<int>(byte - line_start);
  return line;
}

ojson VecJson(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

ojson PointsJson(const std::vector<Eigen::Vector3d>& pts) {
  ojson out = ojson::array();
  for (const auto& p : pts) out.push_back({p.x(), p.y(), p.z()});
  return out;
}

}  // namespace

RunConfig ParseConfig(const std::string& text, const std::filesystem::path& base_dir,
                      const std::string& source_name) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    int column = 0;
    const int line = LineOf(text, e.byte, &column);
    std::string what = e.what();
    const auto pos = what.find("; ");
    if (pos != std::string::npos) what = what.substr(pos + 2);
    Fail(ErrorCode::kConfig,
         fmt::format("{}:{}:{}: malformed JSON: {}", source_name, line, column, what));
  }
  Section root(j, "");
  const std::int64_t version = root.Integer("schema_version");
  if (version != kSchemaVersion)
    Fail(ErrorCode::kConfig,
         fmt::format("schema_version {} is not supported (expected {})", version,
                     kSchemaVersion));
  RunConfig cfg;
  cfg.base_dir = base_dir;
  cfg.scene = ParseScene(root.Child("scene"));
  {
    Section c = root.Child("calibration");
    cfg.calibration.filter_len = ToInt(c.Integer("filter_len"), c.Field("filter_len"), 1);
    cfg.calibration.duration_s = c.Number("duration_s", cfg.calibration.duration_s);
    if (!(cfg.calibration.duration_s > 0.0))
      Fail(ErrorCode::kConfig, c.Field("duration_s") + " must be > 0");
    cfg.calibration.window = c.Integer("window", 0);
    if (cfg.calibration.window < 0)
      Fail(ErrorCode::kConfig, c.Field("window") + " must be >= 0");
    c.Finish();
  }
  if (root.Has("scenario")) {
    cfg.scenario = ParseScenario(root.Child("scenario"), cfg.scene.n_sources);
  } else {
    cfg.scenario.schedule = AmplitudeSchedule::Constant(Vector::Ones(cfg.scene.n_sources));
  }
  if (root.Has("mismatch")) {
    Section m = root.Child("mismatch");
    MismatchSpec mm;
    mm.duration_s = m.Number("duration_s", mm.duration_s);
    mm.z_true = m.Vec("z_true");
    mm.z_used = m.Vec("z_used");
    m.Finish();
    for (const auto& [name, z] : {std::pair{"z_true", &mm.z_true}, {"z_used", &mm.z_used}}) {
      if (z->size() != cfg.scene.n_sources)
        Fail(ErrorCode::kConfig,
             fmt::format("mismatch.{} has {} entries, expected {}", name, z->size(),
                         cfg.scene.n_sources));
      if ((z->array() < 0.0).any())
        Fail(ErrorCode::kConfig, fmt::format("mismatch.{} must be >= 0", name));
    }
    if (!(mm.duration_s > 0.0))
      Fail(ErrorCode::kConfig, "mismatch.duration_s must be > 0");
    cfg.mismatch = mm;
  }
  root.Finish();
  return cfg;
}

RunConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kConfig, "cannot read configuration file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str(), path.parent_path(), path.string());
}

ojson ResolvedConfigJson(const RunConfig& cfg) {
  ojson scene;
  scene["n_sources"] = cfg.scene.n_sources;
  scene["n_monitor"] = cfg.scene.n_monitor;
  scene["n_virtual"] = cfg.scene.n_virtual;
  scene["sample_rate"] = cfg.scene.sample_rate;
  scene["noise_seed"] = cfg.scene.noise_seed;
  ojson ir;
  if (const auto* rd = std::get_if<RandomDecayModel>(&cfg.scene.ir_model)) {
    ir["type"] = "random_decay";
    ir["length"] = rd->length;
    ir["decay_rate"] = rd->decay_rate;
    ir["seed"] = rd->seed;
    ir["gain"] = rd->gain;
  } else if (const auto* da = std::get_if<DelayAttenuateModel>(&cfg.scene.ir_model)) {
    ir["type"] = "delay_attenuate";
    ir["sources"] = PointsJson(da->sources);
    ir["monitors"] = PointsJson(da->monitors);
    ir["virtual"] = PointsJson(da->virtuals);
    ir["speed_of_sound"] = da->speed_of_sound;
    ir["gain"] = da->gain;
    ir["length"] = da->length;
    if (da->tail)
      ir["tail"] = {{"gain", da->tail->gain},
                    {"decay_rate", da->tail->decay_rate},
                    {"seed", da->tail->seed}};
  } else {
    const auto& ff = std::get<FromFilesModel>(cfg.scene.ir_model);
    ir["type"] = "from_files";
    ir["monitor"] = ff.monitor.string();
    ir["virtual"] = ff.virtual_mics.string();
  }
  scene["ir_model"] = ir;

  const ScenarioSpec& sp = cfg.scenario;
  const TrackerConfig& t = sp.tracker;
  ojson tracker;
  for (const auto& [key, v] : {std::pair{"alpha", &t.alpha}, {"lower", &t.lower},
                               {"upper", &t.upper}, {"sigma", &t.sigma},
                               {"z_init", &t.z_init}})
    if (v->size() > 0) tracker[key] = VecJson(*v);
  tracker["iters_per_frame"] = t.iters_per_frame;
  tracker["use_eq10_gradient"] = t.use_eq10_gradient;
  tracker["solver"] = t.solver == Solver::kClosedForm ? "closed-form" : "gd";
  ojson schedule = ojson::array();
  for (const auto& seg : sp.schedule.segments())
    schedule.push_back({{"start_s", seg.start_s}, {"r", VecJson(seg.r)}});

  ojson out;
  out["schema_version"] = kSchemaVersion;
  out["scene"] = scene;
  out["calibration"] = {{"filter_len", cfg.calibration.filter_len},
                        {"duration_s", cfg.calibration.duration_s},
                        {"window", cfg.calibration.window}};
  out["scenario"] = {{"duration_s", sp.duration_s},
                     {"frame_len", sp.frame_len},
                     {"overlap", sp.overlap_frac},
                     {"corr_window", sp.corr_window},
                     {"beta", sp.beta},
                     {"fft_len", sp.fft_len},
                     {"holdout_frac", sp.holdout_frac},
                     {"schedule", schedule},
                     {"tracker", tracker}};
  if (cfg.mismatch)
    out["mismatch"] = {{"duration_s", cfg.mismatch->duration_s},
                       {"z_true", VecJson(cfg.mismatch->z_true)},
                       {"z_used", VecJson(cfg.mismatch->z_used)}};
  return out;
}

}  // namespace virtmic
