#include "phomo/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace phomo {
namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::kConfigError, what); }

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) config_error(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) config_error("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

const char* mode_name(PipelineMode m) { return m == PipelineMode::kSynthetic ? "synthetic" : "bundle"; }
const char* unit_name(AngleUnit u) { return u == AngleUnit::kDegrees ? "degrees" : "radians"; }

json noise_json(const NoiseModel& n) {
  return {{"pixel_sigma", n.pixel_sigma}, {"brightness_sigma", n.brightness_sigma}, {"sun_sigma", n.sun_sigma}};
}

void noise_from(const json& j, NoiseModel& n, const std::string& where) {
  check_keys(j, where, {"pixel_sigma", "brightness_sigma", "sun_sigma"});
  read(j, "pixel_sigma", n.pixel_sigma);
  read(j, "brightness_sigma", n.brightness_sigma);
  read(j, "sun_sigma", n.sun_sigma);
}

json scene_json(const SceneSpec& s) {
  json craters = json::array(), domes = json::array(), ridges = json::array(), patches = json::array();
  for (const auto& c : s.terrain.craters) craters.push_back({c.x, c.y, c.radius, c.depth});
  for (const auto& d : s.terrain.domes) domes.push_back({d.x, d.y, d.radius, d.height});
  for (const auto& r : s.terrain.ridges) ridges.push_back({r.x, r.y, r.azimuth_deg, r.width, r.height});
  for (const auto& p : s.patches) patches.push_back({p.x, p.y, p.radius, p.value});
  return {{"grid", s.grid},
          {"extent", s.extent},
          {"jitter", s.jitter},
          {"slope_x", s.terrain.slope_x},
          {"slope_y", s.terrain.slope_y},
          {"craters", craters},
          {"domes", domes},
          {"ridges", ridges},
          {"random_craters", s.random_craters},
          {"random_domes", s.random_domes},
          {"random_ridges", s.random_ridges},
          {"albedo_base", s.albedo_base},
          {"patches", patches},
          {"random_bright_patches", s.random_bright_patches},
          {"random_dark_patches", s.random_dark_patches},
          {"bright_albedo", s.bright_albedo},
          {"dark_albedo", s.dark_albedo},
          {"num_cameras", s.num_cameras},
          {"camera_distance", s.camera_distance},
          {"off_nadir_min_deg", s.off_nadir_min_deg},
          {"off_nadir_max_deg", s.off_nadir_max_deg},
          {"arc_start_deg", s.arc_start_deg},
          {"arc_span_deg", s.arc_span_deg},
          {"image_width", s.image_width},
          {"image_height", s.image_height},
          {"focal", s.focal},
          {"sun_azimuth_min_deg", s.sun_azimuth_min_deg},
          {"sun_azimuth_max_deg", s.sun_azimuth_max_deg},
          {"sun_elevation_min_deg", s.sun_elevation_min_deg},
          {"sun_elevation_max_deg", s.sun_elevation_max_deg},
          {"phase_min_deg", s.phase_min_deg},
          {"phase_max_deg", s.phase_max_deg},
          {"model", std::string(model_kind_name(s.model))},
          {"body", std::string(body_name(s.body))},
          {"calibrated", s.calibrated},
          {"scale_min", s.scale_min},
          {"scale_max", s.scale_max},
          {"bias_min", s.bias_min},
          {"bias_max", s.bias_max},
          {"seed", s.seed}};
}

template <std::size_t N>
std::array<double, N> tuple_of(const json& j, const char* what) {
  if (!j.is_array() || j.size() != N) config_error(std::string(what) + " entries need " + std::to_string(N) + " numbers");
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = j[i].get<double>();
  return out;
}

void scene_from(const json& j, SceneSpec& s) {
  check_keys(j, "scene",
             {"grid", "extent", "jitter", "slope_x", "slope_y", "craters", "domes", "ridges", "random_craters",
              "random_domes", "random_ridges", "albedo_base", "patches", "random_bright_patches",
              "random_dark_patches", "bright_albedo", "dark_albedo", "num_cameras", "camera_distance",
              "off_nadir_min_deg", "off_nadir_max_deg", "arc_start_deg", "arc_span_deg", "image_width",
              "image_height", "focal", "sun_azimuth_min_deg", "sun_azimuth_max_deg", "sun_elevation_min_deg",
              "sun_elevation_max_deg", "phase_min_deg", "phase_max_deg", "model", "body", "calibrated",
              "scale_min", "scale_max", "bias_min", "bias_max", "seed"});
  read(j, "grid", s.grid);
  read(j, "extent", s.extent);
  read(j, "jitter", s.jitter);
  read(j, "slope_x", s.terrain.slope_x);
  read(j, "slope_y", s.terrain.slope_y);
  if (j.contains("craters")) {
    s.terrain.craters.clear();
    for (const auto& e : j["craters"]) {
      const auto v = tuple_of<4>(e, "crater");
      s.terrain.craters.push_back({v[0], v[1], v[2], v[3]});
    }
  }
  if (j.contains("domes")) {
    s.terrain.domes.clear();
    for (const auto& e : j["domes"]) {
      const auto v = tuple_of<4>(e, "dome");
      s.terrain.domes.push_back({v[0], v[1], v[2], v[3]});
    }
  }
  if (j.contains("ridges")) {
    s.terrain.ridges.clear();
    for (const auto& e : j["ridges"]) {
      const auto v = tuple_of<5>(e, "ridge");
      s.terrain.ridges.push_back({v[0], v[1], v[2], v[3], v[4]});
    }
  }
  if (j.contains("patches")) {
    s.patches.clear();
    for (const auto& e : j["patches"]) {
      const auto v = tuple_of<4>(e, "patch");
      s.patches.push_back({v[0], v[1], v[2], v[3]});
    }
  }
  read(j, "random_craters", s.random_craters);
  read(j, "random_domes", s.random_domes);
  read(j, "random_ridges", s.random_ridges);
  read(j, "albedo_base", s.albedo_base);
  read(j, "random_bright_patches", s.random_bright_patches);
  read(j, "random_dark_patches", s.random_dark_patches);
  read(j, "bright_albedo", s.bright_albedo);
  read(j, "dark_albedo", s.dark_albedo);
  read(j, "num_cameras", s.num_cameras);
  read(j, "camera_distance", s.camera_distance);
  read(j, "off_nadir_min_deg", s.off_nadir_min_deg);
  read(j, "off_nadir_max_deg", s.off_nadir_max_deg);
  read(j, "arc_start_deg", s.arc_start_deg);
  read(j, "arc_span_deg", s.arc_span_deg);
  read(j, "image_width", s.image_width);
  read(j, "image_height", s.image_height);
  read(j, "focal", s.focal);
  read(j, "sun_azimuth_min_deg", s.sun_azimuth_min_deg);
  read(j, "sun_azimuth_max_deg", s.sun_azimuth_max_deg);
  read(j, "sun_elevation_min_deg", s.sun_elevation_min_deg);
  read(j, "sun_elevation_max_deg", s.sun_elevation_max_deg);
  read(j, "phase_min_deg", s.phase_min_deg);
  read(j, "phase_max_deg", s.phase_max_deg);
  if (j.contains("model")) s.model = parse_model_kind(j["model"].get<std::string>());
  if (j.contains("body")) s.body = parse_body(j["body"].get<std::string>());
  read(j, "calibrated", s.calibrated);
  read(j, "scale_min", s.scale_min);
  read(j, "scale_max", s.scale_max);
  read(j, "bias_min", s.bias_min);
  read(j, "bias_max", s.bias_max);
  read(j, "seed", s.seed);
}

json lm_json(const LMConfig& c) {
  return {{"max_iterations", c.max_iterations},
          {"lambda_initial", c.lambda_initial},
          {"lambda_factor", c.lambda_factor},
          {"lambda_max", c.lambda_max},
          {"relative_cost_tolerance", c.relative_cost_tolerance},
          {"gradient_tolerance", c.gradient_tolerance},
          {"dense_threshold", c.dense_threshold}};
}

void lm_from(const json& j, LMConfig& c) {
  check_keys(j, "optimizer",
             {"max_iterations", "lambda_initial", "lambda_factor", "lambda_max", "relative_cost_tolerance",
              "gradient_tolerance", "dense_threshold"});
  read(j, "max_iterations", c.max_iterations);
  read(j, "lambda_initial", c.lambda_initial);
  read(j, "lambda_factor", c.lambda_factor);
  read(j, "lambda_max", c.lambda_max);
  read(j, "relative_cost_tolerance", c.relative_cost_tolerance);
  read(j, "gradient_tolerance", c.gradient_tolerance);
  read(j, "dense_threshold", c.dense_threshold);
}

}  // namespace

ReflectanceModel PipelineConfig::reflectance_model() const {
  if (model == ModelKind::kAkimov || model == ModelKind::kMcEwen) return ReflectanceModel::make(model, calibrated);
  return ReflectanceModel::preset(model, body, calibrated);
}

void validate_config(const PipelineConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) config_error(what);
  };
  require(c.pixel_sigma > 0, "pixel_sigma must be positive");
  require(c.resolved_brightness_sigma() > 0, "brightness_sigma must be positive");
  require(c.sun_sigma > 0, "sun_sigma must be positive");
  require(c.smoothness_eta > 0, "smoothness eta must be positive");
  require(c.smoothness_neighbors >= 1, "smoothness neighbors must be at least 1");
  require(c.min_track_length >= 2, "min_track_length must be at least 2");
  require(c.normal_neighbors >= 3, "normal_neighbors must be at least 3");
  require(c.gauge_pose_sigma > 0 && c.gauge_range_sigma > 0, "gauge sigmas must be positive");
  require(c.optimizer.max_iterations >= 1, "optimizer.max_iterations must be at least 1");
  require(c.optimizer.lambda_initial > 0 && c.optimizer.lambda_factor > 1, "invalid LM damping schedule");
  require(c.perturb_rotation_deg >= 0 && c.perturb_position_fraction >= 0, "perturbations must be non-negative");
  require(c.synth.min_track_length >= 1, "synth.min_track_length must be positive");
  require(c.synth.noise.pixel_sigma >= 0 && c.synth.noise.brightness_sigma >= 0 && c.synth.noise.sun_sigma >= 0,
          "synthetic noise must be non-negative");
  // Body presets exist for every parameterized model.
  (void)c.reflectance_model();
}

PipelineConfig config_from_json(const std::string& text) {
  PipelineConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    config_error(std::string("invalid JSON: ") + e.what());
  }
  try {
    check_keys(j, "config",
               {"mode", "model", "body", "calibrated", "noise", "factors", "smoothness", "min_track_length",
                "normal_neighbors", "sampson_gating", "presolve", "gauge", "optimizer", "scene", "synth", "perturb",
                "output_dir"});
    if (j.contains("mode")) {
      const auto m = j["mode"].get<std::string>();
      if (m == "synthetic") {
        c.mode = PipelineMode::kSynthetic;
      } else if (m == "bundle") {
        c.mode = PipelineMode::kBundle;
      } else {
        config_error("mode must be 'synthetic' or 'bundle'");
      }
    }
    if (j.contains("model")) c.model = parse_model_kind(j["model"].get<std::string>());
    if (j.contains("body")) c.body = parse_body(j["body"].get<std::string>());
    read(j, "calibrated", c.calibrated);
    if (j.contains("noise")) {
      const json& n = j["noise"];
      check_keys(n, "noise", {"pixel_sigma", "brightness_sigma", "sun_sigma"});
      read(n, "pixel_sigma", c.pixel_sigma);
      if (n.contains("brightness_sigma") && !n["brightness_sigma"].is_null()) {
        c.brightness_sigma = n["brightness_sigma"].get<double>();
      }
      read(n, "sun_sigma", c.sun_sigma);
    }
    if (j.contains("factors")) {
      const json& f = j["factors"];
      check_keys(f, "factors", {"photoclinometry", "sun", "smoothness"});
      read(f, "photoclinometry", c.photoclinometry);
      read(f, "sun", c.sun_factors);
      read(f, "smoothness", c.smoothness);
    }
    if (j.contains("smoothness")) {
      const json& s = j["smoothness"];
      check_keys(s, "smoothness", {"eta", "neighbors", "unit"});
      read(s, "eta", c.smoothness_eta);
      read(s, "neighbors", c.smoothness_neighbors);
      if (s.contains("unit")) {
        const auto u = s["unit"].get<std::string>();
        if (u == "degrees") {
          c.smoothness_unit = AngleUnit::kDegrees;
        } else if (u == "radians") {
          c.smoothness_unit = AngleUnit::kRadians;
        } else {
          config_error("smoothness.unit must be 'degrees' or 'radians'");
        }
      }
    }
    read(j, "min_track_length", c.min_track_length);
    read(j, "normal_neighbors", c.normal_neighbors);
    read(j, "sampson_gating", c.sampson_gating);
    read(j, "presolve", c.presolve);
    if (j.contains("gauge")) {
      const json& g = j["gauge"];
      check_keys(g, "gauge", {"pose_sigma", "range_sigma"});
      read(g, "pose_sigma", c.gauge_pose_sigma);
      read(g, "range_sigma", c.gauge_range_sigma);
    }
    if (j.contains("optimizer")) lm_from(j["optimizer"], c.optimizer);
    if (j.contains("scene")) scene_from(j["scene"], c.scene);
    if (j.contains("synth")) {
      const json& s = j["synth"];
      check_keys(s, "synth", {"noise", "min_track_length", "seed"});
      if (s.contains("noise")) noise_from(s["noise"], c.synth.noise, "synth.noise");
      read(s, "min_track_length", c.synth.min_track_length);
      read(s, "seed", c.synth.seed);
    }
    if (j.contains("perturb")) {
      const json& p = j["perturb"];
      check_keys(p, "perturb", {"rotation_deg", "position_fraction", "seed"});
      read(p, "rotation_deg", c.perturb_rotation_deg);
      read(p, "position_fraction", c.perturb_position_fraction);
      read(p, "seed", c.perturb_seed);
    }
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
  } catch (const json::exception& e) {
    config_error(std::string("invalid config value: ") + e.what());
  }
  validate_config(c);
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_to_json(const PipelineConfig& c) {
  const json j = {
      {"mode", mode_name(c.mode)},
      {"model", std::string(model_kind_name(c.model))},
      {"body", std::string(body_name(c.body))},
      {"calibrated", c.calibrated},
      {"noise",
       {{"pixel_sigma", c.pixel_sigma},
        {"brightness_sigma", c.resolved_brightness_sigma()},
        {"sun_sigma", c.sun_sigma}}},
      {"factors", {{"photoclinometry", c.photoclinometry}, {"sun", c.sun_factors}, {"smoothness", c.smoothness}}},
      {"smoothness",
       {{"eta", c.smoothness_eta}, {"neighbors", c.smoothness_neighbors}, {"unit", unit_name(c.smoothness_unit)}}},
      {"min_track_length", c.min_track_length},
      {"normal_neighbors", c.normal_neighbors},
      {"sampson_gating", c.sampson_gating},
      {"presolve", c.presolve},
      {"gauge", {{"pose_sigma", c.gauge_pose_sigma}, {"range_sigma", c.gauge_range_sigma}}},
      {"optimizer", lm_json(c.optimizer)},
      {"scene", scene_json(c.scene)},
      {"synth",
       {{"noise", noise_json(c.synth.noise)}, {"min_track_length", c.synth.min_track_length}, {"seed", c.synth.seed}}},
      {"perturb",
       {{"rotation_deg", c.perturb_rotation_deg},
        {"position_fraction", c.perturb_position_fraction},
        {"seed", c.perturb_seed}}},
      {"output_dir", c.output_dir.string()}};
  return j.dump(2) + "\n";
}

}  // namespace phomo
