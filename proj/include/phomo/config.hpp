#pragma once

// Pipeline configuration and its JSON form. Unknown keys are rejected so
// typos surface as ConfigError instead of silently using defaults.

#include <filesystem>
#include <optional>
#include <string>

#include "phomo/graph.hpp"
#include "phomo/synth.hpp"

namespace phomo {

enum class PipelineMode { kSynthetic, kBundle };

struct PipelineConfig {
  PipelineMode mode = PipelineMode::kSynthetic;

  // Reflectance model fitted by the optimizer.
  ModelKind model = ModelKind::kLunarLambert;
  Body body = Body::kVesta;
  bool calibrated = true;

  // Measurement noise assumed by the factors.
  double pixel_sigma = 1.0;
  /// Unset: 0.01 calibrated, 0.5 uncalibrated.
  std::optional<double> brightness_sigma;
  double sun_sigma = 1e-3;

  // Graph composition.
  bool photoclinometry = true;
  bool sun_factors = true;
  bool smoothness = true;
  double smoothness_eta = 1e-4;
  int smoothness_neighbors = 4;
  AngleUnit smoothness_unit = AngleUnit::kDegrees;
  int min_track_length = 6;
  int normal_neighbors = 32;
  bool sampson_gating = false;
  /// Geometry-only bundle adjustment before normals and albedos are
  /// initialized.
  bool presolve = true;
  double gauge_pose_sigma = 1e-6;
  double gauge_range_sigma = 1e-3;
  LMConfig optimizer;

  // Synthetic mode.
  SceneSpec scene;
  SynthOptions synth;
  double perturb_rotation_deg = 1.0;
  double perturb_position_fraction = 0.01;
  std::uint64_t perturb_seed = 13;

  std::filesystem::path output_dir = "phomo_out";

  double resolved_brightness_sigma() const {
    return brightness_sigma.value_or(calibrated ? 0.01 : 0.5);
  }
  ReflectanceModel reflectance_model() const;
};

/// Throws ConfigError on malformed JSON, unknown keys or invalid values.
PipelineConfig config_from_json(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);
/// Fully resolved configuration (every field, defaults included).
std::string config_to_json(const PipelineConfig& config);

/// Throws ConfigError for out-of-range values.
void validate_config(const PipelineConfig& config);

}  // namespace phomo
