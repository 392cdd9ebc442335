#pragma once

// Procedural small-body surface patches, their measurements, and a
// scattered-data renderer.
//
// Scene frame: the surface is a height field z = h(x, y) over a square of
// side `extent` centred on the origin; +z points away from the body. Pixel
// (col, row) has its centre at image coordinates (col, row).

#include <cstdint>
#include <optional>
#include <vector>

#include "phomo/bundle.hpp"
#include "phomo/photometry.hpp"

namespace phomo {

/// Gaussian depression of standard deviation `radius`.
struct Crater {
  double x = 0, y = 0, radius = 0.1, depth = 0.02;
};
/// Gaussian bump of standard deviation `radius`.
struct Dome {
  double x = 0, y = 0, radius = 0.1, height = 0.02;
};
/// Infinite straight ridge through (x, y) with a Gaussian cross-section.
struct Ridge {
  double x = 0, y = 0, azimuth_deg = 0, width = 0.02, height = 0.01;
};
struct AlbedoPatch {
  double x = 0, y = 0, radius = 0.1, value = 0.4;
};

struct HeightField {
  double slope_x = 0.0;
  double slope_y = 0.0;
  std::vector<Crater> craters;
  std::vector<Dome> domes;
  std::vector<Ridge> ridges;

  double height(double x, double y) const;
  /// (dh/dx, dh/dy)
  Vector2 gradient(double x, double y) const;
  /// normalize(-h_x, -h_y, 1)
  UnitVec normal(double x, double y) const;
};

struct SceneSpec {
  // Surface
  int grid = 48;         // landmarks per side
  double extent = 2.0;   // km
  double jitter = 0.3;   // fraction of the grid spacing
  HeightField terrain;
  int random_craters = 0;
  int random_domes = 0;
  int random_ridges = 0;
  double albedo_base = 0.2;
  std::vector<AlbedoPatch> patches;
  int random_bright_patches = 0;
  int random_dark_patches = 0;
  double bright_albedo = 0.4;
  double dark_albedo = 0.1;

  // Cameras on an orbital arc aimed at the scene centre.
  int num_cameras = 12;
  double camera_distance = 10.0;  // km
  double off_nadir_min_deg = 15.0;
  double off_nadir_max_deg = 30.0;
  double arc_start_deg = 0.0;
  double arc_span_deg = 360.0;
  int image_width = 1024;
  int image_height = 1024;
  double focal = 0.0;  // pixels; 0 picks a focal length that frames the scene

  // Illumination, sampled per image and resampled until the phase angle at
  // the scene centre lies inside [phase_min, phase_max].
  double sun_azimuth_min_deg = 0.0;
  double sun_azimuth_max_deg = 360.0;
  double sun_elevation_min_deg = 30.0;
  double sun_elevation_max_deg = 60.0;
  double phase_min_deg = 10.0;
  double phase_max_deg = 100.0;

  // Reflectance used to generate brightness.
  ModelKind model = ModelKind::kLunarLambert;
  Body body = Body::kVesta;
  bool calibrated = true;
  // Ground-truth per-image scale/bias ranges (uncalibrated models only).
  double scale_min = 1.0;
  double scale_max = 1.0;
  double bias_min = 0.0;
  double bias_max = 0.0;

  std::uint64_t seed = 7;
};

struct SyntheticScene {
  SceneSpec spec;
  HeightField terrain;  // including random features
  std::vector<Vector3> landmarks;
  std::vector<UnitVec> normals;
  std::vector<double> albedos;
  std::vector<Pose> poses;
  std::vector<UnitVec> suns;  // body frame
  std::vector<ImagePhotoParams> photo;
  CameraIntrinsics intrinsics;
  int width = 0;
  int height = 0;
  ReflectanceModel model;
};

/// Camera-to-body pose at `center` whose +z axis points at `target`; image
/// rows run along `up_hint` projected away from the boresight.
Pose look_at(const Vector3& center, const Vector3& target, const Vector3& up_hint);

/// The reflectance model a spec selects.
ReflectanceModel scene_model(const SceneSpec& spec);

/// Throws SpecError for infeasible specs (fewer than 8 cameras, phase window
/// unreachable, cameras below the horizon, ...).
SyntheticScene generate_scene(const SceneSpec& spec);

struct SynthOptions {
  NoiseModel noise;
  int min_track_length = 6;
  std::uint64_t seed = 11;
};

/// Projects every landmark into every camera, keeping observations that are
/// in front of the camera, inside the image, lit and front-facing. Tracks
/// shorter than min_track_length are dropped. POSE records hold the true
/// poses; see perturb_poses.
MeasurementBundle synthesize_measurements(const SyntheticScene& scene,
                                          const SynthOptions& options);

/// Rotates each POSE record by `rotation_deg` about a random axis and moves
/// its centre by `position_fraction` of its distance to the origin in a
/// random direction.
void perturb_poses(MeasurementBundle& bundle, double rotation_deg,
                   double position_fraction, std::uint64_t seed);

/// Grayscale float image with a validity mask.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;
  std::vector<std::uint8_t> valid;

  Image() = default;
  Image(int w, int h);
  double at(int col, int row) const { return pixels[index(col, row)]; }
  bool is_valid(int col, int row) const { return valid[index(col, row)] != 0; }
  std::size_t index(int col, int row) const {
    return static_cast<std::size_t>(row) * width + col;
  }
  std::size_t valid_count() const;
  /// Bilinear sample at image coordinates; nullopt if any tap is invalid.
  std::optional<double> sample(double u, double v) const;
};

/// Renders landmark brightness into a view by Delaunay-linear interpolation
/// of the projected landmarks. Pixels outside the hull, or in triangles with
/// a shadowed vertex, are invalid. Throws DegenerateHull.
Image render_view(const std::vector<Vector3>& landmarks,
                  const std::vector<double>& albedos,
                  const std::vector<UnitVec>& normals, const Pose& pose,
                  const UnitVec& sun, const CameraIntrinsics& K,
                  const ReflectanceModel& model, const ImagePhotoParams& params,
                  int width, int height);

}  // namespace phomo
