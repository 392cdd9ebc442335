#pragma once

// Measurement bundle: everything the optimizer consumes. Image ids are the
// contiguous range 0..num_images-1; landmark ids are arbitrary but unique.

#include <cstdint>
#include <optional>
#include <vector>

#include "phomo/factors.hpp"

namespace phomo {

struct Observation {
  std::uint32_t image = 0;
  Vector2 pixel = Vector2::Zero();
  double brightness = 0.0;
};

struct Track {
  std::uint32_t landmark = 0;
  std::vector<Observation> observations;
};

struct SunMeasurement {
  UnitVec direction{Vector3::UnitZ()};  // camera frame
  double sigma = 1e-3;
};

struct NoiseModel {
  double pixel_sigma = 1.0;
  double brightness_sigma = 0.01;
  double sun_sigma = 1e-3;
};

struct ImageRecord {
  CameraIntrinsics intrinsics;
  /// Initial (or prior) camera-to-body pose.
  Pose pose;
  SunMeasurement sun;
};

struct MeasurementBundle {
  std::vector<ImageRecord> images;
  std::vector<Track> tracks;
  std::optional<NoiseModel> noise;
  /// Optional initial landmark positions keyed by landmark id.
  std::vector<std::pair<std::uint32_t, Vector3>> landmarks;

  std::size_t num_observations() const;
};

}  // namespace phomo
