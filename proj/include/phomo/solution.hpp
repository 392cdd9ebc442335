#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "phomo/bundle.hpp"

namespace phomo {

struct LandmarkMap {
  std::vector<std::uint32_t> ids;
  std::vector<Vector3> positions;
  std::vector<UnitVec> normals;
  std::vector<double> albedos;

  std::size_t size() const { return positions.size(); }
  /// Index of a landmark id, if present.
  std::optional<std::size_t> find(std::uint32_t id) const;
};

struct ImageState {
  CameraIntrinsics intrinsics;
  Pose pose;
  UnitVec sun{Vector3::UnitZ()};  // body frame
  ImagePhotoParams photo;
  int width = 0;
  int height = 0;
};

/// A reconstruction (or ground truth): landmark map, per-image state and
/// the reflectance model that ties them to measured brightness.
struct Solution {
  LandmarkMap map;
  std::vector<ImageState> images;
  ReflectanceModel model;
};

/// Predicted brightness of map landmark j in image k; nullopt when the
/// landmark is shadowed or back-facing there.
std::optional<double> predict_observation(const Solution& s, std::size_t j, std::size_t k);

}  // namespace phomo
