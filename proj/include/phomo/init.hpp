#pragma once

// Initialization: triangulation, epipolar gating, plane-fit normals, albedo
// averaging, and similarity alignment for evaluation.

#include <vector>

#include "phomo/bundle.hpp"

namespace phomo {

/// x -> s R x + t
template <typename Scalar>
struct Similarity3 {
  Scalar scale = Scalar(1);
  Mat3<Scalar> rotation = Mat3<Scalar>::Identity();
  Vec3<Scalar> translation = Vec3<Scalar>::Zero();

  Vec3<Scalar> operator*(const Vec3<Scalar>& x) const {
    return scale * (rotation * x) + translation;
  }
  Similarity3 operator*(const Similarity3& o) const {
    return {scale * o.scale, rotation * o.rotation,
            scale * (rotation * o.translation) + translation};
  }
  Similarity3 inverse() const {
    const Mat3<Scalar> Rt = rotation.transpose();
    return {Scalar(1) / scale, Rt, -(Rt * translation) / scale};
  }
  /// Moves a camera-to-body pose into the target frame.
  Pose3<Scalar> transform(const Pose3<Scalar>& T) const {
    return Pose3<Scalar>(rotation * T.rotation, (*this) * T.translation);
  }
};

using Sim3 = Similarity3<double>;

struct RayObservation {
  Pose pose;
  CameraIntrinsics intrinsics;
  Vector2 pixel = Vector2::Zero();
};

/// Linear triangulation from two or more views. Throws DegenerateGeometry
/// for coincident centers, parallel rays or a rank-deficient system, and
/// Cheirality when the point lands behind an observing camera.
Vector3 triangulate_dlt(const std::vector<RayObservation>& observations);

/// Squared Sampson distance (pixels^2) of a correspondence under the
/// fundamental matrix induced by two camera-to-body poses.
double sampson_error(const RayObservation& a, const RayObservation& b);

/// Plane-fit normals from the k nearest neighbors of each landmark.
/// `toward[j]` is any direction the normal must face (e.g. the mean
/// landmark-to-camera direction). Throws DegenerateConfiguration when there
/// are at most k landmarks.
std::vector<UnitVec> init_normals(const std::vector<Vector3>& landmarks,
                                  const std::vector<Vector3>& toward, int k = 32);

/// Mean unit direction from each landmark to the cameras that observe it.
/// `tracks[j]` must correspond to `landmarks[j]`.
std::vector<Vector3> mean_view_directions(const std::vector<Track>& tracks,
                                          const std::vector<Vector3>& landmarks,
                                          const std::vector<Pose>& poses);

/// Per-view albedo by inverting the brightness model, averaged over the
/// views where the landmark is lit and visible. Landmarks with no usable
/// view receive the median of the others.
std::vector<double> init_albedos(const std::vector<Track>& tracks,
                                 const std::vector<Vector3>& landmarks,
                                 const std::vector<UnitVec>& normals,
                                 const std::vector<Pose>& poses,
                                 const std::vector<UnitVec>& suns,
                                 const ReflectanceModel& model,
                                 const std::vector<ImagePhotoParams>& params);

/// Per-image scale for the uncalibrated model: median(I) / median(a d) over
/// the image's usable observations (1 when it has none).
std::vector<double> init_photo_scales(const std::vector<Track>& tracks,
                                      const std::vector<Vector3>& landmarks,
                                      const std::vector<UnitVec>& normals,
                                      const std::vector<double>& albedos,
                                      const std::vector<Pose>& poses,
                                      const std::vector<UnitVec>& suns,
                                      const ReflectanceModel& model);

/// Closed-form least-squares similarity with target ~ S * source.
/// Throws DegenerateConfiguration for fewer than 3 points or collinear sets.
Sim3 align_sim3(const std::vector<Vector3>& source, const std::vector<Vector3>& target);

}  // namespace phomo
