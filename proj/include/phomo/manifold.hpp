#pragma once

// Minimal-coordinate machinery for SO(3), SE(3) and the unit sphere S^2.
//
// Conventions used throughout the library:
//  * A Pose maps camera coordinates into the body frame: x_B = R x_C + t.
//    The translation is therefore the camera center expressed in the body
//    frame.
//  * Pose local coordinates are zeta = [gamma; tau] and act on the right:
//    R <- R Exp(gamma), t <- t + R tau.
//  * Unit vectors are perturbed in a deterministic tangent basis B_x (3x2).

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "phomo/error.hpp"

namespace phomo {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Vec6 = Eigen::Matrix<Scalar, 6, 1>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Mat32 = Eigen::Matrix<Scalar, 3, 2>;
template <typename Scalar>
using Mat23 = Eigen::Matrix<Scalar, 2, 3>;

template <typename Scalar>
Mat3<Scalar> skew(const Vec3<Scalar>& v) {
  Mat3<Scalar> m;
  m << Scalar(0), -v.z(), v.y(),
       v.z(), Scalar(0), -v.x(),
       -v.y(), v.x(), Scalar(0);
  return m;
}

/// SO(3) exponential map (Rodrigues). Below |gamma| = 1e-8 the second order
/// series I + [g]x + 1/2 [g]x^2 is used.
template <typename Scalar>
Mat3<Scalar> so3_exp(const Vec3<Scalar>& gamma) {
  const Scalar theta2 = gamma.squaredNorm();
  const Mat3<Scalar> K = skew(gamma);
  if (theta2 < Scalar(1e-16)) {
    return Mat3<Scalar>::Identity() + K + Scalar(0.5) * K * K;
  }
  const Scalar theta = std::sqrt(theta2);
  const Scalar a = std::sin(theta) / theta;
  const Scalar b = (Scalar(1) - std::cos(theta)) / theta2;
  return Mat3<Scalar>::Identity() + a * K + b * K * K;
}

/// SO(3) logarithm. Returns gamma with |gamma| <= pi.
template <typename Scalar>
Vec3<Scalar> so3_log(const Mat3<Scalar>& R) {
  const Scalar cos_theta =
      std::clamp((R.trace() - Scalar(1)) / Scalar(2), Scalar(-1), Scalar(1));
  const Vec3<Scalar> w(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0),
                       R(1, 0) - R(0, 1));
  if (cos_theta > Scalar(1) - Scalar(1e-12)) {
    return Scalar(0.5) * w;
  }
  const Scalar theta = std::atan2(Scalar(0.5) * w.norm(), cos_theta);
  if (cos_theta > Scalar(-0.99)) {
    return theta / (Scalar(2) * std::sin(theta)) * w;
  }
  // Near pi: recover the axis from the symmetric part R + R^T = 2 cos I +
  // 2(1 - cos) a a^T, then fix the sign from the skew part.
  const Mat3<Scalar> S = (R + R.transpose()) / Scalar(2) -
                         cos_theta * Mat3<Scalar>::Identity();
  int k = 0;
  S.diagonal().maxCoeff(&k);
  Vec3<Scalar> axis = S.col(k) / std::sqrt(S(k, k));
  axis.normalize();
  if (axis.dot(w) < Scalar(0)) axis = -axis;
  return theta * axis;
}

/// Inverse of the right Jacobian of SO(3).
template <typename Scalar>
Mat3<Scalar> so3_right_jacobian_inverse(const Vec3<Scalar>& gamma) {
  const Scalar theta2 = gamma.squaredNorm();
  const Mat3<Scalar> K = skew(gamma);
  if (theta2 < Scalar(1e-10)) {
    return Mat3<Scalar>::Identity() + Scalar(0.5) * K + K * K / Scalar(12);
  }
  const Scalar theta = std::sqrt(theta2);
  const Scalar c = Scalar(1) / theta2 -
                   (Scalar(1) + std::cos(theta)) /
                       (Scalar(2) * theta * std::sin(theta));
  return Mat3<Scalar>::Identity() + Scalar(0.5) * K + c * K * K;
}

/// Rigid transform (rotation matrix + translation).
template <typename Scalar>
struct Pose3 {
  Mat3<Scalar> rotation = Mat3<Scalar>::Identity();
  Vec3<Scalar> translation = Vec3<Scalar>::Zero();

  Pose3() = default;
  Pose3(const Mat3<Scalar>& R, const Vec3<Scalar>& t)
      : rotation(R), translation(t) {}

  static Pose3 identity() { return Pose3(); }

  Vec3<Scalar> operator*(const Vec3<Scalar>& x) const {
    return rotation * x + translation;
  }
  Pose3 operator*(const Pose3& other) const {
    return Pose3(rotation * other.rotation,
                 rotation * other.translation + translation);
  }
  Pose3 inverse() const {
    const Mat3<Scalar> Rt = rotation.transpose();
    return Pose3(Rt, -Rt * translation);
  }
  /// Maps a body-frame point into this pose's local frame.
  Vec3<Scalar> transform_to(const Vec3<Scalar>& x) const {
    return rotation.transpose() * (x - translation);
  }
  Eigen::Matrix<Scalar, 4, 4> matrix() const {
    Eigen::Matrix<Scalar, 4, 4> m = Eigen::Matrix<Scalar, 4, 4>::Identity();
    m.template topLeftCorner<3, 3>() = rotation;
    m.template topRightCorner<3, 1>() = translation;
    return m;
  }
};

/// R <- R Exp(gamma), t <- t + R tau with zeta = [gamma; tau].
template <typename Scalar>
Pose3<Scalar> pose_retract(const Pose3<Scalar>& T, const Vec6<Scalar>& zeta) {
  const Vec3<Scalar> gamma = zeta.template head<3>();
  const Vec3<Scalar> tau = zeta.template tail<3>();
  return Pose3<Scalar>(T.rotation * so3_exp(gamma),
                       T.translation + T.rotation * tau);
}

/// Inverse of pose_retract: zeta such that pose_retract(T, zeta) = U.
template <typename Scalar>
Vec6<Scalar> pose_local(const Pose3<Scalar>& T, const Pose3<Scalar>& U) {
  Vec6<Scalar> zeta;
  zeta.template head<3>() = so3_log<Scalar>(T.rotation.transpose() * U.rotation);
  zeta.template tail<3>() =
      T.rotation.transpose() * (U.translation - T.translation);
  return zeta;
}

/// Point on S^2. The stored vector is always unit norm.
template <typename Scalar>
class UnitVector3 {
 public:
  UnitVector3() : v_(Vec3<Scalar>::UnitZ()) {}
  /// Normalizes the argument. Throws on a zero vector.
  explicit UnitVector3(const Vec3<Scalar>& v) {
    const Scalar n = v.norm();
    if (!(n > Scalar(0)) || !std::isfinite(n)) {
      throw Error(ErrorCode::kDataError, "cannot normalize a zero vector");
    }
    v_ = v / n;
  }
  UnitVector3(Scalar x, Scalar y, Scalar z) : UnitVector3(Vec3<Scalar>(x, y, z)) {}

  const Vec3<Scalar>& vec() const { return v_; }
  Scalar operator[](int i) const { return v_[i]; }
  Scalar dot(const UnitVector3& o) const { return v_.dot(o.v_); }

 private:
  Vec3<Scalar> v_;
};

/// Deterministic orthonormal basis of the tangent plane at x: Gram-Schmidt of
/// the canonical axis least aligned with x (lowest index wins ties), and the
/// second column is x cross the first.
template <typename Scalar>
Mat32<Scalar> tangent_basis(const UnitVector3<Scalar>& x) {
  const Vec3<Scalar>& v = x.vec();
  int axis = 0;
  v.cwiseAbs().minCoeff(&axis);
  Vec3<Scalar> a = Vec3<Scalar>::Unit(axis);
  Vec3<Scalar> b1 = a - a.dot(v) * v;
  b1.normalize();
  Vec3<Scalar> b2 = v.cross(b1);
  b2.normalize();
  Mat32<Scalar> B;
  B.col(0) = b1;
  B.col(1) = b2;
  return B;
}

/// Exact unit-sphere retraction cos|B xi| x + sin|B xi| B xi / |B xi|.
/// For |B xi| < 1e-9 the first-order form normalize(x + B xi) is used.
template <typename Scalar>
UnitVector3<Scalar> s2_retract(const UnitVector3<Scalar>& x,
                               const Vec2<Scalar>& xi) {
  const Vec3<Scalar> v = tangent_basis(x) * xi;
  const Scalar theta = v.norm();
  if (theta < Scalar(1e-9)) {
    return UnitVector3<Scalar>(x.vec() + v);
  }
  return UnitVector3<Scalar>(std::cos(theta) * x.vec() +
                             std::sin(theta) / theta * v);
}

namespace detail {
// theta / sin(theta) and the derivative helper k = (theta c / s - 1) / s^2
// of the log map, with series expansions near s = 0.
template <typename Scalar>
void s2_log_coefficients(Scalar c, Scalar s, Scalar* ratio, Scalar* k) {
  if (s < Scalar(1e-4)) {
    const Scalar s2 = s * s;
    *ratio = Scalar(1) + s2 / Scalar(6) + Scalar(3) * s2 * s2 / Scalar(40);
    *k = Scalar(-1) / Scalar(3) - Scalar(2) * s2 / Scalar(15);
    return;
  }
  const Scalar theta = std::atan2(s, c);
  *ratio = theta / s;
  *k = (theta * c / s - Scalar(1)) / (s * s);
}
}  // namespace detail

/// Log map of S^2 in the tangent basis of x: xi with s2_retract(x, xi) = y.
template <typename Scalar>
Vec2<Scalar> s2_local(const UnitVector3<Scalar>& x,
                      const UnitVector3<Scalar>& y) {
  const Scalar c = x.dot(y);
  if (c < Scalar(-1) + Scalar(1e-9)) {
    throw Error(ErrorCode::kAntipodal, "s2_local of antipodal unit vectors");
  }
  const Vec3<Scalar> v = y.vec() - c * x.vec();
  Scalar ratio, k;
  detail::s2_log_coefficients(std::min(c, Scalar(1)), v.norm(), &ratio, &k);
  return ratio * (tangent_basis(x).transpose() * y.vec());
}

/// Derivative of s2_local(x, y) with respect to y (ambient, 2x3). Only its
/// action on vectors tangent to the sphere at y is meaningful.
template <typename Scalar>
Mat23<Scalar> s2_local_jacobian(const UnitVector3<Scalar>& x,
                                const UnitVector3<Scalar>& y) {
  const Scalar c = x.dot(y);
  if (c < Scalar(-1) + Scalar(1e-9)) {
    throw Error(ErrorCode::kAntipodal, "s2_local of antipodal unit vectors");
  }
  const Vec3<Scalar> v = y.vec() - c * x.vec();
  Scalar ratio, k;
  detail::s2_log_coefficients(std::min(c, Scalar(1)), v.norm(), &ratio, &k);
  const Mat23<Scalar> Bt = tangent_basis(x).transpose();
  return ratio * Bt + k * (Bt * y.vec()) * x.vec().transpose();
}

/// Jacobian of v / |v| with respect to v: (|v|^2 I - v v^T) / |v|^3.
template <typename Scalar>
Mat3<Scalar> normalization_jacobian(const Vec3<Scalar>& v) {
  const Scalar n2 = v.squaredNorm();
  const Scalar n = std::sqrt(n2);
  return (n2 * Mat3<Scalar>::Identity() - v * v.transpose()) / (n2 * n);
}

using Vector2 = Vec2<double>;
using Vector3 = Vec3<double>;
using Vector6 = Vec6<double>;
using Matrix3 = Mat3<double>;
using Pose = Pose3<double>;
using UnitVec = UnitVector3<double>;
using Rotation = Matrix3;

}  // namespace phomo
