#include "phomo/factors.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>

namespace phomo {

Matrix3 CameraIntrinsics::matrix() const {
  Matrix3 K;
  K << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return K;
}

void Residual::deactivate(ErrorCode reason) {
  active = false;
  inactive_reason = reason;
  r.setZero();
  for (auto& b : jacobians) b.J.setZero();
}

Vector2 project(const Pose& T, const Vector3& landmark, const CameraIntrinsics& K) {
  const Vector3 q = T.transform_to(landmark);
  if (q.z() <= 1e-9) {
    throw Error(ErrorCode::kBehindCamera, "landmark depth <= 1e-9");
  }
  return {K.fx * q.x() / q.z() + K.cx, K.fy * q.y() / q.z() + K.cy};
}

Eigen::MatrixXd whitening_from_covariance(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols() || !cov.isApprox(cov.transpose())) {
    throw Error(ErrorCode::kDataError, "covariance must be square and symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kDataError, "covariance is not positive definite");
  }
  // cov = L L^T  =>  cov^-1 = L^-T L^-1, so W = L^-1 (lower triangular).
  const Eigen::MatrixXd L = llt.matrixL();
  return L.triangularView<Eigen::Lower>().solve(
      Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));
}

Residual Factor::make_residual(int rows, bool with_jacobians) const {
  Residual res;
  res.r = Eigen::VectorXd::Zero(rows);
  if (!with_jacobians) return res;
  res.jacobians.reserve(keys_.size());
  for (const auto& key : keys_) {
    res.jacobians.push_back({key, Eigen::MatrixXd::Zero(rows, local_dim(key.kind))});
  }
  return res;
}

// ---------------------------------------------------------------------------

ReprojectionFactor::ReprojectionFactor(VariableKey pose, VariableKey landmark,
                                       const CameraIntrinsics& K,
                                       const Vector2& pixel,
                                       const Matrix2& pixel_cov)
    : Factor({pose, landmark}),
      K_(K),
      pixel_(pixel),
      whiten_(whitening_from_covariance(pixel_cov)) {}

Residual ReprojectionFactor::linearize(const Values& values,
                                       bool with_jacobians) const {
  Residual res = make_residual(2, with_jacobians);
  const Pose& T = values.pose(keys()[0]);
  const Vector3& l = values.point(keys()[1]);
  const Vector3 q = T.transform_to(l);
  if (q.z() <= 1e-9) {
    res.deactivate(ErrorCode::kBehindCamera);
    return res;
  }
  const double iz = 1.0 / q.z();
  const Vector2 uv(K_.fx * q.x() * iz + K_.cx, K_.fy * q.y() * iz + K_.cy);
  res.r = whiten_ * (uv - pixel_);
  if (!with_jacobians) return res;

  Eigen::Matrix<double, 2, 3> P;
  P << K_.fx * iz, 0.0, -K_.fx * q.x() * iz * iz,
       0.0, K_.fy * iz, -K_.fy * q.y() * iz * iz;
  const Eigen::Matrix<double, 2, 3> WP = whiten_ * P;
  // q(zeta) = Exp(-gamma) R^T (l - t - R tau) ~ q + [q]x gamma - tau.
  res.jacobians[0].J.leftCols<3>() = WP * skew(q);
  res.jacobians[0].J.rightCols<3>() = -WP;
  res.jacobians[1].J = WP * T.rotation.transpose();
  return res;
}

// ---------------------------------------------------------------------------

PhotoclinometryFactor::PhotoclinometryFactor(
    const Keys& keys, std::shared_ptr<const ReflectanceModel> model,
    double brightness, double sigma)
    : Factor([&] {
        std::vector<VariableKey> k{keys.pose, keys.sun, keys.landmark,
                                   keys.normal, keys.albedo};
        if (keys.scale) k.push_back(*keys.scale);
        if (keys.bias) k.push_back(*keys.bias);
        return k;
      }()),
      k_(keys),
      model_(std::move(model)),
      brightness_(brightness),
      sigma_(sigma) {
  if (!(sigma_ > 0.0)) throw Error(ErrorCode::kConfigError, "brightness sigma must be > 0");
  if (model_->calibrated && (k_.scale || k_.bias)) {
    throw Error(ErrorCode::kConfigError,
                "calibrated photometry does not take per-image scale/bias");
  }
}

std::optional<double> PhotoclinometryFactor::predict(const Values& values) const {
  const Residual res = linearize(values, false);
  if (!res.active) return std::nullopt;
  return res.r[0] * sigma_ + brightness_;
}

Residual PhotoclinometryFactor::linearize(const Values& values,
                                          bool with_jacobians) const {
  Residual res = make_residual(1, with_jacobians);

  const Pose& T = values.pose(k_.pose);
  const UnitVec& s = values.unit(k_.sun);
  const Vector3& l = values.point(k_.landmark);
  const UnitVec& n = values.unit(k_.normal);
  const double a = values.scalar(k_.albedo);
  ImagePhotoParams params;
  if (k_.scale) params.scale = values.scalar(*k_.scale);
  if (k_.bias) params.bias = values.scalar(*k_.bias);

  // e points from the landmark to the camera center.
  const Vector3 e = T.translation - l;
  const double e_norm = e.norm();
  if (e_norm < 1e-12) {
    res.deactivate(ErrorCode::kBehindCamera);
    return res;
  }
  const Vector3 d = e / e_norm;
  const double f = s.vec().dot(n.vec());
  const double w = d.dot(n.vec());
  const double h = std::clamp(s.vec().dot(d), -1.0, 1.0);
  if (f <= 0.0) {
    res.deactivate(ErrorCode::kNotIlluminated);
    return res;
  }
  if (w <= 0.0) {
    res.deactivate(ErrorCode::kNotVisible);
    return res;
  }
  const double phase = std::acos(h);
  const BrightnessEvaluation I = evaluate_brightness(*model_, params, a, f, w, phase);
  const double inv_sigma = 1.0 / sigma_;
  res.r[0] = (I.value - brightness_) * inv_sigma;
  if (!with_jacobians) return res;

  // phase = acos(h)
  const double dI_dh = -I.d_phase / std::sqrt(std::max(1.0 - h * h, 1e-300));
  const Matrix3 D = normalization_jacobian(e);
  const Eigen::RowVector3d dI_de =
      I.d_cos_e * n.vec().transpose() * D + dI_dh * s.vec().transpose() * D;

  // de/dzeta = [0 R] (rotation does not move the camera center),
  // de/dl = -I.
  auto& J_pose = res.jacobians[0].J;
  J_pose.rightCols<3>() = inv_sigma * dI_de * T.rotation;
  res.jacobians[1].J = inv_sigma *
      (I.d_cos_i * n.vec().transpose() + dI_dh * d.transpose()) * tangent_basis(s);
  res.jacobians[2].J = -inv_sigma * dI_de;
  res.jacobians[3].J = inv_sigma *
      (I.d_cos_i * s.vec().transpose() + I.d_cos_e * d.transpose()) * tangent_basis(n);
  res.jacobians[4].J(0, 0) = inv_sigma * I.d_albedo;
  std::size_t next = 5;
  if (k_.scale) res.jacobians[next++].J(0, 0) = inv_sigma * I.d_scale;
  if (k_.bias) res.jacobians[next++].J(0, 0) = inv_sigma * I.d_bias;
  return res;
}

// ---------------------------------------------------------------------------

SunVectorFactor::SunVectorFactor(VariableKey pose, VariableKey sun,
                                 const UnitVec& measured, double sigma)
    : Factor({pose, sun}), measured_(measured), sigma_(sigma) {
  if (!(sigma_ > 0.0)) throw Error(ErrorCode::kConfigError, "sun sigma must be > 0");
}

Residual SunVectorFactor::linearize(const Values& values, bool with_jacobians) const {
  Residual res = make_residual(2, with_jacobians);
  const Pose& T = values.pose(keys()[0]);
  const UnitVec& s = values.unit(keys()[1]);
  const UnitVec predicted(T.rotation.transpose() * s.vec());
  if (measured_.dot(predicted) < -1.0 + 1e-9) {
    res.deactivate(ErrorCode::kAntipodal);
    return res;
  }
  const double inv_sigma = 1.0 / sigma_;
  res.r = inv_sigma * s2_local(measured_, predicted);
  if (!with_jacobians) return res;

  const Mat23<double> J_log = s2_local_jacobian(measured_, predicted);
  // (R Exp(g))^T s ~ R^T s + [R^T s]x g  and  [R^T s]x = R^T [s]x R.
  res.jacobians[0].J.leftCols<3>() = inv_sigma * J_log * skew(predicted.vec());
  res.jacobians[1].J =
      inv_sigma * J_log * T.rotation.transpose() * tangent_basis(s);
  return res;
}

// ---------------------------------------------------------------------------

SmoothnessFactor::SmoothnessFactor(VariableKey landmark, VariableKey normal,
                                   VariableKey neighbor, double eta, AngleUnit unit)
    : Factor({landmark, normal, neighbor}),
      sqrt_eta_(std::sqrt(eta)),
      unit_scale_(unit == AngleUnit::kDegrees ? 180.0 / std::numbers::pi : 1.0) {
  if (!(eta > 0.0)) throw Error(ErrorCode::kConfigError, "smoothness weight must be > 0");
}

Residual SmoothnessFactor::linearize(const Values& values, bool with_jacobians) const {
  Residual res = make_residual(1, with_jacobians);
  const Vector3& l = values.point(keys()[0]);
  const UnitVec& n = values.unit(keys()[1]);
  const Vector3& lp = values.point(keys()[2]);
  const Vector3 v = lp - l;
  const double dist = v.norm();
  if (dist <= 1e-9) {
    res.deactivate(ErrorCode::kCoincidentLandmarks);
    return res;
  }
  const Vector3 d = v / dist;
  const double c = std::clamp(d.dot(n.vec()), -1.0 + 1e-9, 1.0 - 1e-9);
  const double scale = sqrt_eta_ * unit_scale_;
  res.r[0] = scale * (std::acos(c) - 0.5 * std::numbers::pi);
  if (!with_jacobians) return res;

  const double dr_dc = -scale / std::sqrt(1.0 - c * c);
  const Eigen::RowVector3d dc_dlp = n.vec().transpose() * normalization_jacobian(v);
  res.jacobians[0].J = -dr_dc * dc_dlp;
  res.jacobians[1].J = dr_dc * d.transpose() * tangent_basis(n);
  res.jacobians[2].J = dr_dc * dc_dlp;
  return res;
}

// ---------------------------------------------------------------------------

PriorFactor::PriorFactor(VariableKey key, VariableValue prior,
                         const Eigen::MatrixXd& covariance)
    : Factor({key}), prior_(std::move(prior)), whiten_(whitening_from_covariance(covariance)) {
  if (whiten_.rows() != local_dim(key.kind)) {
    throw Error(ErrorCode::kConfigError,
                "prior covariance dimension does not match " + to_string(key));
  }
}

Residual PriorFactor::linearize(const Values& values, bool with_jacobians) const {
  const VariableKey key = keys()[0];
  Residual res = make_residual(dim(), with_jacobians);
  const VariableValue& value = values.at(key);
  if (key.kind == VariableKind::kNormal || key.kind == VariableKind::kSunDir) {
    const UnitVec& p = std::get<UnitVec>(prior_);
    const UnitVec& x = std::get<UnitVec>(value);
    if (p.dot(x) < -1.0 + 1e-9) {
      res.deactivate(ErrorCode::kAntipodal);
      return res;
    }
  }
  res.r = whiten_ * local_coordinates(key.kind, prior_, value);
  if (!with_jacobians) return res;

  Eigen::MatrixXd& J = res.jacobians[0].J;
  switch (key.kind) {
    case VariableKind::kPose: {
      const Pose& p = std::get<Pose>(prior_);
      const Pose& x = std::get<Pose>(value);
      const Vector3 omega = so3_log<double>(p.rotation.transpose() * x.rotation);
      Eigen::Matrix<double, 6, 6> D = Eigen::Matrix<double, 6, 6>::Zero();
      D.topLeftCorner<3, 3>() = so3_right_jacobian_inverse(omega);
      D.bottomRightCorner<3, 3>() = p.rotation.transpose() * x.rotation;
      J = whiten_ * D;
      break;
    }
    case VariableKind::kNormal:
    case VariableKind::kSunDir: {
      const UnitVec& p = std::get<UnitVec>(prior_);
      const UnitVec& x = std::get<UnitVec>(value);
      J = whiten_ * (s2_local_jacobian(p, x) * tangent_basis(x));
      break;
    }
    default:
      J = whiten_;
      break;
  }
  return res;
}

// ---------------------------------------------------------------------------

RangePriorFactor::RangePriorFactor(VariableKey pose, VariableKey landmark,
                                   double distance, double sigma)
    : Factor({pose, landmark}), distance_(distance), sigma_(sigma) {
  if (!(sigma_ > 0.0)) throw Error(ErrorCode::kConfigError, "range sigma must be > 0");
}

Residual RangePriorFactor::linearize(const Values& values, bool with_jacobians) const {
  Residual res = make_residual(1, with_jacobians);
  const Pose& T = values.pose(keys()[0]);
  const Vector3& l = values.point(keys()[1]);
  const Vector3 u = l - T.translation;
  const double dist = u.norm();
  if (dist <= 1e-12) {
    res.deactivate(ErrorCode::kCoincidentLandmarks);
    return res;
  }
  res.r[0] = (dist - distance_) / sigma_;
  if (!with_jacobians) return res;
  const Eigen::RowVector3d du = u.transpose() / (dist * sigma_);
  res.jacobians[0].J.rightCols<3>() = -du * T.rotation;
  res.jacobians[1].J = du;
  return res;
}

}  // namespace phomo
