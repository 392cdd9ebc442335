#pragma once

// Residual blocks of the photometric bundle adjustment graph. Every factor
// returns a whitened residual and analytical Jacobians in the local
// coordinates of its variables (see manifold.hpp for the conventions).

#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "phomo/photometry.hpp"
#include "phomo/values.hpp"

namespace phomo {

using Matrix2 = Eigen::Matrix2d;

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  Matrix3 matrix() const;
};

struct KeypointMeas {
  Vector2 pixel = Vector2::Zero();
  double brightness = 0.0;
  Matrix2 pixel_cov = Matrix2::Identity();
  double brightness_sigma = 0.01;
};

struct JacobianBlock {
  VariableKey key;
  Eigen::MatrixXd J;
};

struct Residual {
  Eigen::VectorXd r;
  std::vector<JacobianBlock> jacobians;
  bool active = true;
  std::optional<ErrorCode> inactive_reason;

  /// Zeroes the residual and every Jacobian block.
  void deactivate(ErrorCode reason);
  double squared_norm() const { return active ? r.squaredNorm() : 0.0; }
};

/// Pinhole projection of a body-frame point through a camera-to-body pose.
/// Throws BehindCamera when the camera-frame depth is <= 1e-9.
Vector2 project(const Pose& T, const Vector3& landmark, const CameraIntrinsics& K);

/// Lower-triangular W = L^-1 (cov = L L^T), so W^T W = cov^-1. Throws DataError if cov is not SPD.
Eigen::MatrixXd whitening_from_covariance(const Eigen::MatrixXd& cov);

class Factor {
 public:
  explicit Factor(std::vector<VariableKey> keys) : keys_(std::move(keys)) {}
  virtual ~Factor() = default;

  const std::vector<VariableKey>& keys() const { return keys_; }
  virtual int dim() const = 0;
  virtual std::string_view type_name() const = 0;
  /// Residual and (optionally) Jacobians at the given values.
  virtual Residual linearize(const Values& values,
                             bool with_jacobians = true) const = 0;

 protected:
  Residual make_residual(int rows, bool with_jacobians) const;

 private:
  std::vector<VariableKey> keys_;
};

using FactorPtr = std::shared_ptr<const Factor>;

/// r = W (project(T, l) - p).
class ReprojectionFactor final : public Factor {
 public:
  ReprojectionFactor(VariableKey pose, VariableKey landmark,
                     const CameraIntrinsics& K, const Vector2& pixel,
                     const Matrix2& pixel_cov = Matrix2::Identity());
  int dim() const override { return 2; }
  std::string_view type_name() const override { return "reprojection"; }
  Residual linearize(const Values& values, bool with_jacobians) const override;

 private:
  CameraIntrinsics K_;
  Vector2 pixel_;
  Matrix2 whiten_;
};

/// r = (I(T, s, l, n, a[, scale, bias]) - I_meas) / sigma_I. Shadowed or
/// back-facing observations deactivate the factor.
class PhotoclinometryFactor final : public Factor {
 public:
  struct Keys {
    VariableKey pose, sun, landmark, normal, albedo;
    std::optional<VariableKey> scale, bias;
  };
  PhotoclinometryFactor(const Keys& keys,
                        std::shared_ptr<const ReflectanceModel> model,
                        double brightness, double sigma);
  int dim() const override { return 1; }
  std::string_view type_name() const override { return "photoclinometry"; }
  Residual linearize(const Values& values, bool with_jacobians) const override;

  /// Predicted brightness at the given values; nullopt if inactive.
  std::optional<double> predict(const Values& values) const;

 private:
  Keys k_;
  std::shared_ptr<const ReflectanceModel> model_;
  double brightness_;
  double sigma_;
};

/// Tangent-space error between the measured camera-frame sun direction and
/// the prediction R^T s: r = s2_local(meas, R^T s) / sigma.
class SunVectorFactor final : public Factor {
 public:
  SunVectorFactor(VariableKey pose, VariableKey sun, const UnitVec& measured,
                  double sigma);
  int dim() const override { return 2; }
  std::string_view type_name() const override { return "sun_vector"; }
  Residual linearize(const Values& values, bool with_jacobians) const override;

 private:
  UnitVec measured_;
  double sigma_;
};

enum class AngleUnit { kRadians, kDegrees };

/// r = sqrt(eta) (acos(d^T n) - 90 deg) with d the unit direction from the
/// reference landmark to its neighbor. The angle is expressed in `unit`.
class SmoothnessFactor final : public Factor {
 public:
  SmoothnessFactor(VariableKey landmark, VariableKey normal,
                   VariableKey neighbor, double eta,
                   AngleUnit unit = AngleUnit::kRadians);
  int dim() const override { return 1; }
  std::string_view type_name() const override { return "smoothness"; }
  Residual linearize(const Values& values, bool with_jacobians) const override;

 private:
  double sqrt_eta_;
  double unit_scale_;
};

/// Whitened local-coordinate difference from a prior value.
class PriorFactor final : public Factor {
 public:
  PriorFactor(VariableKey key, VariableValue prior,
              const Eigen::MatrixXd& covariance);
  int dim() const override { return static_cast<int>(whiten_.rows()); }
  std::string_view type_name() const override { return "prior"; }
  Residual linearize(const Values& values, bool with_jacobians) const override;

 private:
  VariableValue prior_;
  Eigen::MatrixXd whiten_;
};

/// Distance between a camera center and a landmark: r = (|l - t| - d) / sigma.
/// Pins the global scale of the reconstruction.
class RangePriorFactor final : public Factor {
 public:
  RangePriorFactor(VariableKey pose, VariableKey landmark, double distance,
                   double sigma);
  int dim() const override { return 1; }
  std::string_view type_name() const override { return "range_prior"; }
  Residual linearize(const Values& values, bool with_jacobians) const override;

 private:
  double distance_;
  double sigma_;
};

}  // namespace phomo
