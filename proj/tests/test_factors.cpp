#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "phomo/factors.hpp"
#include "support/jacobian_check.hpp"
#include "support/random_config.hpp"

using namespace phomo;
using phomo::check::check_jacobians;
using phomo::check::gaussian3;
using phomo::check::random_photo_config;

namespace {

std::mt19937_64 rng(23);

constexpr double kTol = 1e-5;

const ModelKind kAllKinds[] = {ModelKind::kAkimov, ModelKind::kMcEwen,
                               ModelKind::kAkimovPlus, ModelKind::kLunarLambert,
                               ModelKind::kMinnaert};

// Independent homogeneous-coordinate projection.
Vector2 oracle_project(const Pose& T, const Vector3& l, const CameraIntrinsics& K) {
  Eigen::Matrix<double, 3, 4> P;
  P.leftCols<3>() = T.rotation.transpose();
  P.col(3) = -T.rotation.transpose() * T.translation;
  const Vector3 x = K.matrix() * P * l.homogeneous();
  return x.hnormalized();
}

Values photo_values(const check::PhotoConfig& c, double scale, double bias) {
  Values v;
  v.insert(pose_key(0), c.pose);
  v.insert(sun_key(0), c.sun);
  v.insert(landmark_key(0), c.landmark);
  v.insert(normal_key(0), c.normal);
  v.insert(albedo_key(0), c.albedo);
  v.insert(scale_key(0), scale);
  v.insert(bias_key(0), bias);
  return v;
}

PhotoclinometryFactor::Keys photo_keys(bool calibrated) {
  PhotoclinometryFactor::Keys k{pose_key(0), sun_key(0), landmark_key(0), normal_key(0),
                                albedo_key(0), std::nullopt, std::nullopt};
  if (!calibrated) {
    k.scale = scale_key(0);
    k.bias = bias_key(0);
  }
  return k;
}

}  // namespace

TEST(Project, PrincipalPoint) {
  const CameraIntrinsics K{100, 100, 512, 512};
  const Vector2 p = project(Pose::identity(), Vector3(0, 0, 10), K);
  EXPECT_DOUBLE_EQ(p.x(), 512.0);
  EXPECT_DOUBLE_EQ(p.y(), 512.0);
  EXPECT_NEAR(project(Pose::identity(), Vector3(1, 0, 10), K).x(), 522.0, 1e-12);
}

TEST(Project, HomogeneousOracle) {
  const CameraIntrinsics K{800, 780, 320, 240};
  for (int i = 0; i < 100; ++i) {
    const auto c = random_photo_config(rng);
    EXPECT_LT((project(c.pose, c.landmark, K) - oracle_project(c.pose, c.landmark, K)).norm(),
              1e-9);
  }
}

TEST(Project, BehindCamera) {
  try {
    project(Pose::identity(), Vector3(0, 0, -1), CameraIntrinsics{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBehindCamera);
  }
}

TEST(Reprojection, ZeroAndUnitResidual) {
  const CameraIntrinsics K{100, 100, 512, 512};
  Values v;
  v.insert(pose_key(0), Pose::identity());
  v.insert(landmark_key(0), Vector3(0, 0, 10));
  ReprojectionFactor exact(pose_key(0), landmark_key(0), K, Vector2(512, 512));
  EXPECT_EQ(exact.linearize(v, true).r.norm(), 0.0);
  ReprojectionFactor off(pose_key(0), landmark_key(0), K, Vector2(513, 512));
  EXPECT_NEAR(off.linearize(v, true).r.norm(), 1.0, 1e-12);
}

TEST(Reprojection, JacobiansMatchFiniteDifferences) {
  const CameraIntrinsics K{900, 880, 500, 510};
  for (int i = 0; i < 100; ++i) {
    const auto c = random_photo_config(rng);
    Values v;
    v.insert(pose_key(0), c.pose);
    v.insert(landmark_key(0), c.landmark);
    Eigen::Matrix2d cov;
    cov << 2.0, 0.3, 0.3, 0.7;
    ReprojectionFactor f(pose_key(0), landmark_key(0), K,
                         project(c.pose, c.landmark, K) + Vector2(1.5, -2.0), cov);
    const auto chk = check_jacobians(f, v);
    ASSERT_TRUE(chk.active);
    EXPECT_LT(chk.max_relative_error, kTol) << to_string(chk.worst_key);
  }
}

TEST(Reprojection, BehindCameraDeactivates) {
  Values v;
  v.insert(pose_key(0), Pose::identity());
  v.insert(landmark_key(0), Vector3(0, 0, -5));
  ReprojectionFactor f(pose_key(0), landmark_key(0), CameraIntrinsics{}, Vector2::Zero());
  const Residual r = f.linearize(v, true);
  EXPECT_FALSE(r.active);
  EXPECT_EQ(r.inactive_reason, ErrorCode::kBehindCamera);
  EXPECT_EQ(r.r.norm(), 0.0);
  for (const auto& b : r.jacobians) EXPECT_EQ(b.J.norm(), 0.0);
}

TEST(Photoclinometry, ZeroResidualAtPrediction) {
  const auto c = random_photo_config(rng);
  const auto model = std::make_shared<const ReflectanceModel>(
      ReflectanceModel::preset(ModelKind::kLunarLambert, Body::kVesta));
  const Values v = photo_values(c, 1.0, 0.0);
  PhotoclinometryFactor probe(photo_keys(true), model, 0.0, 0.01);
  const double I = *probe.predict(v);
  PhotoclinometryFactor exact(photo_keys(true), model, I, 0.01);
  EXPECT_NEAR(exact.linearize(v, true).r[0], 0.0, 1e-12);
}

TEST(Photoclinometry, AlbedoDerivativeOverhead) {
  // Sun, camera and normal all along +z.
  Values v;
  v.insert(pose_key(0), check::look_at(Vector3(0, 0, 10), Vector3::Zero(), Vector3::UnitX()));
  v.insert(sun_key(0), UnitVec(Vector3::UnitZ()));
  v.insert(landmark_key(0), Vector3::Zero().eval());
  v.insert(normal_key(0), UnitVec(Vector3::UnitZ()));
  v.insert(albedo_key(0), 0.3);
  const auto model = std::make_shared<const ReflectanceModel>(
      ReflectanceModel::preset(ModelKind::kMinnaert, Body::kCeres));
  PhotoclinometryFactor f(photo_keys(true), model, 0.3, 1.0);
  const Residual r = f.linearize(v, true);
  EXPECT_NEAR(r.r[0], 0.0, 1e-14);
  EXPECT_NEAR(r.jacobians[4].J(0, 0), 1.0, 1e-14);
}

TEST(Photoclinometry, JacobiansAllModels) {
  for (ModelKind kind : kAllKinds) {
    for (bool calibrated : {true, false}) {
      const auto model =
          std::make_shared<const ReflectanceModel>(ReflectanceModel::make(kind, calibrated));
      std::uniform_real_distribution<double> u(0.5, 2.0);
      for (int i = 0; i < 200; ++i) {
        const auto c = random_photo_config(rng);
        const Values v = photo_values(c, u(rng), u(rng) - 1.0);
        PhotoclinometryFactor f(photo_keys(calibrated), model, 0.25, 0.01);
        const auto chk = check_jacobians(f, v);
        ASSERT_TRUE(chk.active);
        EXPECT_LT(chk.max_relative_error, kTol)
            << model_kind_name(kind) << " " << to_string(chk.worst_key);
      }
    }
  }
}

TEST(Photoclinometry, ShadowDeactivates) {
  auto c = random_photo_config(rng);
  c.sun = UnitVec(Vector3(-c.normal.vec()));
  const auto model = std::make_shared<const ReflectanceModel>(ReflectanceModel::mcewen(true));
  PhotoclinometryFactor f(photo_keys(true), model, 0.2, 0.01);
  const Residual r = f.linearize(photo_values(c, 1, 0), true);
  EXPECT_FALSE(r.active);
  EXPECT_EQ(r.inactive_reason, ErrorCode::kNotIlluminated);
  EXPECT_EQ(r.squared_norm(), 0.0);
}

TEST(Photoclinometry, CalibratedRejectsScaleKeys) {
  const auto model = std::make_shared<const ReflectanceModel>(
      ReflectanceModel::preset(ModelKind::kLunarLambert, Body::kVesta));
  EXPECT_THROW(PhotoclinometryFactor(photo_keys(false), model, 0.2, 0.01), Error);
}

TEST(SunVector, ZeroAndSmallAngle) {
  Values v;
  v.insert(pose_key(0), Pose::identity());
  const UnitVec meas(Vector3(0.2, -0.4, 1.0));
  v.insert(sun_key(0), meas);
  SunVectorFactor f(pose_key(0), sun_key(0), meas, 1e-3);
  EXPECT_NEAR(f.linearize(v, true).r.norm(), 0.0, 1e-12);
  const Vector3 axis = meas.vec().cross(Vector3::UnitX()).normalized();
  v.update(sun_key(0), UnitVec(so3_exp(Vector3(0.01 * axis)) * meas.vec()));
  EXPECT_NEAR(f.linearize(v, true).r.norm() * 1e-3, 0.01, 1e-6);
}

TEST(SunVector, JacobiansMatchFiniteDifferences) {
  for (int i = 0; i < 100; ++i) {
    const auto c = random_photo_config(rng);
    Values v;
    v.insert(pose_key(0), c.pose);
    v.insert(sun_key(0), c.sun);
    const UnitVec meas(c.pose.rotation.transpose() * c.sun.vec() + gaussian3(rng, 0.2));
    SunVectorFactor f(pose_key(0), sun_key(0), meas, 1e-3);
    const auto chk = check_jacobians(f, v);
    ASSERT_TRUE(chk.active);
    EXPECT_LT(chk.max_relative_error, kTol) << to_string(chk.worst_key);
  }
}

TEST(Smoothness, TangentNeighborAndParallel) {
  Values v;
  v.insert(landmark_key(0), Vector3::Zero().eval());
  v.insert(normal_key(0), UnitVec(Vector3::UnitZ()));
  v.insert(landmark_key(1), Vector3(1, 0.5, 0));
  SmoothnessFactor f(landmark_key(0), normal_key(0), landmark_key(1), 1e-4);
  EXPECT_NEAR(f.linearize(v, true).r[0], 0.0, 1e-15);
  v.update(landmark_key(1), Vector3(0, 0, 2));
  EXPECT_NEAR(std::abs(f.linearize(v, true).r[0]) / std::sqrt(1e-4), M_PI / 2, 1e-4);
}

TEST(Smoothness, JacobiansMatchFiniteDifferences) {
  for (AngleUnit unit : {AngleUnit::kRadians, AngleUnit::kDegrees}) {
    int tested = 0;
    while (tested < 100) {
      const Vector3 l = gaussian3(rng);
      const Vector3 lp = l + gaussian3(rng);
      const UnitVec n(gaussian3(rng));
      if (std::abs((lp - l).normalized().dot(n.vec())) > 0.99) continue;
      Values v;
      v.insert(landmark_key(0), l);
      v.insert(normal_key(0), n);
      v.insert(landmark_key(1), lp);
      SmoothnessFactor f(landmark_key(0), normal_key(0), landmark_key(1), 1e-4, unit);
      const auto chk = check_jacobians(f, v);
      ASSERT_TRUE(chk.active);
      EXPECT_LT(chk.max_relative_error, kTol) << to_string(chk.worst_key);
      ++tested;
    }
  }
}

TEST(Smoothness, CoincidentDeactivates) {
  Values v;
  v.insert(landmark_key(0), Vector3(1, 2, 3));
  v.insert(normal_key(0), UnitVec(Vector3::UnitZ()));
  v.insert(landmark_key(1), Vector3(1, 2, 3));
  SmoothnessFactor f(landmark_key(0), normal_key(0), landmark_key(1), 1e-4);
  const Residual r = f.linearize(v, true);
  EXPECT_FALSE(r.active);
  EXPECT_EQ(r.inactive_reason, ErrorCode::kCoincidentLandmarks);
}

TEST(Prior, ZeroAtPriorAndUnitVectorDefinition) {
  Values v;
  const UnitVec p(Vector3(0.3, 0.1, 1.0));
  const UnitVec x(Vector3(0.1, 0.4, 1.0));
  v.insert(normal_key(0), x);
  PriorFactor f(normal_key(0), p, Eigen::Matrix2d::Identity() * 0.04);
  EXPECT_LT((f.linearize(v, true).r - s2_local(p, x) / 0.2).norm(), 1e-14);
  v.update(normal_key(0), p);
  EXPECT_LT(f.linearize(v, true).r.norm(), 1e-15);
}

TEST(Prior, JacobiansMatchFiniteDifferences) {
  for (int i = 0; i < 100; ++i) {
    const auto c = random_photo_config(rng);
    const auto d = random_photo_config(rng);
    Values v;
    v.insert(pose_key(0), c.pose);
    v.insert(landmark_key(0), c.landmark);
    v.insert(normal_key(0), c.normal);
    v.insert(sun_key(0), c.sun);
    v.insert(albedo_key(0), c.albedo);
    Eigen::MatrixXd A = Eigen::MatrixXd::Random(6, 6);
    const Eigen::MatrixXd cov6 = A * A.transpose() + Eigen::MatrixXd::Identity(6, 6);
    Vector6 z;
    z << gaussian3(rng, 0.5), gaussian3(rng);
    const std::vector<PriorFactor> priors = {
        PriorFactor(pose_key(0), pose_retract(c.pose, z), cov6),
        PriorFactor(landmark_key(0), d.landmark, Eigen::Matrix3d::Identity() * 0.3),
        PriorFactor(normal_key(0), d.normal, Eigen::Matrix2d::Identity() * 0.1),
        PriorFactor(sun_key(0), d.sun, Eigen::Matrix2d::Identity()),
        PriorFactor(albedo_key(0), d.albedo, Eigen::Matrix<double, 1, 1>::Constant(0.01)),
    };
    for (const auto& f : priors) {
      const auto chk = check_jacobians(f, v);
      ASSERT_TRUE(chk.active);
      EXPECT_LT(chk.max_relative_error, kTol) << to_string(chk.worst_key);
    }
  }
}

TEST(RangePrior, JacobiansMatchFiniteDifferences) {
  for (int i = 0; i < 100; ++i) {
    const auto c = random_photo_config(rng);
    Values v;
    v.insert(pose_key(0), c.pose);
    v.insert(landmark_key(0), c.landmark);
    RangePriorFactor f(pose_key(0), landmark_key(0), 7.0, 0.01);
    const auto chk = check_jacobians(f, v);
    ASSERT_TRUE(chk.active);
    EXPECT_LT(chk.max_relative_error, kTol) << to_string(chk.worst_key);
  }
}

TEST(Whitening, SigmaScalesResidualAndJacobians) {
  const auto c = random_photo_config(rng);
  const auto model = std::make_shared<const ReflectanceModel>(ReflectanceModel::akimov(false));
  const Values v = photo_values(c, 1.3, 0.1);
  PhotoclinometryFactor a(photo_keys(false), model, 0.4, 0.01);
  PhotoclinometryFactor b(photo_keys(false), model, 0.4, 0.04);
  const Residual ra = a.linearize(v, true), rb = b.linearize(v, true);
  EXPECT_NEAR(ra.r[0], 4.0 * rb.r[0], 1e-12 * std::abs(ra.r[0]));
  for (std::size_t k = 0; k < ra.jacobians.size(); ++k) {
    EXPECT_LT((ra.jacobians[k].J - 4.0 * rb.jacobians[k].J).norm(),
              1e-12 * ra.jacobians[k].J.norm() + 1e-300);
  }
}

TEST(Whitening, RejectsNonSpd) {
  Eigen::Matrix2d bad;
  bad << 1, 2, 2, 1;
  EXPECT_THROW(whitening_from_covariance(bad), Error);
}
