#include "phomo/init.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "phomo/kdtree.hpp"

namespace phomo {
namespace {

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  const double hi = v[n / 2];
  if (n % 2 == 1) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + n / 2));
}

Vector3 bearing(const RayObservation& o) {
  const CameraIntrinsics& K = o.intrinsics;
  const Vector3 x((o.pixel.x() - K.cx) / K.fx, (o.pixel.y() - K.cy) / K.fy, 1.0);
  return o.pose.rotation * x.normalized();
}

// Lit, visible geometry of landmark j in image k, if any.
std::optional<IllumGeometry> view_geometry(const Vector3& l, const UnitVec& n,
                                           const Pose& T, const UnitVec& sun) {
  const Vector3 emit = T.translation - l;
  if (emit.norm() == 0.0) return std::nullopt;
  const IllumGeometry g = illum_geometry(sun, UnitVec(emit), n);
  if (g.cos_i <= 0.0 || g.cos_e <= 0.0) return std::nullopt;
  return g;
}

}  // namespace

Vector3 triangulate_dlt(const std::vector<RayObservation>& obs) {
  if (obs.size() < 2) throw Error(ErrorCode::kDegenerateGeometry, "fewer than 2 observations");

  double baseline = 0.0, spread = 0.0;
  std::vector<Vector3> rays;
  rays.reserve(obs.size());
  for (const auto& o : obs) rays.push_back(bearing(o));
  for (std::size_t i = 0; i < obs.size(); ++i) {
    for (std::size_t j = i + 1; j < obs.size(); ++j) {
      baseline = std::max(baseline, (obs[i].pose.translation - obs[j].pose.translation).norm());
      spread = std::max(spread, rays[i].cross(rays[j]).norm());
    }
  }
  double scale = 0.0;
  for (const auto& o : obs) scale = std::max(scale, o.pose.translation.norm());
  if (baseline <= 1e-12 * std::max(scale, 1.0)) {
    throw Error(ErrorCode::kDegenerateGeometry, "coincident camera centers");
  }
  if (spread <= 1e-12) throw Error(ErrorCode::kDegenerateGeometry, "parallel rays");

  // Rows in normalized image coordinates: x P3 - P1, y P3 - P2, with
  // P = [R^T | -R^T t] the body-to-camera projection.
  Eigen::MatrixXd A(2 * obs.size(), 4);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const auto& o = obs[i];
    const CameraIntrinsics& K = o.intrinsics;
    const double x = (o.pixel.x() - K.cx) / K.fx;
    const double y = (o.pixel.y() - K.cy) / K.fy;
    Eigen::Matrix<double, 3, 4> P;
    P.leftCols<3>() = o.pose.rotation.transpose();
    P.col(3) = -o.pose.rotation.transpose() * o.pose.translation;
    A.row(2 * i) = x * P.row(2) - P.row(0);
    A.row(2 * i + 1) = y * P.row(2) - P.row(1);
  }
  // Condition the point coordinates around the camera centroid.
  Vector3 c = Vector3::Zero();
  for (const auto& o : obs) c += o.pose.translation;
  c /= static_cast<double>(obs.size());
  const double s = std::max(scale, 1.0);
  Eigen::Matrix4d N = Eigen::Matrix4d::Identity();
  N.topLeftCorner<3, 3>() *= s;
  N.topRightCorner<3, 1>() = c;
  const Eigen::MatrixXd An = A * N;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(An, Eigen::ComputeFullV);
  const Eigen::Vector4d sv = svd.singularValues().head<4>();
  if (sv(2) <= 1e-12 * sv(0)) throw Error(ErrorCode::kDegenerateGeometry, "rank-deficient system");
  const Eigen::Vector4d h = N * svd.matrixV().col(3);
  if (std::abs(h(3)) <= 1e-14 * h.head<3>().norm()) {
    throw Error(ErrorCode::kDegenerateGeometry, "point at infinity");
  }
  const Vector3 X = h.head<3>() / h(3);
  for (const auto& o : obs) {
    if (o.pose.transform_to(X).z() <= 0.0) {
      throw Error(ErrorCode::kCheirality, "triangulated point behind a camera");
    }
  }
  return X;
}

double sampson_error(const RayObservation& a, const RayObservation& b) {
  // x_b = R x_a + t maps camera a into camera b.
  const Matrix3 R = b.pose.rotation.transpose() * a.pose.rotation;
  const Vector3 t = b.pose.rotation.transpose() * (a.pose.translation - b.pose.translation);
  const Matrix3 E = skew(t) * R;
  const Matrix3 F = b.intrinsics.matrix().inverse().transpose() * E * a.intrinsics.matrix().inverse();
  const Vector3 xa(a.pixel.x(), a.pixel.y(), 1.0);
  const Vector3 xb(b.pixel.x(), b.pixel.y(), 1.0);
  const Vector3 Fa = F * xa;
  const Vector3 Fb = F.transpose() * xb;
  const double num = xb.dot(Fa);
  const double den = Fa.head<2>().squaredNorm() + Fb.head<2>().squaredNorm();
  if (den == 0.0) return 0.0;
  return num * num / den;
}

std::vector<UnitVec> init_normals(const std::vector<Vector3>& landmarks,
                                  const std::vector<Vector3>& toward, int k) {
  if (static_cast<int>(landmarks.size()) <= k) {
    throw Error(ErrorCode::kDegenerateConfiguration, "need more than k landmarks for normals");
  }
  const KdTree tree(landmarks);
  std::vector<UnitVec> normals;
  normals.reserve(landmarks.size());
  for (std::size_t j = 0; j < landmarks.size(); ++j) {
    // The query point is its own nearest neighbor; take k others.
    const std::vector<int> nn = tree.knn(landmarks[j], k + 1);
    Vector3 mean = Vector3::Zero();
    for (int i : nn) mean += landmarks[i];
    mean /= static_cast<double>(nn.size());
    Matrix3 C = Matrix3::Zero();
    for (int i : nn) {
      const Vector3 d = landmarks[i] - mean;
      C += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Matrix3> eig(C);
    Vector3 n = eig.eigenvectors().col(0);
    if (n.dot(toward[j]) < 0.0) n = -n;
    normals.emplace_back(n);
  }
  return normals;
}

std::vector<Vector3> mean_view_directions(const std::vector<Track>& tracks,
                                          const std::vector<Vector3>& landmarks,
                                          const std::vector<Pose>& poses) {
  std::vector<Vector3> out(tracks.size(), Vector3::Zero());
  for (std::size_t j = 0; j < tracks.size(); ++j) {
    for (const auto& o : tracks[j].observations) {
      out[j] += (poses[o.image].translation - landmarks[j]).normalized();
    }
  }
  return out;
}

std::vector<double> init_albedos(const std::vector<Track>& tracks,
                                 const std::vector<Vector3>& landmarks,
                                 const std::vector<UnitVec>& normals,
                                 const std::vector<Pose>& poses,
                                 const std::vector<UnitVec>& suns,
                                 const ReflectanceModel& model,
                                 const std::vector<ImagePhotoParams>& params) {
  std::vector<double> albedos(tracks.size(), -1.0);
  std::vector<double> valid;
  for (std::size_t j = 0; j < tracks.size(); ++j) {
    double sum = 0.0;
    int count = 0;
    for (const auto& o : tracks[j].observations) {
      const auto g = view_geometry(landmarks[j], normals[j], poses[o.image], suns[o.image]);
      if (!g) continue;
      ImagePhotoParams p = params[o.image];
      const double bias = model.calibrated ? 0.0 : p.bias;
      p.bias = 0.0;
      const double unit = predict_brightness(model, p, 1.0, *g);
      if (!(unit > 1e-12)) continue;
      sum += (o.brightness - bias) / unit;
      ++count;
    }
    if (count > 0) {
      albedos[j] = std::max(sum / count, kMinAlbedo);
      valid.push_back(albedos[j]);
    }
  }
  if (valid.empty()) throw Error(ErrorCode::kDataError, "no landmark is lit and visible in any view");
  const double fallback = median(valid);
  for (double& a : albedos)
    if (a < 0.0) a = fallback;
  return albedos;
}

std::vector<double> init_photo_scales(const std::vector<Track>& tracks,
                                      const std::vector<Vector3>& landmarks,
                                      const std::vector<UnitVec>& normals,
                                      const std::vector<double>& albedos,
                                      const std::vector<Pose>& poses,
                                      const std::vector<UnitVec>& suns,
                                      const ReflectanceModel& model) {
  std::vector<std::vector<double>> meas(poses.size()), pred(poses.size());
  for (std::size_t j = 0; j < tracks.size(); ++j) {
    for (const auto& o : tracks[j].observations) {
      const auto g = view_geometry(landmarks[j], normals[j], poses[o.image], suns[o.image]);
      if (!g) continue;
      meas[o.image].push_back(o.brightness);
      pred[o.image].push_back(albedos[j] * disk_function(model, *g));
    }
  }
  std::vector<double> scales(poses.size(), 1.0);
  for (std::size_t k = 0; k < poses.size(); ++k) {
    if (meas[k].empty()) continue;
    const double den = median(pred[k]);
    if (den > 0.0) scales[k] = std::max(median(meas[k]) / den, kMinScale);
  }
  return scales;
}

Sim3 align_sim3(const std::vector<Vector3>& source, const std::vector<Vector3>& target) {
  const std::size_t n = source.size();
  if (n < 3 || target.size() != n) {
    throw Error(ErrorCode::kDegenerateConfiguration, "need at least 3 matched points");
  }
  Vector3 ms = Vector3::Zero(), mt = Vector3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    ms += source[i];
    mt += target[i];
  }
  ms /= static_cast<double>(n);
  mt /= static_cast<double>(n);

  Matrix3 cov = Matrix3::Zero(), ss = Matrix3::Zero();
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vector3 ds = source[i] - ms;
    cov += (target[i] - mt) * ds.transpose();
    ss += ds * ds.transpose();
    var += ds.squaredNorm();
  }
  cov /= static_cast<double>(n);
  var /= static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Matrix3> spread(ss);
  if (!(spread.eigenvalues()(1) > 1e-12 * spread.eigenvalues()(2))) {
    throw Error(ErrorCode::kDegenerateConfiguration, "source points are collinear or coincident");
  }

  Eigen::JacobiSVD<Matrix3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vector3 d = Vector3::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) d(2) = -1.0;
  Sim3 S;
  S.rotation = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
  S.scale = svd.singularValues().dot(d) / var;
  S.translation = mt - S.scale * S.rotation * ms;
  return S;
}

}  // namespace phomo
