#include "phomo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "phomo/delaunay.hpp"

namespace phomo {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double gaussian(double r2, double sigma) { return std::exp(-0.5 * r2 / (sigma * sigma)); }

}  // namespace

std::size_t MeasurementBundle::num_observations() const {
  std::size_t n = 0;
  for (const auto& t : tracks) n += t.observations.size();
  return n;
}

double HeightField::height(double x, double y) const {
  double h = slope_x * x + slope_y * y;
  for (const auto& c : craters) {
    h -= c.depth * gaussian((x - c.x) * (x - c.x) + (y - c.y) * (y - c.y), c.radius);
  }
  for (const auto& d : domes) {
    h += d.height * gaussian((x - d.x) * (x - d.x) + (y - d.y) * (y - d.y), d.radius);
  }
  for (const auto& r : ridges) {
    // Signed distance to the ridge line along its in-plane normal.
    const double nx = -std::sin(r.azimuth_deg * kDeg), ny = std::cos(r.azimuth_deg * kDeg);
    const double s = (x - r.x) * nx + (y - r.y) * ny;
    h += r.height * gaussian(s * s, r.width);
  }
  return h;
}

Vector2 HeightField::gradient(double x, double y) const {
  Vector2 g(slope_x, slope_y);
  for (const auto& c : craters) {
    const double dx = x - c.x, dy = y - c.y;
    const double e = gaussian(dx * dx + dy * dy, c.radius);
    g += c.depth * e / (c.radius * c.radius) * Vector2(dx, dy);
  }
  for (const auto& d : domes) {
    const double dx = x - d.x, dy = y - d.y;
    const double e = gaussian(dx * dx + dy * dy, d.radius);
    g -= d.height * e / (d.radius * d.radius) * Vector2(dx, dy);
  }
  for (const auto& r : ridges) {
    const double nx = -std::sin(r.azimuth_deg * kDeg), ny = std::cos(r.azimuth_deg * kDeg);
    const double s = (x - r.x) * nx + (y - r.y) * ny;
    const double e = gaussian(s * s, r.width);
    g -= r.height * e * s / (r.width * r.width) * Vector2(nx, ny);
  }
  return g;
}

UnitVec HeightField::normal(double x, double y) const {
  const Vector2 g = gradient(x, y);
  return UnitVec(Vector3(-g.x(), -g.y(), 1.0));
}

Pose look_at(const Vector3& center, const Vector3& target, const Vector3& up_hint) {
  const Vector3 z = (target - center).normalized();
  Vector3 x = z.cross(up_hint);
  if (x.norm() < 1e-9) x = z.cross(Vector3::UnitX());
  if (x.norm() < 1e-9) x = z.cross(Vector3::UnitY());
  x.normalize();
  const Vector3 y = z.cross(x);
  Pose T;
  T.rotation.col(0) = x;
  T.rotation.col(1) = y;
  T.rotation.col(2) = z;
  T.translation = center;
  return T;
}

ReflectanceModel scene_model(const SceneSpec& spec) {
  if (spec.model == ModelKind::kAkimov) return ReflectanceModel::akimov(spec.calibrated);
  if (spec.model == ModelKind::kMcEwen) return ReflectanceModel::mcewen(spec.calibrated);
  return ReflectanceModel::preset(spec.model, spec.body, spec.calibrated);
}

SyntheticScene generate_scene(const SceneSpec& spec) {
  auto spec_error = [](const std::string& msg) { return Error(ErrorCode::kSpecError, msg); };
  if (spec.num_cameras < 8) throw spec_error("at least 8 cameras are required");
  if (spec.grid < 2) throw spec_error("grid must be at least 2");
  if (!(spec.extent > 0.0)) throw spec_error("extent must be positive");
  if (!(spec.camera_distance > spec.extent * 0.5)) {
    throw spec_error("camera distance must exceed half the scene extent");
  }
  if (spec.off_nadir_max_deg >= 80.0 || spec.off_nadir_min_deg < 0.0 ||
      spec.off_nadir_min_deg > spec.off_nadir_max_deg) {
    throw spec_error("off-nadir range must satisfy 0 <= min <= max < 80 deg");
  }
  if (spec.sun_elevation_max_deg <= 0.0 || spec.sun_elevation_min_deg > spec.sun_elevation_max_deg) {
    throw spec_error("sun elevation range must lie above the horizon");
  }
  if (spec.phase_min_deg < 0.0 || spec.phase_max_deg > 120.0 ||
      spec.phase_min_deg >= spec.phase_max_deg) {
    throw spec_error("phase window must satisfy 0 <= min < max <= 120 deg");
  }
  if (spec.image_width < 16 || spec.image_height < 16) throw spec_error("image too small");
  if (!(spec.albedo_base > 0.0)) throw spec_error("albedo must be positive");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  SyntheticScene scene;
  scene.spec = spec;
  scene.model = scene_model(spec);
  scene.terrain = spec.terrain;
  const double E = spec.extent;
  for (int i = 0; i < spec.random_craters; ++i) {
    Crater c;
    c.x = uniform(-0.4, 0.4) * E;
    c.y = uniform(-0.4, 0.4) * E;
    c.radius = uniform(0.04, 0.12) * E;
    c.depth = c.radius * uniform(0.25, 0.5);
    scene.terrain.craters.push_back(c);
  }
  for (int i = 0; i < spec.random_domes; ++i) {
    Dome d;
    d.x = uniform(-0.4, 0.4) * E;
    d.y = uniform(-0.4, 0.4) * E;
    d.radius = uniform(0.05, 0.15) * E;
    d.height = d.radius * uniform(0.15, 0.35);
    scene.terrain.domes.push_back(d);
  }
  for (int i = 0; i < spec.random_ridges; ++i) {
    Ridge r;
    r.x = uniform(-0.3, 0.3) * E;
    r.y = uniform(-0.3, 0.3) * E;
    r.azimuth_deg = uniform(0.0, 180.0);
    r.width = uniform(0.015, 0.03) * E;
    r.height = r.width * uniform(0.3, 0.6);
    scene.terrain.ridges.push_back(r);
  }
  std::vector<AlbedoPatch> patches = spec.patches;
  for (int i = 0; i < spec.random_bright_patches + spec.random_dark_patches; ++i) {
    AlbedoPatch p;
    p.x = uniform(-0.45, 0.45) * E;
    p.y = uniform(-0.45, 0.45) * E;
    p.radius = uniform(0.06, 0.15) * E;
    p.value = i < spec.random_bright_patches ? spec.bright_albedo : spec.dark_albedo;
    patches.push_back(p);
  }

  // Landmarks on a jittered grid.
  const double spacing = E / spec.grid;
  for (int r = 0; r < spec.grid; ++r) {
    for (int c = 0; c < spec.grid; ++c) {
      const double x = -0.5 * E + (c + 0.5) * spacing + spec.jitter * spacing * uniform(-0.5, 0.5);
      const double y = -0.5 * E + (r + 0.5) * spacing + spec.jitter * spacing * uniform(-0.5, 0.5);
      scene.landmarks.emplace_back(x, y, scene.terrain.height(x, y));
      scene.normals.push_back(scene.terrain.normal(x, y));
      double a = spec.albedo_base;
      // Later patches paint over earlier ones.
      for (const auto& p : patches) {
        if ((x - p.x) * (x - p.x) + (y - p.y) * (y - p.y) <= p.radius * p.radius) a = p.value;
      }
      scene.albedos.push_back(a);
    }
  }

  // Cameras on an arc, alternating between the off-nadir bounds.
  const int K = spec.num_cameras;
  const bool closed = std::abs(spec.arc_span_deg - 360.0) < 1e-9;
  std::vector<Vector3> centers;
  for (int k = 0; k < K; ++k) {
    const double t = closed ? double(k) / K : double(k) / (K - 1);
    const double psi = (spec.arc_start_deg + spec.arc_span_deg * t) * kDeg;
    const double theta =
        (k % 2 == 0 ? spec.off_nadir_min_deg : spec.off_nadir_max_deg) * kDeg;
    const Vector3 c = spec.camera_distance *
        Vector3(std::sin(theta) * std::cos(psi), std::sin(theta) * std::sin(psi), std::cos(theta));
    centers.push_back(c);
    scene.poses.push_back(look_at(c, Vector3::Zero(), Vector3::UnitZ()));
  }

  scene.width = spec.image_width;
  scene.height = spec.image_height;
  double f = spec.focal;
  if (f <= 0.0) {
    // Scene corner (half-diagonal) lands at 45% of the image half-size away
    // from the principal point for the nearest camera.
    const double half_diag = 0.5 * std::sqrt(2.0) * E;
    const double nearest = spec.camera_distance - half_diag;
    f = 0.9 * 0.5 * std::min(spec.image_width, spec.image_height) * nearest / half_diag;
  }
  scene.intrinsics = CameraIntrinsics{f, f, 0.5 * (spec.image_width - 1),
                                      0.5 * (spec.image_height - 1)};

  // Sun per image.
  for (int k = 0; k < K; ++k) {
    const Vector3 view = centers[k].normalized();
    bool found = false;
    for (int attempt = 0; attempt < 2000 && !found; ++attempt) {
      const double az = uniform(spec.sun_azimuth_min_deg, spec.sun_azimuth_max_deg) * kDeg;
      const double el = uniform(spec.sun_elevation_min_deg, spec.sun_elevation_max_deg) * kDeg;
      const Vector3 s(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      const double phase = std::acos(std::clamp(s.dot(view), -1.0, 1.0)) / kDeg;
      if (phase >= spec.phase_min_deg && phase <= spec.phase_max_deg) {
        scene.suns.emplace_back(s);
        found = true;
      }
    }
    if (!found) {
      throw spec_error("no sun direction in the azimuth/elevation ranges gives a phase angle in [" +
                       std::to_string(spec.phase_min_deg) + ", " +
                       std::to_string(spec.phase_max_deg) + "] deg for camera " +
                       std::to_string(k));
    }
    ImagePhotoParams p;
    if (!spec.calibrated) {
      p.scale = uniform(spec.scale_min, spec.scale_max);
      p.bias = uniform(spec.bias_min, spec.bias_max);
    }
    scene.photo.push_back(p);
  }
  return scene;
}

MeasurementBundle synthesize_measurements(const SyntheticScene& scene,
                                          const SynthOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const NoiseModel& noise = options.noise;

  MeasurementBundle bundle;
  bundle.noise = noise;
  const int K = static_cast<int>(scene.poses.size());
  for (int k = 0; k < K; ++k) {
    ImageRecord rec;
    rec.intrinsics = scene.intrinsics;
    rec.pose = scene.poses[k];
    const UnitVec s_cam(scene.poses[k].rotation.transpose() * scene.suns[k].vec());
    const Vector2 xi(normal(rng) * noise.sun_sigma, normal(rng) * noise.sun_sigma);
    rec.sun.direction = s2_retract(s_cam, xi);
    rec.sun.sigma = noise.sun_sigma;
    bundle.images.push_back(rec);
  }

  const double w = scene.width, h = scene.height;
  for (std::size_t j = 0; j < scene.landmarks.size(); ++j) {
    Track track;
    track.landmark = static_cast<std::uint32_t>(j);
    const Vector3& l = scene.landmarks[j];
    for (int k = 0; k < K; ++k) {
      // Draw noise for every candidate so the random stream does not depend
      // on which observations survive.
      const Vector2 pixel_noise(normal(rng), normal(rng));
      const double brightness_noise = normal(rng);

      const Pose& T = scene.poses[k];
      if (T.transform_to(l).z() <= 1e-9) continue;
      const Vector2 p = project(T, l, scene.intrinsics);
      if (p.x() < 0.0 || p.y() < 0.0 || p.x() > w - 1 || p.y() > h - 1) continue;
      const UnitVec e(T.translation - l);
      const IllumGeometry g = illum_geometry(scene.suns[k], e, scene.normals[j]);
      if (g.cos_i <= 0.0 || g.cos_e <= 0.0) continue;
      Observation obs;
      obs.image = static_cast<std::uint32_t>(k);
      obs.pixel = p + noise.pixel_sigma * pixel_noise;
      obs.brightness = predict_brightness(scene.model, scene.photo[k], scene.albedos[j], g) +
                       noise.brightness_sigma * brightness_noise;
      track.observations.push_back(obs);
    }
    if (static_cast<int>(track.observations.size()) >= options.min_track_length) {
      bundle.tracks.push_back(std::move(track));
    }
  }
  return bundle;
}

void perturb_poses(MeasurementBundle& bundle, double rotation_deg,
                   double position_fraction, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random_direction = [&]() {
    Vector3 v;
    do {
      v = Vector3(normal(rng), normal(rng), normal(rng));
    } while (v.norm() < 1e-9);
    return Vector3(v.normalized());
  };
  for (auto& img : bundle.images) {
    const Vector3 axis = random_direction();
    const Vector3 offset = random_direction();
    Pose& T = img.pose;
    T.rotation = T.rotation * so3_exp(Vector3(rotation_deg * kDeg * axis));
    T.translation += position_fraction * T.translation.norm() * offset;
  }
}

Image::Image(int w, int h)
    : width(w),
      height(h),
      pixels(static_cast<std::size_t>(w) * h, 0.0),
      valid(static_cast<std::size_t>(w) * h, 0) {}

std::size_t Image::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
}

std::optional<double> Image::sample(double u, double v) const {
  const int c0 = static_cast<int>(std::floor(u)), r0 = static_cast<int>(std::floor(v));
  if (c0 < 0 || r0 < 0 || c0 + 1 >= width || r0 + 1 >= height) return std::nullopt;
  const double fu = u - c0, fv = v - r0;
  double sum = 0.0;
  for (int dr = 0; dr < 2; ++dr) {
    for (int dc = 0; dc < 2; ++dc) {
      if (!is_valid(c0 + dc, r0 + dr)) return std::nullopt;
      sum += (dc ? fu : 1 - fu) * (dr ? fv : 1 - fv) * at(c0 + dc, r0 + dr);
    }
  }
  return sum;
}

Image render_view(const std::vector<Vector3>& landmarks,
                  const std::vector<double>& albedos,
                  const std::vector<UnitVec>& normals, const Pose& pose,
                  const UnitVec& sun, const CameraIntrinsics& K,
                  const ReflectanceModel& model, const ImagePhotoParams& params,
                  int width, int height) {
  if (landmarks.size() != albedos.size() || landmarks.size() != normals.size()) {
    throw Error(ErrorCode::kDataError, "landmark, albedo and normal counts differ");
  }
  std::vector<Eigen::Vector2d> pts;
  std::vector<double> value;
  std::vector<char> lit;
  for (std::size_t j = 0; j < landmarks.size(); ++j) {
    if (pose.transform_to(landmarks[j]).z() <= 1e-9) continue;
    const UnitVec e(pose.translation - landmarks[j]);
    const IllumGeometry g = illum_geometry(sun, e, normals[j]);
    if (g.cos_e <= 0.0) continue;
    pts.push_back(project(pose, landmarks[j], K));
    if (g.cos_i > 0.0) {
      value.push_back(predict_brightness(model, params, albedos[j], g));
      lit.push_back(1);
    } else {
      value.push_back(0.0);
      lit.push_back(0);
    }
  }
  const auto tris = delaunay_triangulate(pts);

  Image img(width, height);
  for (const auto& t : tris) {
    if (!lit[t[0]] || !lit[t[1]] || !lit[t[2]]) continue;
    const Eigen::Vector2d& a = pts[t[0]];
    const Eigen::Vector2d& b = pts[t[1]];
    const Eigen::Vector2d& c = pts[t[2]];
    const double area = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
    if (!(area > 0.0)) continue;
    const int c0 = std::max(0, static_cast<int>(std::ceil(std::min({a.x(), b.x(), c.x()}))));
    const int c1 = std::min(width - 1, static_cast<int>(std::floor(std::max({a.x(), b.x(), c.x()}))));
    const int r0 = std::max(0, static_cast<int>(std::ceil(std::min({a.y(), b.y(), c.y()}))));
    const int r1 = std::min(height - 1, static_cast<int>(std::floor(std::max({a.y(), b.y(), c.y()}))));
    const double eps = -1e-12 * area;
    for (int r = r0; r <= r1; ++r) {
      for (int col = c0; col <= c1; ++col) {
        const Eigen::Vector2d p(col, r);
        const double wa = (b - p).x() * (c - p).y() - (b - p).y() * (c - p).x();
        const double wb = (c - p).x() * (a - p).y() - (c - p).y() * (a - p).x();
        const double wc = area - wa - wb;
        if (wa < eps || wb < eps || wc < eps) continue;
        const std::size_t idx = img.index(col, r);
        if (img.valid[idx]) continue;
        img.pixels[idx] = (wa * value[t[0]] + wb * value[t[1]] + wc * value[t[2]]) / area;
        img.valid[idx] = 1;
      }
    }
  }
  return img;
}

}  // namespace phomo
