// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria. Pass criterion numbers to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "phomo/factors.hpp"
#include "phomo/io.hpp"
#include "phomo/manifold.hpp"
#include "phomo/photometry.hpp"
#include "phomo/pipeline.hpp"
#include "support/jacobian_check.hpp"
#include "support/random_config.hpp"

using namespace phomo;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double max_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v)
    if (!std::isnan(x)) m = std::max(m, x);
  return m;
}

// Every optimizer trace produced by the end-to-end criteria, for criterion 8.
std::vector<std::pair<std::string, std::vector<double>>> g_traces;

void record_traces(const std::string& name, const OptimizeResult& r) {
  if (!r.presolve.cost_trace.empty()) g_traces.emplace_back(name + "/presolve", r.presolve.cost_trace);
  g_traces.emplace_back(name, r.report.cost_trace);
}

const ModelKind kAllKinds[] = {ModelKind::kAkimov, ModelKind::kMcEwen, ModelKind::kAkimovPlus,
                               ModelKind::kLunarLambert, ModelKind::kMinnaert};

// ---------------------------------------------------------------- 1

Outcome jacobians() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  constexpr int kConfigs = 200;
  constexpr double kTol = 1e-5;
  double worst = 0.0;
  std::string worst_what;
  int checked = 0, inactive = 0;
  auto check = [&](const Factor& f, const Values& v, const std::string& what) {
    const auto chk = check::check_jacobians(f, v, 1e-6);
    if (!chk.active) {
      ++inactive;
      return;
    }
    ++checked;
    if (chk.max_relative_error > worst) {
      worst = chk.max_relative_error;
      worst_what = what + " " + to_string(chk.worst_key);
    }
  };

  const CameraIntrinsics K{900, 880, 500, 510};
  for (int i = 0; i < kConfigs; ++i) {
    const auto c = check::random_photo_config(rng);
    Values v;
    v.insert(pose_key(0), c.pose);
    v.insert(landmark_key(0), c.landmark);
    v.insert(sun_key(0), c.sun);
    Eigen::Matrix2d cov;
    cov << 2.0, 0.3, 0.3, 0.7;
    check(ReprojectionFactor(pose_key(0), landmark_key(0), K,
                             project(c.pose, c.landmark, K) + Vector2(1.5, -2.0), cov),
          v, "reprojection");
    const UnitVec meas(c.pose.rotation.transpose() * c.sun.vec() + check::gaussian3(rng, 0.2));
    check(SunVectorFactor(pose_key(0), sun_key(0), meas, 1e-3), v, "sun");
    check(RangePriorFactor(pose_key(0), landmark_key(0), 7.0, 0.01), v, "range_prior");
  }

  for (ModelKind kind : kAllKinds) {
    for (bool calibrated : {true, false}) {
      const auto model = std::make_shared<const ReflectanceModel>(ReflectanceModel::make(kind, calibrated));
      std::uniform_real_distribution<double> u(0.5, 2.0);
      for (int i = 0; i < kConfigs; ++i) {
        const auto c = check::random_photo_config(rng);
        Values v;
        v.insert(pose_key(0), c.pose);
        v.insert(sun_key(0), c.sun);
        v.insert(landmark_key(0), c.landmark);
        v.insert(normal_key(0), c.normal);
        v.insert(albedo_key(0), c.albedo);
        v.insert(scale_key(0), u(rng));
        v.insert(bias_key(0), u(rng) - 1.0);
        PhotoclinometryFactor::Keys keys{pose_key(0), sun_key(0), landmark_key(0), normal_key(0),
                                         albedo_key(0), std::nullopt, std::nullopt};
        if (!calibrated) {
          keys.scale = scale_key(0);
          keys.bias = bias_key(0);
        }
        check(PhotoclinometryFactor(keys, model, 0.25, 0.01), v,
              std::string("photoclinometry/") + std::string(model_kind_name(kind)));
      }
    }
  }

  for (AngleUnit unit : {AngleUnit::kRadians, AngleUnit::kDegrees}) {
    for (int i = 0; i < kConfigs;) {
      const Vector3 l = check::gaussian3(rng);
      const Vector3 lp = l + check::gaussian3(rng);
      const UnitVec n(check::gaussian3(rng));
      if (std::abs((lp - l).normalized().dot(n.vec())) > 0.99) continue;
      Values v;
      v.insert(landmark_key(0), l);
      v.insert(normal_key(0), n);
      v.insert(landmark_key(1), lp);
      check(SmoothnessFactor(landmark_key(0), normal_key(0), landmark_key(1), 1e-4, unit), v, "smoothness");
      ++i;
    }
  }

  for (int i = 0; i < kConfigs; ++i) {
    const auto c = check::random_photo_config(rng);
    const auto d = check::random_photo_config(rng);
    Values v;
    v.insert(pose_key(0), c.pose);
    v.insert(landmark_key(0), c.landmark);
    v.insert(normal_key(0), c.normal);
    v.insert(sun_key(0), c.sun);
    v.insert(albedo_key(0), c.albedo);
    Eigen::MatrixXd A = Eigen::MatrixXd::Random(6, 6);
    const Eigen::MatrixXd cov6 = A * A.transpose() + Eigen::MatrixXd::Identity(6, 6);
    Vector6 z;
    z << check::gaussian3(rng, 0.5), check::gaussian3(rng);
    check(PriorFactor(pose_key(0), pose_retract(c.pose, z), cov6), v, "prior/pose");
    check(PriorFactor(landmark_key(0), d.landmark, Eigen::Matrix3d::Identity() * 0.3), v, "prior/landmark");
    check(PriorFactor(normal_key(0), d.normal, Eigen::Matrix2d::Identity() * 0.1), v, "prior/normal");
    check(PriorFactor(sun_key(0), d.sun, Eigen::Matrix2d::Identity()), v, "prior/sun");
    check(PriorFactor(albedo_key(0), d.albedo, Eigen::Matrix<double, 1, 1>::Constant(0.01)), v, "prior/albedo");
  }

  const double t = seconds_since(t0);
  Outcome o;
  o.pass = worst < kTol && inactive == 0 && t < 60.0;
  o.detail = fmt("%d factor configurations, worst relative error %.2e (%s), %d inactive, %.1f s", checked, worst,
                 worst_what.c_str(), inactive, t);
  return o;
}

// ---------------------------------------------------------------- 2

Outcome retractions() {
  std::mt19937_64 rng(202);
  std::normal_distribution<double> n(0.0, 1.0);
  auto vec3 = [&](double s) { return Vector3(s * n(rng), s * n(rng), s * n(rng)); };
  double norm_err = 0.0, round_trip = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Pose T{so3_exp(vec3(1.0)), vec3(3.0)};
    Vector3 g = vec3(0.8);
    if (g.norm() > 3.0) g *= 3.0 / g.norm();
    Vector6 z;
    z << g, vec3(2.0);
    const Pose U = pose_retract(T, z);
    norm_err = std::max(norm_err, (U.rotation.transpose() * U.rotation - Matrix3::Identity()).norm());
    round_trip = std::max(round_trip, (pose_local(T, U) - z).norm());

    const UnitVec x(vec3(1.0));
    Vector2 xi(n(rng), n(rng));
    if (xi.norm() > 1.5) xi *= 1.5 / xi.norm();
    const UnitVec y = s2_retract(x, xi);
    norm_err = std::max(norm_err, std::abs(y.vec().norm() - 1.0));
    round_trip = std::max(round_trip, (s2_local(x, y) - xi).norm());
  }

  // Error against the first-order expansion must shrink 4x per halving.
  double worst_ratio_dev = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Pose T{so3_exp(vec3(1.0)), vec3(3.0)};
    Vector6 z;
    z << vec3(1.0), vec3(1.0);
    Eigen::Matrix4d hat = Eigen::Matrix4d::Zero();
    hat.topLeftCorner<3, 3>() = skew(Vector3(z.head<3>()));
    hat.topRightCorner<3, 1>() = z.tail<3>();
    const UnitVec x(vec3(1.0));
    const Vector2 xi(n(rng), n(rng));
    const auto B = tangent_basis(x);
    double prev_se3 = 0.0, prev_s2 = 0.0;
    for (int k = 0; k < 6; ++k) {
      const double eps = 0.05 / std::pow(2.0, k);
      const Eigen::Matrix4d first = T.matrix() * (Eigen::Matrix4d::Identity() + eps * hat);
      const double e_se3 = (pose_retract(T, Vector6(eps * z)).matrix() - first).norm();
      const double e_s2 = (s2_retract(x, Vector2(eps * xi)).vec() - (x.vec() + eps * B * xi)).norm();
      if (k > 0) {
        worst_ratio_dev = std::max(worst_ratio_dev, std::abs(prev_se3 / e_se3 - 4.0));
        worst_ratio_dev = std::max(worst_ratio_dev, std::abs(prev_s2 / e_s2 - 4.0));
      }
      prev_se3 = e_se3;
      prev_s2 = e_s2;
    }
  }
  Outcome o;
  o.pass = norm_err < 1e-12 && round_trip < 1e-10 && worst_ratio_dev < 0.2;
  o.detail = fmt("norm error %.1e, round trip %.1e, halving ratio within %.3f of 4", norm_err, round_trip,
                 worst_ratio_dev);
  return o;
}

// ---------------------------------------------------------------- 3

Outcome photometry() {
  const UnitVec z(Vector3::UnitZ());
  const IllumGeometry zero = illum_geometry(z, z, z);
  double norm_err = 0.0;
  for (ModelKind k : kAllKinds) {
    for (Body b : {Body::kVesta, Body::kCeres}) {
      const auto m = (k == ModelKind::kAkimov || k == ModelKind::kMcEwen) ? ReflectanceModel::make(k, true)
                                                                           : ReflectanceModel::preset(k, b);
      for (double a : {0.05, 0.2, 1.0, 1.7})
        norm_err = std::max(norm_err, std::abs(predict_brightness(m, ImagePhotoParams{}, a, zero) - a));
    }
  }
  bool lambda_exact = true;
  for (ModelKind k : {ModelKind::kAkimovPlus, ModelKind::kLunarLambert, ModelKind::kMinnaert})
    for (Body b : {Body::kVesta, Body::kCeres})
      lambda_exact = lambda_exact && phase_function(ReflectanceModel::preset(k, b), 0.0) == 1.0;

  auto ll = ReflectanceModel::preset(ModelKind::kLunarLambert, Body::kVesta);
  ll.weighting = PhaseWeighting::kExponential;
  ll.c.clear();
  const auto mc = ReflectanceModel::mcewen(true);
  std::mt19937_64 rng(303);
  double ll_err = 0.0;
  for (int i = 0; i < 10000;) {
    const UnitVec n(Vector3(0, 0, 1) + check::gaussian3(rng, 0.3));
    const UnitVec s(n.vec() + check::gaussian3(rng, 0.6));
    const UnitVec e(n.vec() + check::gaussian3(rng, 0.6));
    if (s.dot(n) < 0.05 || e.dot(n) < 0.05) continue;
    const IllumGeometry g = illum_geometry(s, e, n);
    const double a = 0.1 + 0.01 * (i % 100);
    ll_err = std::max(ll_err, std::abs(predict_brightness(ll, {}, a, g) - predict_brightness(mc, {}, a, g)));
    ++i;
  }
  Outcome o;
  o.pass = norm_err < 1e-12 && lambda_exact && ll_err < 1e-12;
  o.detail = fmt("zero-angle brightness error %.1e, Lambda(0) exactly 1: %s, exponential Lunar-Lambert vs McEwen %.1e",
                 norm_err, lambda_exact ? "yes" : "no", ll_err);
  return o;
}

// ---------------------------------------------------------------- shared scenes

PipelineConfig textured_scene() {
  PipelineConfig c;
  c.scene.grid = 48;
  c.scene.num_cameras = 12;
  c.scene.random_craters = 8;
  c.scene.random_domes = 2;
  c.scene.random_bright_patches = 3;
  c.scene.random_dark_patches = 3;
  return c;
}

// Bright surface so the brightness noise floor sits well under the photometric
// error band.
PipelineConfig bright_scene() {
  PipelineConfig c = textured_scene();
  c.scene.albedo_base = 1.2;
  c.scene.bright_albedo = 1.44;
  c.scene.dark_albedo = 0.96;
  c.scene.sun_elevation_min_deg = 50;
  c.scene.sun_elevation_max_deg = 75;
  c.scene.phase_max_deg = 60;
  return c;
}

// ---------------------------------------------------------------- 4

Outcome noiseless() {
  PipelineConfig c = textured_scene();
  c.synth.noise = {0, 0, 0};
  // The smoothness prior is not satisfied by curved terrain and would bias a
  // noiseless solution away from truth.
  c.smoothness = false;
  c.optimizer.max_iterations = 200;
  const auto t0 = Clock::now();
  const SynthOutput s = run_synth(c);
  const OptimizeResult r = run_optimize(s.bundle, c);
  const double t = seconds_since(t0);
  record_traces("noiseless", r);
  const EvalReport e = run_eval(r.solution, scene_solution(s.scene), &s.bundle, EvalMode::kTruth);
  const double dl = max_of(e.landmark) / c.scene.extent;
  const double dn = max_of(e.normal_deg);
  const double da = max_of(e.albedo);
  Outcome o;
  o.pass = s.scene.poses.size() >= 12 && r.stats.landmarks >= 2000 && r.report.final_cost < 1e-6 && dl < 1e-6 &&
           dn < 0.01 && da < 1e-4 && t < 300.0;
  o.detail = fmt("%zu images, %zu landmarks, final cost %.2e, max position error %.1e of extent, max normal error "
                 "%.1e deg, max albedo error %.1e, %.0f s",
                 s.scene.poses.size(), r.stats.landmarks, r.report.final_cost, dl, dn, da, t);
  return o;
}

// ---------------------------------------------------------------- 5

Outcome noisy() {
  const PipelineConfig c = bright_scene();
  const auto t0 = Clock::now();
  const SynthOutput s = run_synth(c);
  const OptimizeResult r = run_optimize(s.bundle, c);
  const double t = seconds_since(t0);
  record_traces("noisy", r);
  const EvalReport e = run_eval(r.solution, scene_solution(s.scene), &s.bundle, EvalMode::kTruth);
  const double dn = e.normal_summary().mean;
  const double da = e.albedo_summary().mean;
  const double dI = e.photometric_summary().mean;
  Outcome o;
  o.pass = dn < 5.0 && da < 0.05 && dI < 0.015 && t < 600.0;
  o.detail = fmt("mean normal error %.2f deg, mean albedo error %.2f%%, mean photometric error %.2f%%, "
                 "mean PSNR %.1f dB, %.0f s",
                 dn, 100 * da, 100 * dI, e.psnr_summary().mean, t);
  return o;
}

// ---------------------------------------------------------------- 6

Outcome ridges() {
  PipelineConfig c;
  c.scene.grid = 48;
  c.scene.num_cameras = 12;
  c.scene.random_ridges = 6;
  c.scene.random_craters = 4;
  c.scene.albedo_base = 1.0;
  c.scene.phase_max_deg = 60;
  // Pixel footprint close to the landmark spacing, as for per-pixel keypoints.
  c.scene.image_width = c.scene.image_height = 128;
  const SynthOutput s = run_synth(c);
  const Solution truth = scene_solution(s.scene);
  const OptimizeResult full = run_optimize(s.bundle, c);
  PipelineConfig sfm = c;
  sfm.photoclinometry = sfm.sun_factors = sfm.smoothness = false;
  const OptimizeResult base = run_optimize(s.bundle, sfm);
  record_traces("ridges/full", full);
  record_traces("ridges/sfm", base);
  const double hf = run_eval(full.solution, truth, &s.bundle, EvalMode::kTruth).height_summary().mean;
  const double hb = run_eval(base.solution, truth, &s.bundle, EvalMode::kTruth).height_summary().mean;
  const double reduction = 1.0 - hf / hb;
  Outcome o;
  o.pass = reduction >= 0.15;
  o.detail = fmt("mean height error %.3g m full vs %.3g m geometry only, reduction %.1f%%", 1000 * hf, 1000 * hb,
                 100 * reduction);
  return o;
}

// ---------------------------------------------------------------- 7

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

Outcome scale_tracks_phase() {
  PipelineConfig c = bright_scene();
  c.scene.random_bright_patches = c.scene.random_dark_patches = 2;
  c.scene.random_domes = 0;
  c.scene.random_craters = 6;
  c.scene.sun_elevation_min_deg = 30;
  c.scene.sun_elevation_max_deg = 60;
  c.scene.phase_min_deg = 10;
  c.scene.phase_max_deg = 90;
  // Data from calibrated Lunar-Lambert, fitted with uncalibrated McEwen.
  c.model = ModelKind::kMcEwen;
  c.calibrated = false;
  const SynthOutput s = run_synth(c);
  const OptimizeResult r = run_optimize(s.bundle, c);
  record_traces("uncalibrated", r);
  std::vector<double> lambda, Lambda;
  double lo = 180, hi = 0;
  for (std::size_t k = 0; k < s.scene.poses.size(); ++k) {
    const double phase = std::acos(std::clamp(s.scene.suns[k].vec().dot(s.scene.poses[k].translation.normalized()),
                                              -1.0, 1.0));
    lo = std::min(lo, phase * 180 / M_PI);
    hi = std::max(hi, phase * 180 / M_PI);
    lambda.push_back(r.solution.images[k].photo.scale);
    Lambda.push_back(phase_function(s.scene.model, phase));
  }
  const double rho = pearson(lambda, Lambda);
  Outcome o;
  o.pass = rho > 0.95 && lambda.size() >= 10 && hi - lo >= 30.0;
  o.detail = fmt("Pearson %.4f over %zu images, phase %.1f to %.1f deg", rho, lambda.size(), lo, hi);
  return o;
}

// ---------------------------------------------------------------- 8

Outcome lm_contract() {
  // Measurement-only graph: smoothness rows are pseudo-observations with no
  // noise model, so they are left out of the degrees of freedom.
  PipelineConfig c = bright_scene();
  c.smoothness = false;
  const SynthOutput s = run_synth(c);
  const OptimizeResult r = run_optimize(s.bundle, c);
  record_traces("chi-square", r);

  std::size_t increases = 0;
  std::string where;
  for (const auto& [name, trace] : g_traces) {
    for (std::size_t i = 1; i < trace.size(); ++i) {
      if (trace[i] > trace[i - 1]) {
        ++increases;
        where = name;
      }
    }
  }
  const double dof = static_cast<double>(r.stats.residual_dim) - r.stats.variable_dim;
  const double chi2 = 2.0 * r.report.final_cost;
  const double rel = std::abs(chi2 - dof) / dof;
  Outcome o;
  o.pass = increases == 0 && rel < 0.15;
  o.detail = fmt("%zu traces, %zu increases%s%s; chi-square %.0f vs %.0f degrees of freedom (%.1f%% off)",
                 g_traces.size(), increases, increases ? " in " : "", where.c_str(), chi2, dof, 100 * rel);
  return o;
}

// ---------------------------------------------------------------- 9

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "phomo_acceptance_determinism";
  fs::remove_all(root);
  PipelineConfig c = bright_scene();
  c.output_dir = root / "run";
  for (const char* name : {"a", "b"}) {
    const SynthOutput s = run_synth(c);
    write_synth(c.output_dir / "synth", s, c);
    const MeasurementBundle bundle = read_bundle(c.output_dir / "synth" / "bundle.txt");
    const OptimizeResult r = run_optimize(bundle, c);
    record_traces(std::string("determinism/") + name, r);
    write_optimize(c.output_dir / "opt", r, c);
    const Solution est = read_solution(c.output_dir / "opt");
    const Solution truth = read_solution(c.output_dir / "synth" / "truth");
    std::ofstream out = open_output(c.output_dir / "eval.tsv");
    write_report(out, run_eval(est, truth, &bundle, EvalMode::kTruth));
    out.close();
    fs::rename(c.output_dir, root / name);
  }
  const char* files[] = {"synth/bundle.txt", "synth/config.json", "synth/truth/map.ply", "opt/map.ply",
                         "opt/images.tsv",   "opt/report.json",   "opt/trace.jsonl",     "eval.tsv"};
  std::vector<std::string> differing;
  for (const char* f : files)
    if (slurp(root / "a" / f) != slurp(root / "b" / f) || slurp(root / "a" / f).empty()) differing.push_back(f);
  Outcome o;
  o.pass = differing.empty();
  o.detail = differing.empty() ? fmt("%zu files byte-identical across reruns", std::size(files))
                               : "differing: " + differing.front();
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"analytic Jacobians match finite differences", jacobians},
      {"manifold retractions", retractions},
      {"photometric normalization", photometry},
      {"noiseless end-to-end recovery", noiseless},
      {"noisy recovery", noisy},
      {"photoclinometry reduces height error", ridges},
      {"uncalibrated scale follows the phase function", scale_tracks_phase},
      {"optimizer contract", lm_contract},
      {"determinism", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}
