#include "phomo/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "phomo/init.hpp"
#include "phomo/io.hpp"
#include "phomo/kdtree.hpp"

namespace phomo {
namespace {

using nlohmann::json;

constexpr double kDeg = M_PI / 180.0;

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
}

// Tracks that survive gating, with their landmark ids in bundle order.
std::vector<Track> gate_tracks(const MeasurementBundle& b, const PipelineConfig& c, OptimizeStats& stats) {
  std::vector<Track> kept;
  stats.input_tracks = b.tracks.size();
  for (const Track& t : b.tracks) {
    Track g = t;
    if (c.sampson_gating && t.observations.size() >= 2) {
      const Observation& ref = t.observations.front();
      const RayObservation r{b.images[ref.image].pose, b.images[ref.image].intrinsics, ref.pixel};
      g.observations.assign(1, ref);
      for (std::size_t i = 1; i < t.observations.size(); ++i) {
        const Observation& o = t.observations[i];
        const RayObservation q{b.images[o.image].pose, b.images[o.image].intrinsics, o.pixel};
        if (sampson_error(r, q) < 1.0) {
          g.observations.push_back(o);
        } else {
          ++stats.gated_observations;
        }
      }
    }
    if (static_cast<int>(g.observations.size()) < c.min_track_length) {
      ++stats.short_tracks;
      continue;
    }
    kept.push_back(std::move(g));
  }
  return kept;
}

Matrix2 pixel_cov(const PipelineConfig& c) { return c.pixel_sigma * c.pixel_sigma * Matrix2::Identity(); }

void add_gauge(FactorGraph& g, const PipelineConfig& c, const std::vector<Vector3>& landmarks,
               const std::vector<Pose>& poses) {
  const double s2 = c.gauge_pose_sigma * c.gauge_pose_sigma;
  g.emplace_factor<PriorFactor>(pose_key(0), VariableValue(poses[0]), Eigen::MatrixXd(s2 * Eigen::MatrixXd::Identity(6, 6)));
  g.emplace_factor<RangePriorFactor>(pose_key(0), landmark_key(0), (landmarks[0] - poses[0].translation).norm(),
                                     c.gauge_range_sigma);
}

}  // namespace

int image_extent_from_principal(double c) { return static_cast<int>(std::lround(2.0 * c + 1.0)); }

SynthOutput run_synth(const PipelineConfig& config) {
  SynthOutput out;
  out.scene = generate_scene(config.scene);
  out.bundle = synthesize_measurements(out.scene, config.synth);
  if (config.perturb_rotation_deg > 0.0 || config.perturb_position_fraction > 0.0) {
    perturb_poses(out.bundle, config.perturb_rotation_deg, config.perturb_position_fraction, config.perturb_seed);
  }
  return out;
}

void write_synth(const std::filesystem::path& dir, const SynthOutput& out, const PipelineConfig& config) {
  std::filesystem::create_directories(dir);
  write_bundle(dir / "bundle.txt", out.bundle);
  write_solution(dir / "truth", scene_solution(out.scene));
  write_text(dir / "config.json", config_to_json(config));
}

OptimizeResult run_optimize(const MeasurementBundle& bundle, const PipelineConfig& config) {
  validate_config(config);
  OptimizeResult result;
  OptimizeStats& stats = result.stats;
  if (bundle.images.empty()) throw Error(ErrorCode::kDataError, "bundle has no images");

  std::vector<Track> tracks = gate_tracks(bundle, config, stats);
  if (tracks.empty()) {
    throw Error(ErrorCode::kDataError, "no track has at least " + std::to_string(config.min_track_length) +
                                           " observations; landmarks need that many views to enter the graph");
  }

  const std::size_t K = bundle.images.size();
  std::vector<Pose> poses;
  for (const auto& im : bundle.images) poses.push_back(im.pose);

  // Landmark positions: given, else triangulated.
  std::map<std::uint32_t, Vector3> given(bundle.landmarks.begin(), bundle.landmarks.end());
  std::vector<Vector3> landmarks;
  std::vector<Track> usable;
  for (Track& t : tracks) {
    if (auto it = given.find(t.landmark); it != given.end()) {
      landmarks.push_back(it->second);
      usable.push_back(std::move(t));
      continue;
    }
    std::vector<RayObservation> rays;
    for (const auto& o : t.observations) rays.push_back({poses[o.image], bundle.images[o.image].intrinsics, o.pixel});
    try {
      landmarks.push_back(triangulate_dlt(rays));
      usable.push_back(std::move(t));
    } catch (const Error&) {
      ++stats.failed_triangulations;
    }
  }
  tracks = std::move(usable);
  if (tracks.empty()) throw Error(ErrorCode::kDataError, "no track could be triangulated");
  const std::size_t J = tracks.size();
  stats.landmarks = J;
  for (const auto& t : tracks) stats.observations += t.observations.size();

  const Matrix2 cov = pixel_cov(config);

  if (config.presolve) {
    FactorGraph g;
    for (std::size_t k = 0; k < K; ++k) g.add_variable(pose_key(k), poses[k]);
    for (std::size_t j = 0; j < J; ++j) g.add_variable(landmark_key(j), landmarks[j]);
    for (std::size_t j = 0; j < J; ++j) {
      for (const auto& o : tracks[j].observations) {
        g.emplace_factor<ReprojectionFactor>(pose_key(o.image), landmark_key(j), bundle.images[o.image].intrinsics,
                                             o.pixel, cov);
      }
    }
    add_gauge(g, config, landmarks, poses);
    result.presolve = optimize_lm(g, config.optimizer);
    for (std::size_t k = 0; k < K; ++k) poses[k] = g.values().pose(pose_key(k));
    for (std::size_t j = 0; j < J; ++j) landmarks[j] = g.values().point(landmark_key(j));
  }

  // Sun directions in the body frame from the camera-frame measurements.
  std::vector<UnitVec> suns;
  for (std::size_t k = 0; k < K; ++k) suns.emplace_back(poses[k].rotation * bundle.images[k].sun.direction.vec());

  if (static_cast<int>(J) <= config.normal_neighbors) {
    throw Error(ErrorCode::kDataError, "need more than " + std::to_string(config.normal_neighbors) +
                                           " landmarks to initialize normals, have " + std::to_string(J));
  }
  const auto normals = init_normals(landmarks, mean_view_directions(tracks, landmarks, poses), config.normal_neighbors);

  const ReflectanceModel model = config.reflectance_model();
  std::vector<ImagePhotoParams> photo(K);
  std::vector<double> albedos = init_albedos(tracks, landmarks, normals, poses, suns, model, photo);
  if (!model.calibrated) {
    const auto scales = init_photo_scales(tracks, landmarks, normals, albedos, poses, suns, model);
    for (std::size_t k = 0; k < K; ++k) photo[k].scale = scales[k] / scales[0];
    albedos = init_albedos(tracks, landmarks, normals, poses, suns, model, photo);
  }

  FactorGraph g;
  for (std::size_t k = 0; k < K; ++k) {
    g.add_variable(pose_key(k), poses[k]);
    g.add_variable(sun_key(k), suns[k]);
    if (!model.calibrated) {
      g.add_variable(scale_key(k), photo[k].scale);
      g.add_variable(bias_key(k), photo[k].bias);
    }
  }
  for (std::size_t j = 0; j < J; ++j) {
    g.add_variable(landmark_key(j), landmarks[j]);
    g.add_variable(normal_key(j), normals[j]);
    g.add_variable(albedo_key(j), albedos[j]);
  }

  const auto shared_model = std::make_shared<const ReflectanceModel>(model);
  const double sigma_i = config.resolved_brightness_sigma();
  for (std::size_t j = 0; j < J; ++j) {
    for (const auto& o : tracks[j].observations) {
      g.emplace_factor<ReprojectionFactor>(pose_key(o.image), landmark_key(j), bundle.images[o.image].intrinsics,
                                           o.pixel, cov);
      if (config.photoclinometry) {
        PhotoclinometryFactor::Keys keys{pose_key(o.image), sun_key(o.image), landmark_key(j), normal_key(j),
                                         albedo_key(j), std::nullopt, std::nullopt};
        if (!model.calibrated) {
          keys.scale = scale_key(o.image);
          keys.bias = bias_key(o.image);
        }
        g.emplace_factor<PhotoclinometryFactor>(keys, shared_model, o.brightness, sigma_i);
      }
    }
  }
  if (config.sun_factors) {
    for (std::size_t k = 0; k < K; ++k) {
      g.emplace_factor<SunVectorFactor>(pose_key(k), sun_key(k), bundle.images[k].sun.direction, config.sun_sigma);
    }
  }
  if (config.smoothness) {
    const KdTree tree(landmarks);
    for (std::size_t j = 0; j < J; ++j) {
      for (int n : tree.knn(landmarks[j], config.smoothness_neighbors + 1)) {
        if (static_cast<std::size_t>(n) == j) continue;
        g.emplace_factor<SmoothnessFactor>(landmark_key(j), normal_key(j), landmark_key(n), config.smoothness_eta,
                                           config.smoothness_unit);
      }
    }
  }
  add_gauge(g, config, landmarks, poses);
  // Without a Sun factor nothing observes the Sun directions; keep them.
  if (!config.sun_factors || !config.photoclinometry) {
    for (std::size_t k = 0; k < K; ++k) g.freeze(sun_key(k));
  }
  if (!config.photoclinometry) {
    for (std::size_t j = 0; j < J; ++j) g.freeze(albedo_key(j));
    if (!config.smoothness)
      for (std::size_t j = 0; j < J; ++j) g.freeze(normal_key(j));
  }
  if (!model.calibrated) {
    // Albedo and scale trade off globally; the first image's scale sets it.
    g.freeze(scale_key(0));
    if (!config.photoclinometry) {
      for (std::size_t k = 0; k < K; ++k) {
        g.freeze(scale_key(k));
        g.freeze(bias_key(k));
      }
    }
  }

  stats.residual_dim = static_cast<std::size_t>(g.total_residual_dim());
  stats.variable_dim = g.total_local_dim();
  try {
    result.report = optimize_lm(g, config.optimizer);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kSingularSystem) {
      throw Error(ErrorCode::kSingularSystem,
                  std::string(e.what()) + " (check the gauge priors and that every landmark has at least " +
                      std::to_string(config.min_track_length) + " observations)");
    }
    throw;
  }

  const Values& v = g.values();
  Solution& s = result.solution;
  s.model = model;
  for (std::size_t j = 0; j < J; ++j) {
    s.map.ids.push_back(tracks[j].landmark);
    s.map.positions.push_back(v.point(landmark_key(j)));
    s.map.normals.push_back(v.unit(normal_key(j)));
    s.map.albedos.push_back(v.scalar(albedo_key(j)));
  }
  for (std::size_t k = 0; k < K; ++k) {
    ImageState im;
    im.intrinsics = bundle.images[k].intrinsics;
    im.pose = v.pose(pose_key(k));
    im.sun = v.unit(sun_key(k));
    if (!model.calibrated) {
      im.photo.scale = v.scalar(scale_key(k));
      im.photo.bias = v.scalar(bias_key(k));
    }
    im.width = image_extent_from_principal(im.intrinsics.cx);
    im.height = image_extent_from_principal(im.intrinsics.cy);
    s.images.push_back(im);
  }
  return result;
}

std::string optimize_report_json(const OptimizeResult& r) {
  auto report = [](const OptimizerReport& o) {
    return json{{"iterations", o.iterations},
                {"initial_cost", o.initial_cost},
                {"final_cost", o.final_cost},
                {"termination", std::string(termination_name(o.termination))},
                {"inactive_factors", o.inactive_factors},
                {"cost_trace", o.cost_trace},
                {"lambda_trace", o.lambda_trace}};
  };
  const json j = {{"stats",
                   {{"input_tracks", r.stats.input_tracks},
                    {"short_tracks", r.stats.short_tracks},
                    {"gated_observations", r.stats.gated_observations},
                    {"failed_triangulations", r.stats.failed_triangulations},
                    {"landmarks", r.stats.landmarks},
                    {"observations", r.stats.observations},
                    {"residual_dim", r.stats.residual_dim},
                    {"variable_dim", r.stats.variable_dim}}},
                  {"presolve", report(r.presolve)},
                  {"optimizer", report(r.report)}};
  return j.dump(2) + "\n";
}

void write_optimize(const std::filesystem::path& dir, const OptimizeResult& result, const PipelineConfig& config) {
  write_solution(dir, result.solution);
  write_text(dir / "report.json", optimize_report_json(result));
  {
    auto out = open_output(dir / "trace.jsonl");
    write_trace(out, result.report);
  }
  write_text(dir / "config.json", config_to_json(config));
}

std::vector<std::filesystem::path> run_render(const Solution& s, const RenderRequest& req,
                                              const std::filesystem::path& dir) {
  const int K = static_cast<int>(s.images.size());
  auto check_view = [&](int k) {
    if (k < 0 || k >= K) {
      throw Error(ErrorCode::kDataError, "unknown view " + std::to_string(k) + " (solution has " +
                                             std::to_string(K) + " images)");
    }
  };
  for (int k : req.views) check_view(k);
  if (req.relight_azimuths > 0) check_view(req.relight_view);
  std::filesystem::create_directories(dir);

  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, int k, const UnitVec& sun, json meta) {
    const ImageState& im = s.images[k];
    const Image img = render_view(s.map.positions, s.map.albedos, s.map.normals, im.pose, sun, im.intrinsics, s.model,
                                  im.photo, im.width, im.height);
    double max_value = 0.0;
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
      if (img.valid[i]) max_value = std::max(max_value, img.pixels[i]);
    if (!(max_value > 0.0)) max_value = 1.0;
    meta["view"] = k;
    meta["sun_body"] = {sun.vec().x(), sun.vec().y(), sun.vec().z()};
    const auto path = dir / (name + ".pgm");
    write_render(path, img, max_value, meta.dump());
    written.push_back(path);
  };

  for (int k : req.views) {
    char name[32];
    std::snprintf(name, sizeof name, "view_%03d", k);
    emit(name, k, s.images[k].sun, json::object());
  }
  if (req.relight_azimuths > 0) {
    Vector3 up = Vector3::Zero();
    for (const auto& n : s.map.normals) up += n.vec();
    up.normalize();
    Vector3 e1 = Vector3::UnitX() - up.x() * up;
    if (e1.norm() < 1e-6) e1 = Vector3::UnitY() - up.y() * up;
    e1.normalize();
    const Vector3 e2 = up.cross(e1);
    const double el = req.relight_elevation_deg * kDeg;
    for (int i = 0; i < req.relight_azimuths; ++i) {
      const double az_deg = 360.0 * i / req.relight_azimuths;
      const double az = az_deg * kDeg;
      const UnitVec sun(std::cos(el) * (std::cos(az) * e1 + std::sin(az) * e2) + std::sin(el) * up);
      char name[48];
      std::snprintf(name, sizeof name, "relight_%03d_az%03d", req.relight_view, static_cast<int>(std::lround(az_deg)));
      emit(name, req.relight_view, sun, json{{"azimuth_deg", az_deg}, {"elevation_deg", req.relight_elevation_deg}});
    }
  }
  return written;
}

EvalReport run_eval(const Solution& estimate, const Solution& reference, const MeasurementBundle* measurements,
                    EvalMode mode) {
  EvalOptions opt;
  opt.mode = mode;
  opt.fit_albedo_scale = !estimate.model.calibrated;
  return evaluate(estimate, reference, measurements, opt);
}

}  // namespace phomo
