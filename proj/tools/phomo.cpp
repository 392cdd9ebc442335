// phomo: synth, optimize, render and eval subcommands.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 solver failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "phomo/io.hpp"
#include "phomo/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace phomo;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitSolver = 4;

// Flags mirroring PipelineConfig. Only flags given on the command line
// override the config file.
struct Overrides {
  std::optional<std::string> config_path;
  std::optional<std::string> model, body, smoothness_unit, output_dir;
  std::optional<bool> calibrated, photoclinometry, sun_factors, smoothness, sampson_gating, presolve;
  std::optional<double> pixel_sigma, brightness_sigma, sun_sigma, eta;
  std::optional<int> smoothness_neighbors, min_track_length, normal_neighbors, max_iterations;
  // synthetic scene
  std::optional<int> grid, cameras, image_size, craters, domes, ridges;
  std::optional<std::uint64_t> seed;
};

void add_config_flags(CLI::App* cmd, Overrides& o, bool scene_flags) {
  cmd->add_option("--config", o.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  cmd->add_option("-o,--out", o.output_dir, "output directory");
  cmd->add_option("--model", o.model, "akimov | mcewen | akimov_plus | lunar_lambert | minnaert");
  cmd->add_option("--body", o.body, "vesta | ceres");
  cmd->add_option("--calibrated", o.calibrated, "true | false");
  cmd->add_option("--pixel-sigma", o.pixel_sigma);
  cmd->add_option("--brightness-sigma", o.brightness_sigma);
  cmd->add_option("--sun-sigma", o.sun_sigma);
  cmd->add_option("--photoclinometry", o.photoclinometry, "true | false");
  cmd->add_option("--sun-factors", o.sun_factors, "true | false");
  cmd->add_option("--smoothness", o.smoothness, "true | false");
  cmd->add_option("--eta", o.eta, "smoothness weight");
  cmd->add_option("--smoothness-neighbors", o.smoothness_neighbors);
  cmd->add_option("--smoothness-unit", o.smoothness_unit, "degrees | radians");
  cmd->add_option("--min-track-length", o.min_track_length);
  cmd->add_option("--normal-neighbors", o.normal_neighbors);
  cmd->add_option("--sampson-gating", o.sampson_gating, "true | false");
  cmd->add_option("--presolve", o.presolve, "true | false");
  cmd->add_option("--max-iterations", o.max_iterations);
  if (!scene_flags) return;
  cmd->add_option("--seed", o.seed, "scene seed");
  cmd->add_option("--grid", o.grid, "landmarks per side");
  cmd->add_option("--cameras", o.cameras);
  cmd->add_option("--image-size", o.image_size, "square image side in pixels");
  cmd->add_option("--craters", o.craters);
  cmd->add_option("--domes", o.domes);
  cmd->add_option("--ridges", o.ridges);
}

template <typename T>
void put(json& patch, const std::optional<T>& v, std::initializer_list<const char*> path) {
  if (!v) return;
  json* node = &patch;
  for (const char* key : path) node = &(*node)[key];
  *node = *v;
}

PipelineConfig resolve_config(const Overrides& o) {
  const PipelineConfig base = o.config_path ? load_config(*o.config_path) : PipelineConfig{};
  json patch = json::object();
  put(patch, o.output_dir, {"output_dir"});
  put(patch, o.model, {"model"});
  put(patch, o.body, {"body"});
  put(patch, o.calibrated, {"calibrated"});
  put(patch, o.pixel_sigma, {"noise", "pixel_sigma"});
  put(patch, o.brightness_sigma, {"noise", "brightness_sigma"});
  put(patch, o.sun_sigma, {"noise", "sun_sigma"});
  put(patch, o.photoclinometry, {"factors", "photoclinometry"});
  put(patch, o.sun_factors, {"factors", "sun"});
  put(patch, o.smoothness, {"factors", "smoothness"});
  put(patch, o.eta, {"smoothness", "eta"});
  put(patch, o.smoothness_neighbors, {"smoothness", "neighbors"});
  put(patch, o.smoothness_unit, {"smoothness", "unit"});
  put(patch, o.min_track_length, {"min_track_length"});
  put(patch, o.normal_neighbors, {"normal_neighbors"});
  put(patch, o.sampson_gating, {"sampson_gating"});
  put(patch, o.presolve, {"presolve"});
  put(patch, o.max_iterations, {"optimizer", "max_iterations"});
  put(patch, o.seed, {"scene", "seed"});
  put(patch, o.grid, {"scene", "grid"});
  put(patch, o.cameras, {"scene", "num_cameras"});
  put(patch, o.image_size, {"scene", "image_width"});
  put(patch, o.image_size, {"scene", "image_height"});
  put(patch, o.craters, {"scene", "random_craters"});
  put(patch, o.domes, {"scene", "random_domes"});
  put(patch, o.ridges, {"scene", "random_ridges"});
  if (patch.empty()) return base;
  json merged = json::parse(config_to_json(base));
  merged.merge_patch(patch);
  return config_from_json(merged.dump());
}

std::vector<int> parse_index_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw Error(ErrorCode::kConfigError, "bad view index '" + item + "'");
    out.push_back(v);
  }
  return out;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigError:
    case ErrorCode::kSpecError:
      return kExitConfig;
    case ErrorCode::kSingularSystem:
      return kExitSolver;
    default:
      return kExitData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phomo: photometric factor-graph reconstruction"};
  app.require_subcommand(1);

  Overrides synth_o, opt_o;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic scene and measurement bundle");
  add_config_flags(synth, synth_o, true);

  CLI::App* optimize = app.add_subcommand("optimize", "optimize a measurement bundle");
  std::string bundle_path;
  optimize->add_option("bundle", bundle_path, "measurement bundle")->required();
  add_config_flags(optimize, opt_o, false);

  CLI::App* render = app.add_subcommand("render", "render a solution");
  std::string render_solution, render_out = "renders", views_text;
  RenderRequest request;
  render->add_option("solution", render_solution, "solution directory")->required();
  render->add_option("-o,--out", render_out, "output directory");
  render->add_option("--views", views_text, "comma-separated image indices");
  render->add_option("--relight", request.relight_azimuths, "number of Sun azimuths in a relighting sweep");
  render->add_option("--relight-elevation", request.relight_elevation_deg, "Sun elevation in degrees");
  render->add_option("--relight-view", request.relight_view, "image whose camera the sweep uses");

  CLI::App* eval = app.add_subcommand("eval", "compare a solution with a reference");
  std::string eval_solution, eval_reference, eval_bundle, eval_out, eval_mode = "truth";
  eval->add_option("solution", eval_solution, "estimated solution directory")->required();
  eval->add_option("reference", eval_reference, "reference solution directory")->required();
  eval->add_option("--bundle", eval_bundle, "measurements for photometric error");
  eval->add_option("--mode", eval_mode, "truth | baseline")->check(CLI::IsMember({"truth", "baseline"}));
  eval->add_option("-o,--out", eval_out, "report path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*synth) {
      const PipelineConfig config = resolve_config(synth_o);
      const SynthOutput out = run_synth(config);
      write_synth(config.output_dir, out, config);
      std::fprintf(stderr, "synth: %zu images, %zu tracks, %zu observations -> %s\n", out.bundle.images.size(),
                   out.bundle.tracks.size(), out.bundle.num_observations(), config.output_dir.string().c_str());
    } else if (*optimize) {
      const PipelineConfig config = resolve_config(opt_o);
      const MeasurementBundle bundle = read_bundle(bundle_path);
      const OptimizeResult result = run_optimize(bundle, config);
      write_optimize(config.output_dir, result, config);
      std::fprintf(stderr, "optimize: %zu landmarks, %d iterations, cost %.6g -> %.6g (%s) -> %s\n",
                   result.stats.landmarks, result.report.iterations, result.report.initial_cost,
                   result.report.final_cost, std::string(termination_name(result.report.termination)).c_str(),
                   config.output_dir.string().c_str());
    } else if (*render) {
      request.views = parse_index_list(views_text);
      if (request.views.empty() && request.relight_azimuths == 0)
        throw Error(ErrorCode::kConfigError, "nothing to render; pass --views and/or --relight");
      const Solution solution = read_solution(render_solution);
      const auto paths = run_render(solution, request, render_out);
      std::fprintf(stderr, "render: %zu images -> %s\n", paths.size(), render_out.c_str());
    } else if (*eval) {
      const Solution estimate = read_solution(eval_solution);
      const Solution reference = read_solution(eval_reference);
      std::optional<MeasurementBundle> bundle;
      if (!eval_bundle.empty()) bundle = read_bundle(eval_bundle);
      const EvalReport report = run_eval(estimate, reference, bundle ? &*bundle : nullptr,
                                         eval_mode == "truth" ? EvalMode::kTruth : EvalMode::kBaseline);
      if (eval_out.empty()) {
        write_report(std::cout, report);
      } else {
        if (fs::path(eval_out).has_parent_path()) fs::create_directories(fs::path(eval_out).parent_path());
        std::ofstream out = open_output(eval_out);
        write_report(out, report);
      }
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "phomo: %s\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "phomo: %s\n", e.what());
    return kExitData;
  }
  return 0;
}
