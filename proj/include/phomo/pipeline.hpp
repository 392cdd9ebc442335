#pragma once

// End-to-end stages behind the command-line tool.

#include <filesystem>
#include <string>
#include <vector>

#include "phomo/config.hpp"
#include "phomo/metrics.hpp"
#include "phomo/solution.hpp"

namespace phomo {

struct SynthOutput {
  SyntheticScene scene;
  /// Measurements with the configured pose perturbation applied.
  MeasurementBundle bundle;
};

SynthOutput run_synth(const PipelineConfig& config);
/// bundle.txt, truth/ (solution directory) and config.json.
void write_synth(const std::filesystem::path& dir, const SynthOutput& out, const PipelineConfig& config);

struct OptimizeStats {
  std::size_t input_tracks = 0;
  std::size_t short_tracks = 0;           // below min_track_length
  std::size_t gated_observations = 0;     // removed by Sampson gating
  std::size_t failed_triangulations = 0;
  std::size_t landmarks = 0;
  std::size_t observations = 0;
  std::size_t residual_dim = 0;
  int variable_dim = 0;
};

struct OptimizeResult {
  Solution solution;
  OptimizerReport presolve;  // empty when the presolve is disabled
  OptimizerReport report;
  OptimizeStats stats;
};

/// Gates tracks, initializes (triangulation, Sun directions, geometry
/// presolve, normals, albedos, photometric scales), builds the factor graph
/// and runs Levenberg-Marquardt. Throws DataError when no track survives
/// gating and SingularSystem when the system is rank deficient.
OptimizeResult run_optimize(const MeasurementBundle& bundle, const PipelineConfig& config);
/// map.ply, images.tsv, model.json, report.json, trace.jsonl, config.json.
void write_optimize(const std::filesystem::path& dir, const OptimizeResult& result,
                    const PipelineConfig& config);
std::string optimize_report_json(const OptimizeResult& result);

struct RenderRequest {
  /// Image indices rendered at their own pose and Sun.
  std::vector<int> views;
  /// Relighting sweep from `relight_view`: this many Sun azimuths spaced
  /// evenly over 360 degrees at `relight_elevation_deg` above the mean
  /// surface normal.
  int relight_azimuths = 0;
  double relight_elevation_deg = 45.0;
  int relight_view = 0;
};

/// Writes PGM renders with sidecars into `dir`; returns the image paths.
/// Throws DataError for unknown view ids.
std::vector<std::filesystem::path> run_render(const Solution& solution, const RenderRequest& request,
                                              const std::filesystem::path& dir);

/// Uncalibrated models get the global albedo scale fit.
EvalReport run_eval(const Solution& estimate, const Solution& reference, const MeasurementBundle* measurements,
                    EvalMode mode);

/// Image size implied by a principal point at the image center.
int image_extent_from_principal(double c);

}  // namespace phomo
