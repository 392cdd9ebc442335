#pragma once

// File formats: measurement bundles, PLY landmark maps, per-image tables,
// solution directories, 16-bit PGM renders and optimizer traces. Formats are
// described in docs/formats.md. Doubles are written with 17 significant
// digits so every file round-trips exactly.

#include <filesystem>
#include <fstream>
#include <string>

#include "phomo/graph.hpp"
#include "phomo/solution.hpp"
#include "phomo/synth.hpp"

namespace phomo {

/// Throws DataError with the offending line number.
MeasurementBundle read_bundle(std::istream& in);
MeasurementBundle read_bundle(const std::filesystem::path& path);
void write_bundle(std::ostream& out, const MeasurementBundle& bundle);
void write_bundle(const std::filesystem::path& path, const MeasurementBundle& bundle);

/// ASCII PLY with per-vertex id x y z nx ny nz albedo.
void write_ply(std::ostream& out, const LandmarkMap& map);
LandmarkMap read_ply(std::istream& in);

/// Tab-separated per-image intrinsics, size, pose, body-frame sun, scale, bias.
void write_image_table(std::ostream& out, const std::vector<ImageState>& images);
std::vector<ImageState> read_image_table(std::istream& in);

/// Reflectance model as JSON text.
std::string model_to_json(const ReflectanceModel& model);
ReflectanceModel model_from_json(const std::string& text);

/// map.ply + images.tsv + model.json in `dir`.
void write_solution(const std::filesystem::path& dir, const Solution& solution);
Solution read_solution(const std::filesystem::path& dir);

/// The ground truth of a synthetic scene as a Solution.
Solution scene_solution(const SyntheticScene& scene);

/// Binary 16-bit PGM of pixels / max_value (clamped to [0, 1]), an 8-bit
/// validity mask alongside as <stem>_mask.pgm, and a JSON sidecar
/// <stem>.json with `metadata` merged in (a JSON object text).
void write_render(const std::filesystem::path& pgm_path, const Image& image, double max_value,
                  const std::string& metadata = "{}");
/// Reads a render written by write_render; pixels are rescaled by the
/// sidecar's max_value.
Image read_render(const std::filesystem::path& pgm_path);

/// One JSON object per attempted LM step.
void write_trace(std::ostream& out, const OptimizerReport& report);

/// Opens a file for writing, throwing IoError on failure.
std::ofstream open_output(const std::filesystem::path& path);
std::ifstream open_input(const std::filesystem::path& path);

}  // namespace phomo
