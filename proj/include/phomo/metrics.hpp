#pragma once

// Reconstruction error metrics and the evaluation report.

#include <iosfwd>
#include <string>
#include <vector>

#include "phomo/init.hpp"
#include "phomo/solution.hpp"
#include "phomo/synth.hpp"

namespace phomo {

/// |l - l_ref|
double landmark_error(const Vector3& l, const Vector3& ref);
/// Angle between unit normals in degrees.
double normal_error(const UnitVec& n, const UnitVec& ref);
/// |a - a_ref| / a_ref
double albedo_error(double a, double ref);
/// Scale s minimizing sum (s a - a_ref)^2.
double albedo_scale(const std::vector<double>& a, const std::vector<double>& ref);
/// RMS(predicted - measured) / mean(measured). Throws EmptyTrack.
double photometric_error(const std::vector<double>& predicted,
                         const std::vector<double>& measured);
/// 10 log10(1 / MSE) over pixels valid in both images, after dividing by
/// `max_value`. Identical images give +infinity. Throws EmptyMask.
double psnr(const Image& rendered, const Image& actual, double max_value);

struct Summary {
  double mean = 0.0;
  double median = 0.0;
  double p95 = 0.0;
  std::size_t count = 0;
};
/// NaN entries are skipped; percentiles interpolate linearly.
Summary summarize(const std::vector<double>& values);

enum class EvalMode { kTruth, kBaseline };

struct EvalReport {
  EvalMode mode = EvalMode::kTruth;
  Sim3 alignment;           // estimate -> reference frame
  double albedo_scale = 1;  // applied to estimated albedos
  std::vector<std::uint32_t> landmark_ids;  // reference ids
  std::vector<double> landmark;    // length units
  std::vector<double> normal_deg;
  std::vector<double> albedo;      // fraction
  std::vector<double> photometric; // fraction; NaN without measurements
  std::vector<double> height;      // |(l - l_ref) . n_ref|
  std::vector<double> psnr_db;     // per image; +inf for identical renders

  Summary landmark_summary() const { return summarize(landmark); }
  Summary normal_summary() const { return summarize(normal_deg); }
  Summary albedo_summary() const { return summarize(albedo); }
  Summary photometric_summary() const { return summarize(photometric); }
  Summary height_summary() const { return summarize(height); }
  Summary psnr_summary() const { return summarize(psnr_db); }
};

struct EvalOptions {
  EvalMode mode = EvalMode::kTruth;
  /// Fit a global albedo scale before albedo errors (uncalibrated models).
  bool fit_albedo_scale = false;
  /// Render both solutions at every image and report PSNR.
  bool compute_psnr = true;
};

/// Aligns `estimate` onto `reference` and computes every metric.
/// Truth mode associates landmarks by id and requires identical id sets
/// (DataError otherwise); alignment uses camera centers and landmarks.
/// Baseline mode associates each reference landmark with the nearest
/// estimated landmark and aligns on camera centers when both sides have
/// the same images. Photometric errors use `measurements` when given.
EvalReport evaluate(const Solution& estimate, const Solution& reference,
                    const MeasurementBundle* measurements, const EvalOptions& options);

/// Per-landmark table followed by per-image PSNR and aggregate rows; see
/// docs/formats.md.
void write_report(std::ostream& out, const EvalReport& report);

}  // namespace phomo
