#pragma once

// Disk-resolved reflectance models for airless bodies.
//
// Angles: incidence, emission and phase are radians everywhere in the API.
// The phase weighting g(phase) and the phase polynomial Lambda(phase) are
// evaluated with the phase angle in degrees, which is the unit their
// published coefficients are fit in.

#include <string>
#include <string_view>
#include <vector>

#include "phomo/manifold.hpp"

namespace phomo {

enum class ModelKind { kAkimov, kMcEwen, kAkimovPlus, kLunarLambert, kMinnaert };

/// How g(phase) is computed.
enum class PhaseWeighting {
  kNone,         // Akimov: no weighting term
  kExponential,  // exp(-phase_deg / 60)
  kAffine,       // w0 + w1 * phase_deg
};

enum class Body { kVesta, kCeres };

std::string_view model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);
std::string_view body_name(Body body);
Body parse_body(std::string_view name);

struct ReflectanceModel {
  ModelKind kind = ModelKind::kLunarLambert;
  PhaseWeighting weighting = PhaseWeighting::kAffine;
  double w0 = 0.0;
  double w1 = 0.0;
  /// c_1..c_m of Lambda(phase) = 1 + sum_i c_i phase_deg^i. c_0 = 1 is implicit.
  std::vector<double> c;
  bool calibrated = true;

  /// Parameter-free Akimov or McEwen model.
  static ReflectanceModel akimov(bool calibrated = false);
  static ReflectanceModel mcewen(bool calibrated = false);
  /// Akimov+, Lunar-Lambert or Minnaert with the published body coefficients.
  static ReflectanceModel preset(ModelKind kind, Body body,
                                 bool calibrated = true);
  /// Default construction for a kind: parameter-free kinds take no
  /// coefficients, the others use the Vesta preset.
  static ReflectanceModel make(ModelKind kind, bool calibrated);

  bool has_phase_function() const;
  double weight(double phase) const;
  /// dg / dphase (phase in radians).
  double weight_derivative(double phase) const;
};

struct IllumGeometry {
  double cos_i = 1.0;
  double cos_e = 1.0;
  double phase = 0.0;            // radians
  double photometric_lat = 0.0;  // beta, radians
  double photometric_lon = 0.0;  // gamma, radians
};

/// Per-image parameters of the uncalibrated brightness model.
struct ImagePhotoParams {
  double scale = 1.0;
  double bias = 0.0;
  double solar_irradiance = 1.0;
};

/// Computes incidence, emission and phase from unit sun, emission (surface to
/// observer) and normal directions, plus the photometric latitude/longitude.
IllumGeometry illum_geometry(const UnitVec& sun, const UnitVec& emit,
                             const UnitVec& normal);
/// Same from the three cosines directly.
IllumGeometry geometry_from_cosines(double cos_i, double cos_e,
                                    double cos_phase);

/// Disk function value with partial derivatives in (cos_i, cos_e, phase).
struct DiskEvaluation {
  double value = 0.0;
  double d_cos_i = 0.0;
  double d_cos_e = 0.0;
  double d_phase = 0.0;
};

/// Throws NotIlluminated / NotVisible outside cos_i > 0, cos_e > 0.
double disk_function(const ReflectanceModel& model, const IllumGeometry& g);
DiskEvaluation evaluate_disk(const ReflectanceModel& model, double cos_i,
                             double cos_e, double phase);

/// Lambda(phase); identically 1 for Akimov and McEwen.
double phase_function(const ReflectanceModel& model, double phase);
double phase_function_derivative(const ReflectanceModel& model, double phase);

/// Calibrated: a Lambda d. Uncalibrated: a scale d + bias.
double predict_brightness(const ReflectanceModel& model,
                          const ImagePhotoParams& params, double albedo,
                          const IllumGeometry& g);

/// Brightness and its partials, used by the photoclinometry factor.
struct BrightnessEvaluation {
  double value = 0.0;
  double d_cos_i = 0.0;
  double d_cos_e = 0.0;
  double d_phase = 0.0;
  double d_albedo = 0.0;
  double d_scale = 0.0;
  double d_bias = 0.0;
};

BrightnessEvaluation evaluate_brightness(const ReflectanceModel& model,
                                         const ImagePhotoParams& params,
                                         double albedo, double cos_i,
                                         double cos_e, double phase);

}  // namespace phomo
