#include "phomo/photometry.hpp"

#include <cmath>
#include <numbers>

namespace phomo {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDegPerRad = 180.0 / kPi;

struct Coefficients {
  double w0, w1;
  std::vector<double> c;
};

Coefficients published_coefficients(ModelKind kind, Body body) {
  // Normalized so that c_0 = 1.
  if (body == Body::kVesta) {
    switch (kind) {
      case ModelKind::kAkimovPlus:
        return {1.57, -9.88e-3, {-1.9219e-2, 2.2193e-4, -1.6245e-6, 4.6468e-9}};
      case ModelKind::kLunarLambert:
        return {0.830, -7.22e-3, {-1.7160e-2, 1.8306e-4, -1.0399e-6, 2.3223e-9}};
      case ModelKind::kMinnaert:
        return {0.554, 4.35e-3, {-1.6910e-2, 1.7807e-4, -9.7674e-7, 2.1063e-9}};
      default:
        break;
    }
  } else {
    switch (kind) {
      case ModelKind::kAkimovPlus:
        return {1.109, -2.85e-3, {-2.2435e-2, 2.1477e-4, -7.5103e-7}};
      case ModelKind::kLunarLambert:
        return {0.896, -8.87e-3, {-2.2118e-2, 2.0912e-4, -6.4209e-7}};
      case ModelKind::kMinnaert:
        return {0.514, 5.09e-3, {-2.2568e-2, 2.2297e-4, -7.3108e-7}};
      default:
        break;
    }
  }
  throw Error(ErrorCode::kConfigError,
              std::string(model_kind_name(kind)) + " has no body preset");
}

// Akimov family disk function. alpha is the exponent of cos(beta) and
// d_alpha its derivative with respect to phase.
DiskEvaluation akimov_disk(double f, double w, double phase, double alpha,
                           double d_alpha) {
  DiskEvaluation out;
  const double sin_p = std::sin(phase);
  const double cos_p = std::cos(phase);
  const double k = kPi / (kPi - phase);
  const double dk = kPi / ((kPi - phase) * (kPi - phase));
  const double C = std::cos(0.5 * phase);
  const double dC = -0.5 * std::sin(0.5 * phase);

  if (sin_p < 1e-9) {
    // Zero phase: gamma = 0 and cos(beta) = cos_e.
    const double A = -0.5 * k * phase;
    const double P = std::pow(w, alpha);
    out.value = C * std::cos(A) * P;
    out.d_cos_e = C * std::cos(A) * alpha * std::pow(w, alpha - 1.0);
    return out;
  }

  const double t = (f / w - cos_p) / sin_p;  // tan(gamma)
  const double gamma = std::atan(t);
  const double S = std::sqrt(1.0 + t * t);  // 1 / cos(gamma)
  const double cos_beta = w * S;
  const double A = k * (gamma - 0.5 * phase);
  const double K = std::cos(A);
  const double P = std::pow(cos_beta, alpha);
  out.value = C * K * P * S;

  const double dt_df = 1.0 / (w * sin_p);
  const double dt_dw = -f / (w * w * sin_p);
  const double dt_dp = (sin_p * sin_p - (f / w - cos_p) * cos_p) / (sin_p * sin_p);
  const double dgamma_dt = 1.0 / (1.0 + t * t);
  const double dS_dt = t / S;
  const double sin_A = std::sin(A);
  const double log_cb = std::log(cos_beta);

  // Partials of each factor with respect to t and the explicit dependence on
  // w (P only) and phase (C, K, P).
  const double dK_dt = -sin_A * k * dgamma_dt;
  const double dK_dp_explicit = -sin_A * (dk * (gamma - 0.5 * phase) - 0.5 * k);
  const double dP_dt = P * alpha * dS_dt / S;
  const double dP_dw_explicit = P * alpha / w;
  const double dP_dp_explicit = P * d_alpha * log_cb;

  const double dv_dt = C * dK_dt * P * S + C * K * dP_dt * S + C * K * P * dS_dt;
  out.d_cos_i = dv_dt * dt_df;
  out.d_cos_e = dv_dt * dt_dw + C * K * dP_dw_explicit * S;
  out.d_phase = dv_dt * dt_dp + dC * K * P * S + C * dK_dp_explicit * P * S +
                C * K * dP_dp_explicit * S;
  return out;
}

}  // namespace

std::string_view model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kAkimov: return "akimov";
    case ModelKind::kMcEwen: return "mcewen";
    case ModelKind::kAkimovPlus: return "akimov_plus";
    case ModelKind::kLunarLambert: return "lunar_lambert";
    case ModelKind::kMinnaert: return "minnaert";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  for (ModelKind k : {ModelKind::kAkimov, ModelKind::kMcEwen,
                      ModelKind::kAkimovPlus, ModelKind::kLunarLambert,
                      ModelKind::kMinnaert}) {
    if (model_kind_name(k) == name) return k;
  }
  throw Error(ErrorCode::kConfigError,
              "unknown reflectance model '" + std::string(name) + "'");
}

std::string_view body_name(Body body) {
  return body == Body::kVesta ? "vesta" : "ceres";
}

Body parse_body(std::string_view name) {
  if (name == "vesta") return Body::kVesta;
  if (name == "ceres") return Body::kCeres;
  throw Error(ErrorCode::kConfigError, "unknown body '" + std::string(name) + "'");
}

ReflectanceModel ReflectanceModel::akimov(bool calibrated) {
  ReflectanceModel m;
  m.kind = ModelKind::kAkimov;
  m.weighting = PhaseWeighting::kNone;
  m.calibrated = calibrated;
  return m;
}

ReflectanceModel ReflectanceModel::mcewen(bool calibrated) {
  ReflectanceModel m;
  m.kind = ModelKind::kMcEwen;
  m.weighting = PhaseWeighting::kExponential;
  m.calibrated = calibrated;
  return m;
}

ReflectanceModel ReflectanceModel::preset(ModelKind kind, Body body,
                                          bool calibrated) {
  Coefficients co = published_coefficients(kind, body);
  ReflectanceModel m;
  m.kind = kind;
  m.weighting = PhaseWeighting::kAffine;
  m.w0 = co.w0;
  m.w1 = co.w1;
  m.c = std::move(co.c);
  m.calibrated = calibrated;
  return m;
}

ReflectanceModel ReflectanceModel::make(ModelKind kind, bool calibrated) {
  switch (kind) {
    case ModelKind::kAkimov: return akimov(calibrated);
    case ModelKind::kMcEwen: return mcewen(calibrated);
    default: return preset(kind, Body::kVesta, calibrated);
  }
}

bool ReflectanceModel::has_phase_function() const {
  return kind == ModelKind::kAkimovPlus || kind == ModelKind::kLunarLambert ||
         kind == ModelKind::kMinnaert;
}

double ReflectanceModel::weight(double phase) const {
  const double deg = phase * kDegPerRad;
  switch (weighting) {
    case PhaseWeighting::kNone: return 1.0;
    case PhaseWeighting::kExponential: return std::exp(-deg / 60.0);
    case PhaseWeighting::kAffine: return w0 + w1 * deg;
  }
  return 1.0;
}

double ReflectanceModel::weight_derivative(double phase) const {
  switch (weighting) {
    case PhaseWeighting::kNone: return 0.0;
    case PhaseWeighting::kExponential:
      return -std::exp(-phase * kDegPerRad / 60.0) * kDegPerRad / 60.0;
    case PhaseWeighting::kAffine: return w1 * kDegPerRad;
  }
  return 0.0;
}

IllumGeometry geometry_from_cosines(double cos_i, double cos_e,
                                    double cos_phase) {
  IllumGeometry g;
  g.cos_i = cos_i;
  g.cos_e = cos_e;
  g.phase = std::acos(std::clamp(cos_phase, -1.0, 1.0));
  const double sin_p = std::sin(g.phase);
  if (sin_p < 1e-9 || cos_e == 0.0) {
    g.photometric_lon = 0.0;
    g.photometric_lat = std::acos(std::clamp(cos_e, -1.0, 1.0));
    return g;
  }
  g.photometric_lon = std::atan((cos_i / cos_e - std::cos(g.phase)) / sin_p);
  g.photometric_lat =
      std::acos(std::clamp(cos_e / std::cos(g.photometric_lon), -1.0, 1.0));
  return g;
}

IllumGeometry illum_geometry(const UnitVec& sun, const UnitVec& emit,
                             const UnitVec& normal) {
  return geometry_from_cosines(sun.dot(normal), emit.dot(normal), sun.dot(emit));
}

DiskEvaluation evaluate_disk(const ReflectanceModel& model, double f, double w,
                             double phase) {
  if (!(f > 0.0)) {
    throw Error(ErrorCode::kNotIlluminated, "cos(incidence) <= 0");
  }
  if (!(w > 0.0)) {
    throw Error(ErrorCode::kNotVisible, "cos(emission) <= 0");
  }
  const double g = model.weight(phase);
  const double dg = model.weight_derivative(phase);
  DiskEvaluation out;
  switch (model.kind) {
    case ModelKind::kMcEwen:
    case ModelKind::kLunarLambert: {
      const double s = f + w;
      const double ls = 2.0 * f / s;  // Lommel-Seeliger term
      out.value = (1.0 - g) * f + g * ls;
      out.d_cos_i = (1.0 - g) + 2.0 * g * w / (s * s);
      out.d_cos_e = -2.0 * g * f / (s * s);
      out.d_phase = (ls - f) * dg;
      return out;
    }
    case ModelKind::kMinnaert: {
      const double fg = std::pow(f, g);
      const double wg1 = std::pow(w, g - 1.0);
      out.value = fg * wg1;
      out.d_cos_i = g * std::pow(f, g - 1.0) * wg1;
      out.d_cos_e = (g - 1.0) * fg * std::pow(w, g - 2.0);
      out.d_phase = out.value * (std::log(f) + std::log(w)) * dg;
      return out;
    }
    case ModelKind::kAkimov: {
      const double q = kPi - phase;
      return akimov_disk(f, w, phase, phase / q, kPi / (q * q));
    }
    case ModelKind::kAkimovPlus: {
      const double q = kPi - phase;
      const double alpha = g * phase / q;
      const double d_alpha = dg * phase / q + g * kPi / (q * q);
      return akimov_disk(f, w, phase, alpha, d_alpha);
    }
  }
  return out;
}

double disk_function(const ReflectanceModel& model, const IllumGeometry& g) {
  return evaluate_disk(model, g.cos_i, g.cos_e, g.phase).value;
}

double phase_function(const ReflectanceModel& model, double phase) {
  if (!model.has_phase_function()) return 1.0;
  const double x = phase * kDegPerRad;
  double acc = 0.0;
  for (auto it = model.c.rbegin(); it != model.c.rend(); ++it) {
    acc = (acc + *it) * x;
  }
  return 1.0 + acc;
}

double phase_function_derivative(const ReflectanceModel& model, double phase) {
  if (!model.has_phase_function() || model.c.empty()) return 0.0;
  const double x = phase * kDegPerRad;
  double acc = 0.0;
  for (std::size_t i = model.c.size(); i-- > 0;) {
    acc = acc * x + static_cast<double>(i + 1) * model.c[i];
  }
  return acc * kDegPerRad;
}

BrightnessEvaluation evaluate_brightness(const ReflectanceModel& model,
                                         const ImagePhotoParams& params,
                                         double albedo, double cos_i,
                                         double cos_e, double phase) {
  const DiskEvaluation d = evaluate_disk(model, cos_i, cos_e, phase);
  BrightnessEvaluation out;
  if (model.calibrated) {
    const double lam = phase_function(model, phase);
    const double dlam = phase_function_derivative(model, phase);
    out.value = albedo * lam * d.value;
    out.d_cos_i = albedo * lam * d.d_cos_i;
    out.d_cos_e = albedo * lam * d.d_cos_e;
    out.d_phase = albedo * (dlam * d.value + lam * d.d_phase);
    out.d_albedo = lam * d.value;
    return out;
  }
  out.value = albedo * params.scale * d.value + params.bias;
  out.d_cos_i = albedo * params.scale * d.d_cos_i;
  out.d_cos_e = albedo * params.scale * d.d_cos_e;
  out.d_phase = albedo * params.scale * d.d_phase;
  out.d_albedo = params.scale * d.value;
  out.d_scale = albedo * d.value;
  out.d_bias = 1.0;
  return out;
}

double predict_brightness(const ReflectanceModel& model,
                          const ImagePhotoParams& params, double albedo,
                          const IllumGeometry& g) {
  return evaluate_brightness(model, params, albedo, g.cos_i, g.cos_e, g.phase)
      .value;
}

}  // namespace phomo
