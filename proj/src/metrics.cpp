#include "phomo/metrics.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>

#include "phomo/kdtree.hpp"

namespace phomo {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double percentile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || sorted[hi] == sorted[lo]) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Image render_solution(const Solution& s, std::size_t k) {
  const ImageState& im = s.images[k];
  return render_view(s.map.positions, s.map.albedos, s.map.normals, im.pose, im.sun, im.intrinsics,
                     s.model, im.photo, im.width, im.height);
}

}  // namespace

double landmark_error(const Vector3& l, const Vector3& ref) { return (l - ref).norm(); }

double normal_error(const UnitVec& n, const UnitVec& ref) {
  // atan2 keeps precision near 0 and 180 degrees.
  const double s = n.vec().cross(ref.vec()).norm();
  const double c = n.vec().dot(ref.vec());
  return std::atan2(s, c) * 180.0 / M_PI;
}

double albedo_error(double a, double ref) { return std::abs(a - ref) / ref; }

double albedo_scale(const std::vector<double>& a, const std::vector<double>& ref) {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    num += a[j] * ref[j];
    den += a[j] * a[j];
  }
  return den > 0.0 ? num / den : 1.0;
}

double photometric_error(const std::vector<double>& predicted, const std::vector<double>& measured) {
  if (predicted.empty() || predicted.size() != measured.size()) {
    throw Error(ErrorCode::kEmptyTrack, "no active observations");
  }
  double sq = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - measured[i];
    sq += d * d;
    mean += measured[i];
  }
  const double n = static_cast<double>(predicted.size());
  return std::sqrt(sq / n) / (mean / n);
}

double psnr(const Image& rendered, const Image& actual, double max_value) {
  if (rendered.width != actual.width || rendered.height != actual.height) {
    throw Error(ErrorCode::kDataError, "image sizes differ");
  }
  double sq = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < actual.pixels.size(); ++i) {
    if (!rendered.valid[i] || !actual.valid[i]) continue;
    const double d = (rendered.pixels[i] - actual.pixels[i]) / max_value;
    sq += d * d;
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::kEmptyMask, "no pixel is valid in both images");
  if (sq == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(static_cast<double>(n) / sq);
}

Summary summarize(const std::vector<double>& values) {
  std::vector<double> v;
  v.reserve(values.size());
  for (double x : values)
    if (!std::isnan(x)) v.push_back(x);
  Summary s;
  s.count = v.size();
  if (v.empty()) {
    s.mean = s.median = s.p95 = kNaN;
    return s;
  }
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  s.median = percentile(v, 0.5);
  s.p95 = percentile(v, 0.95);
  return s;
}

EvalReport evaluate(const Solution& estimate, const Solution& reference,
                    const MeasurementBundle* measurements, const EvalOptions& options) {
  EvalReport rep;
  rep.mode = options.mode;
  const std::size_t n_ref = reference.map.size();

  // Association: assoc[i] is the estimate index for reference landmark i.
  std::vector<std::size_t> assoc(n_ref);
  const bool same_images = estimate.images.size() == reference.images.size();
  if (options.mode == EvalMode::kTruth) {
    if (estimate.map.size() != n_ref) {
      throw Error(ErrorCode::kDataError, "landmark counts differ (" + std::to_string(estimate.map.size()) +
                                             " vs " + std::to_string(n_ref) + ")");
    }
    std::map<std::uint32_t, std::size_t> index;
    for (std::size_t j = 0; j < estimate.map.size(); ++j) index[estimate.map.ids[j]] = j;
    for (std::size_t i = 0; i < n_ref; ++i) {
      auto it = index.find(reference.map.ids[i]);
      if (it == index.end()) {
        throw Error(ErrorCode::kDataError, "landmark id " + std::to_string(reference.map.ids[i]) +
                                               " missing from the estimate");
      }
      assoc[i] = it->second;
    }
    std::vector<Vector3> src, dst;
    if (same_images) {
      for (std::size_t k = 0; k < reference.images.size(); ++k) {
        src.push_back(estimate.images[k].pose.translation);
        dst.push_back(reference.images[k].pose.translation);
      }
    }
    for (std::size_t i = 0; i < n_ref; ++i) {
      src.push_back(estimate.map.positions[assoc[i]]);
      dst.push_back(reference.map.positions[i]);
    }
    rep.alignment = align_sim3(src, dst);
  } else {
    if (same_images && reference.images.size() >= 3) {
      std::vector<Vector3> src, dst;
      for (std::size_t k = 0; k < reference.images.size(); ++k) {
        src.push_back(estimate.images[k].pose.translation);
        dst.push_back(reference.images[k].pose.translation);
      }
      try {
        rep.alignment = align_sim3(src, dst);
      } catch (const Error&) {
        rep.alignment = Sim3{};
      }
    }
    std::vector<Vector3> moved;
    moved.reserve(estimate.map.size());
    for (const auto& p : estimate.map.positions) moved.push_back(rep.alignment * p);
    if (moved.empty()) throw Error(ErrorCode::kDataError, "estimate has no landmarks");
    const KdTree tree(moved);
    for (std::size_t i = 0; i < n_ref; ++i) assoc[i] = tree.knn(reference.map.positions[i], 1).front();
  }

  const Sim3& S = rep.alignment;
  std::vector<double> est_albedo(n_ref), ref_albedo(n_ref);
  for (std::size_t i = 0; i < n_ref; ++i) {
    est_albedo[i] = estimate.map.albedos[assoc[i]];
    ref_albedo[i] = reference.map.albedos[i];
  }
  rep.albedo_scale = options.fit_albedo_scale ? albedo_scale(est_albedo, ref_albedo) : 1.0;

  // Photometric error per estimated landmark, from the measurements.
  std::map<std::uint32_t, double> photometric;
  if (measurements) {
    for (const Track& t : measurements->tracks) {
      const auto j = estimate.map.find(t.landmark);
      if (!j) continue;
      std::vector<double> pred, meas;
      for (const auto& o : t.observations) {
        if (o.image >= estimate.images.size()) continue;
        if (const auto p = predict_observation(estimate, *j, o.image)) {
          pred.push_back(*p);
          meas.push_back(o.brightness);
        }
      }
      if (!pred.empty()) photometric[t.landmark] = photometric_error(pred, meas);
    }
  }

  rep.landmark_ids = reference.map.ids;
  for (std::size_t i = 0; i < n_ref; ++i) {
    const std::size_t j = assoc[i];
    const Vector3 l = S * estimate.map.positions[j];
    const UnitVec n(S.rotation * estimate.map.normals[j].vec());
    rep.landmark.push_back(landmark_error(l, reference.map.positions[i]));
    rep.normal_deg.push_back(normal_error(n, reference.map.normals[i]));
    rep.albedo.push_back(albedo_error(rep.albedo_scale * est_albedo[i], ref_albedo[i]));
    rep.height.push_back(std::abs((l - reference.map.positions[i]).dot(reference.map.normals[i].vec())));
    auto it = photometric.find(estimate.map.ids[j]);
    rep.photometric.push_back(it == photometric.end() ? kNaN : it->second);
  }

  if (options.compute_psnr && same_images) {
    for (std::size_t k = 0; k < reference.images.size(); ++k) {
      const ImageState& ri = reference.images[k];
      if (ri.width <= 0 || ri.height <= 0) continue;
      double value = kNaN;
      try {
        const Image actual = render_solution(reference, k);
        Image rendered = render_solution(estimate, k);
        double max_value = 0.0;
        for (std::size_t p = 0; p < actual.pixels.size(); ++p)
          if (actual.valid[p]) max_value = std::max(max_value, actual.pixels[p]);
        if (max_value > 0.0) value = psnr(rendered, actual, max_value);
      } catch (const Error&) {
        // Views that cannot be rendered report NaN.
      }
      rep.psnr_db.push_back(value);
    }
  }
  return rep;
}

void write_report(std::ostream& out, const EvalReport& r) {
  out << "# phomo eval report v1\n";
  out << "# mode\t" << (r.mode == EvalMode::kTruth ? "truth" : "baseline") << "\n";
  out << "# alignment_scale\t" << format_double(r.alignment.scale) << "\n";
  out << "# albedo_scale\t" << format_double(r.albedo_scale) << "\n";
  out << "landmark\tid\tposition_error\tnormal_error_deg\talbedo_error\tphotometric_error\theight_error\n";
  for (std::size_t i = 0; i < r.landmark.size(); ++i) {
    out << "landmark\t" << r.landmark_ids[i] << '\t' << format_double(r.landmark[i]) << '\t'
        << format_double(r.normal_deg[i]) << '\t' << format_double(r.albedo[i]) << '\t'
        << format_double(r.photometric[i]) << '\t' << format_double(r.height[i]) << '\n';
  }
  out << "image\tid\tpsnr_db\n";
  for (std::size_t k = 0; k < r.psnr_db.size(); ++k) {
    out << "image\t" << k << '\t' << format_double(r.psnr_db[k]) << '\n';
  }
  out << "summary\tmetric\tmean\tmedian\tp95\tcount\n";
  auto row = [&](const char* name, const Summary& s) {
    out << "summary\t" << name << '\t' << format_double(s.mean) << '\t' << format_double(s.median)
        << '\t' << format_double(s.p95) << '\t' << s.count << '\n';
  };
  row("position_error", r.landmark_summary());
  row("normal_error_deg", r.normal_summary());
  row("albedo_error", r.albedo_summary());
  row("photometric_error", r.photometric_summary());
  row("height_error", r.height_summary());
  row("psnr_db", r.psnr_summary());
}

}  // namespace phomo
