#include "phomo/io.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace phomo {
namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void data_error(int line, const std::string& what) {
  throw Error(ErrorCode::kDataError, "line " + std::to_string(line) + ": " + what);
}

template <typename T>
T take(std::istringstream& ss, int line, const char* what) {
  T v;
  if (!(ss >> v)) data_error(line, std::string("expected ") + what);
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v)) data_error(line, std::string("non-finite ") + what);
  }
  return v;
}

// Reads a numeric token that must be a non-negative integer id.
std::uint32_t take_id(std::istringstream& ss, int line, const char* what) {
  long long v;
  if (!(ss >> v) || v < 0 || v > 0xffffffffLL) data_error(line, std::string("expected ") + what);
  return static_cast<std::uint32_t>(v);
}

void expect_end(std::istringstream& ss, int line) {
  std::string extra;
  if (ss >> extra) data_error(line, "unexpected trailing token '" + extra + "'");
}

Matrix3 checked_rotation(const Matrix3& R, int line) {
  if ((R.transpose() * R - Matrix3::Identity()).norm() > 1e-6 || R.determinant() < 0.0) {
    data_error(line, "rotation is not orthonormal");
  }
  return R;
}

void write_pgm(const std::filesystem::path& path, int w, int h, int maxval,
               const std::vector<std::uint16_t>& values) {
  auto out = open_output(path);
  out << "P5\n" << w << ' ' << h << '\n' << maxval << '\n';
  for (std::uint16_t v : values) {
    if (maxval > 255) {
      out.put(static_cast<char>(v >> 8));
      out.put(static_cast<char>(v & 0xff));
    } else {
      out.put(static_cast<char>(v));
    }
  }
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
}

std::vector<std::uint16_t> read_pgm(const std::filesystem::path& path, int& w, int& h) {
  auto in = open_input(path);
  std::string magic;
  int maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) {
    throw Error(ErrorCode::kDataError, path.string() + ": not a binary PGM");
  }
  in.get();
  std::vector<std::uint16_t> out(static_cast<std::size_t>(w) * h);
  for (auto& v : out) {
    const int hi = in.get();
    if (maxval > 255) {
      const int lo = in.get();
      v = static_cast<std::uint16_t>((hi << 8) | lo);
    } else {
      v = static_cast<std::uint16_t>(hi);
    }
  }
  if (!in) throw Error(ErrorCode::kDataError, path.string() + ": truncated PGM");
  return out;
}

}  // namespace

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  return in;
}

MeasurementBundle read_bundle(std::istream& in) {
  MeasurementBundle b;
  std::map<std::uint32_t, CameraIntrinsics> cameras;
  std::map<std::uint32_t, Pose> poses;
  std::map<std::uint32_t, SunMeasurement> suns;
  std::set<std::uint32_t> track_ids, landmark_ids;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    std::istringstream ss(text);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "CAMERA") {
      const auto id = take_id(ss, line, "image id");
      CameraIntrinsics K;
      K.fx = take<double>(ss, line, "fx");
      K.fy = take<double>(ss, line, "fy");
      K.cx = take<double>(ss, line, "cx");
      K.cy = take<double>(ss, line, "cy");
      expect_end(ss, line);
      if (K.fx <= 0 || K.fy <= 0) data_error(line, "focal length must be positive");
      if (!cameras.emplace(id, K).second) data_error(line, "duplicate CAMERA " + std::to_string(id));
    } else if (tag == "POSE") {
      const auto id = take_id(ss, line, "image id");
      Matrix3 R;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) R(r, c) = take<double>(ss, line, "rotation entry");
      Vector3 t;
      for (int i = 0; i < 3; ++i) t(i) = take<double>(ss, line, "translation entry");
      expect_end(ss, line);
      if (!poses.emplace(id, Pose(checked_rotation(R, line), t)).second) {
        data_error(line, "duplicate POSE " + std::to_string(id));
      }
    } else if (tag == "SUN") {
      const auto id = take_id(ss, line, "image id");
      Vector3 s;
      for (int i = 0; i < 3; ++i) s(i) = take<double>(ss, line, "sun component");
      const double sigma = take<double>(ss, line, "sigma");
      expect_end(ss, line);
      if (s.norm() == 0.0) data_error(line, "zero sun vector");
      if (sigma <= 0.0) data_error(line, "sun sigma must be positive");
      if (!suns.emplace(id, SunMeasurement{UnitVec(s), sigma}).second) {
        data_error(line, "duplicate SUN " + std::to_string(id));
      }
    } else if (tag == "TRACK") {
      Track t;
      t.landmark = take_id(ss, line, "landmark id");
      const auto n = take_id(ss, line, "observation count");
      for (std::uint32_t i = 0; i < n; ++i) {
        Observation o;
        o.image = take_id(ss, line, "image id");
        o.pixel.x() = take<double>(ss, line, "u");
        o.pixel.y() = take<double>(ss, line, "v");
        o.brightness = take<double>(ss, line, "intensity");
        t.observations.push_back(o);
      }
      expect_end(ss, line);
      if (!track_ids.insert(t.landmark).second) {
        data_error(line, "duplicate TRACK " + std::to_string(t.landmark));
      }
      b.tracks.push_back(std::move(t));
    } else if (tag == "LANDMARK") {
      const auto id = take_id(ss, line, "landmark id");
      Vector3 p;
      for (int i = 0; i < 3; ++i) p(i) = take<double>(ss, line, "coordinate");
      expect_end(ss, line);
      if (!landmark_ids.insert(id).second) data_error(line, "duplicate LANDMARK " + std::to_string(id));
      b.landmarks.emplace_back(id, p);
    } else if (tag == "NOISE") {
      NoiseModel n;
      n.pixel_sigma = take<double>(ss, line, "pixel sigma");
      n.brightness_sigma = take<double>(ss, line, "brightness sigma");
      n.sun_sigma = take<double>(ss, line, "sun sigma");
      expect_end(ss, line);
      b.noise = n;
    } else {
      data_error(line, "unknown record '" + tag + "'");
    }
  }

  const std::size_t K = cameras.size();
  for (std::uint32_t k = 0; k < K; ++k) {
    const std::string id = std::to_string(k);
    if (!cameras.count(k)) throw Error(ErrorCode::kDataError, "image ids must be 0.." + std::to_string(K - 1));
    if (!poses.count(k)) throw Error(ErrorCode::kDataError, "missing POSE for image " + id);
    if (!suns.count(k)) throw Error(ErrorCode::kDataError, "missing SUN for image " + id);
    b.images.push_back({cameras[k], poses[k], suns[k]});
  }
  if (poses.size() != K || suns.size() != K) {
    throw Error(ErrorCode::kDataError, "POSE/SUN records reference unknown images");
  }
  for (const auto& t : b.tracks) {
    std::set<std::uint32_t> seen;
    for (const auto& o : t.observations) {
      if (o.image >= K) {
        throw Error(ErrorCode::kDataError, "track " + std::to_string(t.landmark) + " references unknown image " +
                                               std::to_string(o.image));
      }
      if (!seen.insert(o.image).second) {
        throw Error(ErrorCode::kDataError, "track " + std::to_string(t.landmark) + " observes image " +
                                               std::to_string(o.image) + " twice");
      }
    }
  }
  return b;
}

MeasurementBundle read_bundle(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_bundle(in);
}

void write_bundle(std::ostream& out, const MeasurementBundle& b) {
  out << "# phomo measurement bundle v1\n";
  if (b.noise) {
    out << "NOISE " << fmt(b.noise->pixel_sigma) << ' ' << fmt(b.noise->brightness_sigma) << ' '
        << fmt(b.noise->sun_sigma) << '\n';
  }
  for (std::size_t k = 0; k < b.images.size(); ++k) {
    const auto& im = b.images[k];
    out << "CAMERA " << k << ' ' << fmt(im.intrinsics.fx) << ' ' << fmt(im.intrinsics.fy) << ' '
        << fmt(im.intrinsics.cx) << ' ' << fmt(im.intrinsics.cy) << '\n';
  }
  for (std::size_t k = 0; k < b.images.size(); ++k) {
    const Pose& T = b.images[k].pose;
    out << "POSE " << k;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out << ' ' << fmt(T.rotation(r, c));
    for (int i = 0; i < 3; ++i) out << ' ' << fmt(T.translation(i));
    out << '\n';
  }
  for (std::size_t k = 0; k < b.images.size(); ++k) {
    const auto& s = b.images[k].sun;
    out << "SUN " << k << ' ' << fmt(s.direction.vec().x()) << ' ' << fmt(s.direction.vec().y()) << ' '
        << fmt(s.direction.vec().z()) << ' ' << fmt(s.sigma) << '\n';
  }
  for (const auto& [id, p] : b.landmarks) {
    out << "LANDMARK " << id << ' ' << fmt(p.x()) << ' ' << fmt(p.y()) << ' ' << fmt(p.z()) << '\n';
  }
  for (const auto& t : b.tracks) {
    out << "TRACK " << t.landmark << ' ' << t.observations.size();
    for (const auto& o : t.observations) {
      out << "  " << o.image << ' ' << fmt(o.pixel.x()) << ' ' << fmt(o.pixel.y()) << ' '
          << fmt(o.brightness);
    }
    out << '\n';
  }
}

void write_bundle(const std::filesystem::path& path, const MeasurementBundle& bundle) {
  auto out = open_output(path);
  write_bundle(out, bundle);
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
}

void write_ply(std::ostream& out, const LandmarkMap& m) {
  out << "ply\nformat ascii 1.0\ncomment phomo landmark map\n";
  out << "element vertex " << m.size() << '\n';
  out << "property uint id\n";
  for (const char* p : {"x", "y", "z", "nx", "ny", "nz", "albedo"}) out << "property double " << p << '\n';
  out << "end_header\n";
  for (std::size_t j = 0; j < m.size(); ++j) {
    const Vector3& p = m.positions[j];
    const Vector3& n = m.normals[j].vec();
    out << m.ids[j] << ' ' << fmt(p.x()) << ' ' << fmt(p.y()) << ' ' << fmt(p.z()) << ' ' << fmt(n.x())
        << ' ' << fmt(n.y()) << ' ' << fmt(n.z()) << ' ' << fmt(m.albedos[j]) << '\n';
  }
}

LandmarkMap read_ply(std::istream& in) {
  std::string text;
  int line = 0;
  std::size_t count = 0;
  std::vector<std::string> props;
  bool header_ok = false;
  while (std::getline(in, text)) {
    ++line;
    std::istringstream ss(text);
    std::string tag;
    ss >> tag;
    if (line == 1 && tag != "ply") data_error(line, "not a PLY file");
    if (tag == "format") {
      std::string f;
      ss >> f;
      if (f != "ascii") data_error(line, "only ASCII PLY is supported");
    } else if (tag == "element") {
      std::string name;
      ss >> name >> count;
      if (name != "vertex") data_error(line, "unexpected element '" + name + "'");
    } else if (tag == "property") {
      std::string type, name;
      ss >> type >> name;
      props.push_back(name);
    } else if (tag == "end_header") {
      header_ok = true;
      break;
    }
  }
  const std::vector<std::string> expected = {"id", "x", "y", "z", "nx", "ny", "nz", "albedo"};
  if (!header_ok || props != expected) data_error(line, "expected properties id x y z nx ny nz albedo");
  LandmarkMap m;
  for (std::size_t j = 0; j < count; ++j) {
    if (!std::getline(in, text)) data_error(line, "truncated vertex list");
    ++line;
    std::istringstream ss(text);
    m.ids.push_back(take_id(ss, line, "id"));
    Vector3 p, n;
    for (int i = 0; i < 3; ++i) p(i) = take<double>(ss, line, "coordinate");
    for (int i = 0; i < 3; ++i) n(i) = take<double>(ss, line, "normal");
    const double a = take<double>(ss, line, "albedo");
    if (n.norm() == 0.0) data_error(line, "zero normal");
    m.positions.push_back(p);
    m.normals.emplace_back(n);
    m.albedos.push_back(a);
  }
  return m;
}

void write_image_table(std::ostream& out, const std::vector<ImageState>& images) {
  out << "id\tfx\tfy\tcx\tcy\twidth\theight";
  for (const char* c : {"r11", "r12", "r13", "r21", "r22", "r23", "r31", "r32", "r33", "tx", "ty", "tz",
                        "sx", "sy", "sz", "scale", "bias"}) {
    out << '\t' << c;
  }
  out << '\n';
  for (std::size_t k = 0; k < images.size(); ++k) {
    const ImageState& im = images[k];
    out << k << '\t' << fmt(im.intrinsics.fx) << '\t' << fmt(im.intrinsics.fy) << '\t' << fmt(im.intrinsics.cx)
        << '\t' << fmt(im.intrinsics.cy) << '\t' << im.width << '\t' << im.height;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out << '\t' << fmt(im.pose.rotation(r, c));
    for (int i = 0; i < 3; ++i) out << '\t' << fmt(im.pose.translation(i));
    for (int i = 0; i < 3; ++i) out << '\t' << fmt(im.sun.vec()(i));
    out << '\t' << fmt(im.photo.scale) << '\t' << fmt(im.photo.bias) << '\n';
  }
}

std::vector<ImageState> read_image_table(std::istream& in) {
  std::string text;
  int line = 0;
  std::vector<ImageState> images;
  while (std::getline(in, text)) {
    ++line;
    if (line == 1 || text.empty()) continue;
    std::istringstream ss(text);
    const auto id = take_id(ss, line, "id");
    if (id != images.size()) data_error(line, "image ids must be consecutive from 0");
    ImageState im;
    im.intrinsics.fx = take<double>(ss, line, "fx");
    im.intrinsics.fy = take<double>(ss, line, "fy");
    im.intrinsics.cx = take<double>(ss, line, "cx");
    im.intrinsics.cy = take<double>(ss, line, "cy");
    im.width = take<int>(ss, line, "width");
    im.height = take<int>(ss, line, "height");
    Matrix3 R;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) R(r, c) = take<double>(ss, line, "rotation entry");
    Vector3 t, s;
    for (int i = 0; i < 3; ++i) t(i) = take<double>(ss, line, "translation");
    for (int i = 0; i < 3; ++i) s(i) = take<double>(ss, line, "sun");
    im.pose = Pose(checked_rotation(R, line), t);
    if (s.norm() == 0.0) data_error(line, "zero sun vector");
    im.sun = UnitVec(s);
    im.photo.scale = take<double>(ss, line, "scale");
    im.photo.bias = take<double>(ss, line, "bias");
    expect_end(ss, line);
    images.push_back(im);
  }
  return images;
}

std::string model_to_json(const ReflectanceModel& m) {
  const char* weighting = m.weighting == PhaseWeighting::kNone          ? "none"
                          : m.weighting == PhaseWeighting::kExponential ? "exponential"
                                                                        : "affine";
  const json j = {{"kind", std::string(model_kind_name(m.kind))},
                  {"weighting", weighting},
                  {"w0", m.w0},
                  {"w1", m.w1},
                  {"phase_coefficients", m.c},
                  {"calibrated", m.calibrated}};
  return j.dump(2);
}

ReflectanceModel model_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    ReflectanceModel m;
    m.kind = parse_model_kind(j.at("kind").get<std::string>());
    const std::string w = j.at("weighting").get<std::string>();
    if (w == "none") {
      m.weighting = PhaseWeighting::kNone;
    } else if (w == "exponential") {
      m.weighting = PhaseWeighting::kExponential;
    } else if (w == "affine") {
      m.weighting = PhaseWeighting::kAffine;
    } else {
      throw Error(ErrorCode::kDataError, "unknown weighting '" + w + "'");
    }
    m.w0 = j.at("w0").get<double>();
    m.w1 = j.at("w1").get<double>();
    m.c = j.at("phase_coefficients").get<std::vector<double>>();
    m.calibrated = j.at("calibrated").get<bool>();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kDataError, std::string("model JSON: ") + e.what());
  }
}

void write_solution(const std::filesystem::path& dir, const Solution& s) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_output(dir / "map.ply");
    write_ply(out, s.map);
  }
  {
    auto out = open_output(dir / "images.tsv");
    write_image_table(out, s.images);
  }
  auto out = open_output(dir / "model.json");
  out << model_to_json(s.model) << '\n';
}

Solution read_solution(const std::filesystem::path& dir) {
  Solution s;
  {
    auto in = open_input(dir / "map.ply");
    s.map = read_ply(in);
  }
  {
    auto in = open_input(dir / "images.tsv");
    s.images = read_image_table(in);
  }
  auto in = open_input(dir / "model.json");
  std::stringstream ss;
  ss << in.rdbuf();
  s.model = model_from_json(ss.str());
  return s;
}

Solution scene_solution(const SyntheticScene& scene) {
  Solution s;
  s.model = scene.model;
  for (std::size_t j = 0; j < scene.landmarks.size(); ++j) {
    s.map.ids.push_back(static_cast<std::uint32_t>(j));
    s.map.positions.push_back(scene.landmarks[j]);
    s.map.normals.push_back(scene.normals[j]);
    s.map.albedos.push_back(scene.albedos[j]);
  }
  for (std::size_t k = 0; k < scene.poses.size(); ++k) {
    s.images.push_back({scene.intrinsics, scene.poses[k], scene.suns[k], scene.photo[k], scene.width,
                        scene.height});
  }
  return s;
}

void write_render(const std::filesystem::path& pgm_path, const Image& image, double max_value,
                  const std::string& metadata) {
  if (!(max_value > 0.0)) throw Error(ErrorCode::kDataError, "render max_value must be positive");
  std::vector<std::uint16_t> px(image.pixels.size()), mask(image.pixels.size());
  for (std::size_t i = 0; i < px.size(); ++i) {
    const double v = image.valid[i] ? std::clamp(image.pixels[i] / max_value, 0.0, 1.0) : 0.0;
    px[i] = static_cast<std::uint16_t>(std::lround(v * 65535.0));
    mask[i] = image.valid[i] ? 255 : 0;
  }
  write_pgm(pgm_path, image.width, image.height, 65535, px);
  std::filesystem::path mask_path = pgm_path;
  mask_path.replace_filename(pgm_path.stem().string() + "_mask.pgm");
  write_pgm(mask_path, image.width, image.height, 255, mask);

  json side;
  try {
    side = json::parse(metadata);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kDataError, std::string("render metadata: ") + e.what());
  }
  side["width"] = image.width;
  side["height"] = image.height;
  side["max_value"] = max_value;
  side["valid_pixels"] = image.valid_count();
  side["mask"] = mask_path.filename().string();
  std::filesystem::path side_path = pgm_path;
  side_path.replace_extension(".json");
  auto out = open_output(side_path);
  out << side.dump(2) << '\n';
}

Image read_render(const std::filesystem::path& pgm_path) {
  std::filesystem::path side_path = pgm_path;
  side_path.replace_extension(".json");
  auto in = open_input(side_path);
  json side;
  try {
    side = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kDataError, std::string("render sidecar: ") + e.what());
  }
  const double max_value = side.at("max_value").get<double>();
  int w = 0, h = 0, mw = 0, mh = 0;
  const auto px = read_pgm(pgm_path, w, h);
  const auto mask = read_pgm(pgm_path.parent_path() / side.at("mask").get<std::string>(), mw, mh);
  if (mw != w || mh != h) throw Error(ErrorCode::kDataError, "mask size differs from image");
  Image img(w, h);
  for (std::size_t i = 0; i < px.size(); ++i) {
    img.valid[i] = mask[i] != 0;
    img.pixels[i] = img.valid[i] ? px[i] / 65535.0 * max_value : 0.0;
  }
  return img;
}

void write_trace(std::ostream& out, const OptimizerReport& report) {
  for (const auto& a : report.attempts) {
    const json j = {{"iteration", a.iteration}, {"cost", a.cost}, {"lambda", a.lambda}, {"accepted", a.accepted}};
    out << j.dump() << '\n';
  }
}

}  // namespace phomo
