#include "phomo/solution.hpp"

namespace phomo {

std::optional<std::size_t> LandmarkMap::find(std::uint32_t id) const {
  for (std::size_t j = 0; j < ids.size(); ++j)
    if (ids[j] == id) return j;
  return std::nullopt;
}

std::optional<double> predict_observation(const Solution& s, std::size_t j, std::size_t k) {
  const ImageState& im = s.images[k];
  const Vector3 emit = im.pose.translation - s.map.positions[j];
  if (emit.norm() == 0.0) return std::nullopt;
  const IllumGeometry g = illum_geometry(im.sun, UnitVec(emit), s.map.normals[j]);
  if (g.cos_i <= 0.0 || g.cos_e <= 0.0) return std::nullopt;
  return predict_brightness(s.model, im.photo, s.map.albedos[j], g);
}

}  // namespace phomo
