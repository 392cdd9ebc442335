#include "phomo/values.hpp"

#include <algorithm>

namespace phomo {

int local_dim(VariableKind kind) {
  switch (kind) {
    case VariableKind::kPose: return 6;
    case VariableKind::kLandmark: return 3;
    case VariableKind::kNormal:
    case VariableKind::kSunDir: return 2;
    case VariableKind::kAlbedo:
    case VariableKind::kImageScale:
    case VariableKind::kImageBias: return 1;
  }
  return 0;
}

std::string to_string(const VariableKey& key) {
  static constexpr const char* kNames[] = {"pose", "landmark", "normal", "albedo",
                                           "sun", "scale", "bias"};
  return std::string(kNames[static_cast<int>(key.kind)]) + "#" +
         std::to_string(key.index);
}

VariableValue retract(VariableKind kind, const VariableValue& value,
                      const Eigen::Ref<const Eigen::VectorXd>& delta) {
  switch (kind) {
    case VariableKind::kPose:
      return pose_retract(std::get<Pose>(value), Vector6(delta.head<6>()));
    case VariableKind::kLandmark:
      return Vector3(std::get<Vector3>(value) + delta.head<3>());
    case VariableKind::kNormal:
    case VariableKind::kSunDir:
      return s2_retract(std::get<UnitVec>(value), Vector2(delta.head<2>()));
    case VariableKind::kAlbedo:
      return std::max(std::get<double>(value) + delta[0], kMinAlbedo);
    case VariableKind::kImageScale:
      return std::max(std::get<double>(value) + delta[0], kMinScale);
    case VariableKind::kImageBias:
      return std::get<double>(value) + delta[0];
  }
  return value;
}

Eigen::VectorXd local_coordinates(VariableKind kind, const VariableValue& a,
                                  const VariableValue& b) {
  switch (kind) {
    case VariableKind::kPose:
      return pose_local(std::get<Pose>(a), std::get<Pose>(b));
    case VariableKind::kLandmark:
      return std::get<Vector3>(b) - std::get<Vector3>(a);
    case VariableKind::kNormal:
    case VariableKind::kSunDir:
      return s2_local(std::get<UnitVec>(a), std::get<UnitVec>(b));
    default: {
      Eigen::VectorXd d(1);
      d[0] = std::get<double>(b) - std::get<double>(a);
      return d;
    }
  }
}

void Values::insert(const VariableKey& key, VariableValue value) {
  if (!values_.emplace(key, std::move(value)).second) {
    throw Error(ErrorCode::kDuplicateKey, to_string(key));
  }
}

void Values::update(const VariableKey& key, VariableValue value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::kMissingKey, to_string(key));
  it->second = std::move(value);
}

const VariableValue& Values::at(const VariableKey& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::kMissingKey, to_string(key));
  return it->second;
}

}  // namespace phomo
