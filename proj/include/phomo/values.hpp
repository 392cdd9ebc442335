#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <variant>

#include <Eigen/Core>

#include "phomo/manifold.hpp"

namespace phomo {

enum class VariableKind : std::uint8_t {
  kPose,
  kLandmark,
  kNormal,
  kAlbedo,
  kSunDir,
  kImageScale,
  kImageBias,
};

struct VariableKey {
  VariableKind kind = VariableKind::kPose;
  std::uint32_t index = 0;

  auto operator<=>(const VariableKey&) const = default;
};

inline VariableKey pose_key(std::uint32_t i) { return {VariableKind::kPose, i}; }
inline VariableKey landmark_key(std::uint32_t i) { return {VariableKind::kLandmark, i}; }
inline VariableKey normal_key(std::uint32_t i) { return {VariableKind::kNormal, i}; }
inline VariableKey albedo_key(std::uint32_t i) { return {VariableKind::kAlbedo, i}; }
inline VariableKey sun_key(std::uint32_t i) { return {VariableKind::kSunDir, i}; }
inline VariableKey scale_key(std::uint32_t i) { return {VariableKind::kImageScale, i}; }
inline VariableKey bias_key(std::uint32_t i) { return {VariableKind::kImageBias, i}; }

/// Local (tangent) dimension of a variable kind.
int local_dim(VariableKind kind);
std::string to_string(const VariableKey& key);

using VariableValue = std::variant<Pose, Vector3, UnitVec, double>;

/// Lower bounds applied after every retraction.
inline constexpr double kMinAlbedo = 1e-4;
inline constexpr double kMinScale = 1e-6;

/// Applies the kind's retraction to a value.
VariableValue retract(VariableKind kind, const VariableValue& value,
                      const Eigen::Ref<const Eigen::VectorXd>& delta);
/// Inverse retraction: delta with retract(kind, a, delta) = b.
Eigen::VectorXd local_coordinates(VariableKind kind, const VariableValue& a,
                                  const VariableValue& b);

/// Keyed store of typed variable values.
class Values {
 public:
  void insert(const VariableKey& key, VariableValue value);
  void update(const VariableKey& key, VariableValue value);
  bool contains(const VariableKey& key) const { return values_.count(key) != 0; }
  std::size_t size() const { return values_.size(); }

  const VariableValue& at(const VariableKey& key) const;
  const Pose& pose(const VariableKey& key) const { return std::get<Pose>(at(key)); }
  const Vector3& point(const VariableKey& key) const { return std::get<Vector3>(at(key)); }
  const UnitVec& unit(const VariableKey& key) const { return std::get<UnitVec>(at(key)); }
  double scalar(const VariableKey& key) const { return std::get<double>(at(key)); }

  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

 private:
  std::map<VariableKey, VariableValue> values_;
};

}  // namespace phomo
