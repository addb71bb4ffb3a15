#pragma once

#include <string_view>

#include "percarch/geometry.hpp"

namespace percarch {

enum class SensorKind { kCamera, kRadar };

/// Height (m) at which targets are sampled for visibility and coverage: the
/// middle of a 1.5 m tall passenger car.
inline constexpr double kTargetHeight = 0.75;

std::string_view to_string(SensorKind kind);

/// Per-kind measurement noise (one standard deviation, clear weather).
struct SensorNoise {
  double range_m = 0.3;
  double azimuth_deg = 0.5;
  double range_rate_mps = 0.3;
  /// Camera range estimates scale with distance.
  double range_fraction = 0.05;
};

struct SensorSpec {
  SensorKind kind = SensorKind::kCamera;
  double hfov_deg = 90.0;
  double vfov_deg = 60.0;
  double max_range_m = 80.0;
  double rate_hz = 200.0;
  SensorNoise noise;

  static SensorSpec default_camera();
  static SensorSpec default_radar();
  /// Test sensor that sees everything around it up to `range_m`. It bypasses
  /// the field-of-view limits that `validate` enforces for real hardware.
  static SensorSpec omnidirectional(SensorKind kind, double range_m);

  bool is_omnidirectional() const { return hfov_deg >= 360.0; }
  /// Throws kValidation for specs outside physical limits.
  void validate() const;
};

/// Mounting pose. Position is in the vehicle frame (+x left, +y forward,
/// +z up, origin on the ground under the footprint centre); angles are
/// relative to the mount region's outward normal.
struct SensorPose {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double roll_deg = 0.0;
  double pitch_deg = 0.0;
  double yaw_deg = 0.0;
};

/// A sensor spec bound to a pose, with the boresight frame precomputed.
class PlacedSensor {
 public:
  PlacedSensor(SensorSpec spec, SensorPose pose, Vec3 outward_normal, int slot = -1);

  const SensorSpec& spec() const { return spec_; }
  const SensorPose& pose() const { return pose_; }
  int slot() const { return slot_; }
  SensorKind kind() const { return spec_.kind; }
  Vec3 position() const { return {pose_.x, pose_.y, pose_.z}; }
  Vec2 ground_position() const { return {pose_.x, pose_.y}; }
  /// Azimuth of the boresight's ground projection (radians, from +y toward +x).
  double boresight_yaw() const { return boresight_yaw_; }
  Vec3 forward() const { return forward_; }

  /// Ground-plane distance from the sensor to `p`.
  double ground_range(Vec2 p) const;
  /// Ground-plane azimuth of `p` relative to the boresight, radians.
  double ground_azimuth(Vec2 p) const;
  /// Inside the horizontal/vertical field-of-view wedge and within range.
  /// Range is the ground-plane distance.
  bool in_frustum(Vec3 target) const;

 private:
  SensorSpec spec_;
  SensorPose pose_;
  int slot_;
  double boresight_yaw_ = 0.0;
  Vec3 forward_;
  Vec3 left_;
  Vec3 up_;
};

}  // namespace percarch
