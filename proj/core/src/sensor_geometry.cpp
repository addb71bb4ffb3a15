#include "percarch/sensor_geometry.hpp"

#include <string>

#include "percarch/error.hpp"

namespace percarch {

std::string_view to_string(SensorKind kind) {
  return kind == SensorKind::kCamera ? "camera" : "radar";
}

SensorSpec SensorSpec::default_camera() {
  SensorSpec s;
  s.kind = SensorKind::kCamera;
  s.hfov_deg = 90.0;
  s.vfov_deg = 60.0;
  s.max_range_m = 80.0;
  s.rate_hz = 200.0;
  return s;
}

SensorSpec SensorSpec::default_radar() {
  SensorSpec s;
  s.kind = SensorKind::kRadar;
  s.hfov_deg = 30.0;
  s.vfov_deg = 30.0;
  s.max_range_m = 100.0;
  s.rate_hz = 1500.0;
  return s;
}

SensorSpec SensorSpec::omnidirectional(SensorKind kind, double range_m) {
  SensorSpec s = kind == SensorKind::kCamera ? default_camera() : default_radar();
  s.hfov_deg = 360.0;
  s.vfov_deg = 180.0;
  s.max_range_m = range_m;
  return s;
}

void SensorSpec::validate() const {
  std::string problems;
  if (!(hfov_deg > 0.0 && hfov_deg < 180.0)) problems += " hfov_deg must be in (0, 180);";
  if (!(vfov_deg > 0.0 && vfov_deg < 180.0)) problems += " vfov_deg must be in (0, 180);";
  if (!(max_range_m > 0.0)) problems += " max_range_m must be > 0;";
  if (!(rate_hz > 0.0)) problems += " rate_hz must be > 0;";
  if (noise.range_m < 0.0 || noise.azimuth_deg < 0.0 || noise.range_rate_mps < 0.0 ||
      noise.range_fraction < 0.0) {
    problems += " noise deviations must be >= 0;";
  }
  if (!problems.empty()) {
    throw Error(ErrorCode::kValidation,
                std::string("invalid ") + std::string(to_string(kind)) + " spec:" + problems);
  }
}

PlacedSensor::PlacedSensor(SensorSpec spec, SensorPose pose, Vec3 outward_normal, int slot)
    : spec_(spec), pose_(pose), slot_(slot) {
  const double base_yaw = std::atan2(outward_normal.x, outward_normal.y);
  boresight_yaw_ = wrap_angle(base_yaw + deg_to_rad(pose.yaw_deg));
  const double pitch = deg_to_rad(pose.pitch_deg);
  const double roll = deg_to_rad(pose.roll_deg);

  const Vec3 heading{std::sin(boresight_yaw_), std::cos(boresight_yaw_), 0.0};
  const Vec3 lateral{std::cos(boresight_yaw_), -std::sin(boresight_yaw_), 0.0};
  const Vec3 vertical{0.0, 0.0, 1.0};

  forward_ = heading * std::cos(pitch) + vertical * std::sin(pitch);
  const Vec3 pitched_up = heading * -std::sin(pitch) + vertical * std::cos(pitch);
  left_ = lateral * std::cos(roll) + pitched_up * std::sin(roll);
  up_ = lateral * -std::sin(roll) + pitched_up * std::cos(roll);
}

double PlacedSensor::ground_range(Vec2 p) const { return (p - ground_position()).norm(); }

double PlacedSensor::ground_azimuth(Vec2 p) const {
  const Vec2 d = p - ground_position();
  return wrap_angle(std::atan2(d.x, d.y) - boresight_yaw_);
}

bool PlacedSensor::in_frustum(Vec3 target) const {
  const Vec2 ground = target.xy();
  if (ground_range(ground) > spec_.max_range_m) return false;
  if (spec_.is_omnidirectional()) return true;

  const double half_h = 0.5 * deg_to_rad(spec_.hfov_deg);
  if (std::abs(ground_azimuth(ground)) > half_h) return false;

  const Vec3 d = target - position();
  const double along = dot(d, forward_);
  if (along <= 0.0) return false;
  if (std::abs(std::atan2(dot(d, left_), along)) > half_h) return false;
  const double half_v = 0.5 * deg_to_rad(spec_.vfov_deg);
  return std::abs(std::atan2(dot(d, up_), along)) <= half_v;
}

}  // namespace percarch
