#include "percarch/safety.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "percarch/error.hpp"

namespace percarch {

void SafetyParams::validate() const {
  std::vector<std::string> problems;
  if (!(rho > 0)) problems.push_back("rho must be positive");
  if (!(a_max_accel > 0)) problems.push_back("a_max_accel must be positive");
  if (!(b_min_brake > 0)) problems.push_back("b_min_brake must be positive");
  if (!(b_max_brake > 0)) problems.push_back("b_max_brake must be positive");
  if (b_min_brake > b_max_brake) problems.push_back("b_min_brake must not exceed b_max_brake");
  if (!(lateral_base > 0)) problems.push_back("lateral_base must be positive");
  if (lateral_per_speed < 0) problems.push_back("lateral_per_speed must be non-negative");
  if (problems.empty()) return;
  std::string msg = "invalid safety parameters:";
  for (const auto& p : problems) msg += "\n  - " + p;
  throw Error(ErrorCode::kValidation, msg);
}

double rss_longitudinal(double v_rear, double v_front, const SafetyParams& p) {
  const double reach = v_rear + p.rho * p.a_max_accel;
  const double d = v_rear * p.rho + 0.5 * p.a_max_accel * p.rho * p.rho +
                   reach * reach / (2.0 * p.b_min_brake) -
                   v_front * v_front / (2.0 * p.b_max_brake);
  return std::max(0.0, d);
}

double rss_lateral_min(double relative_lateral_speed, const SafetyParams& p) {
  return p.lateral_base + p.lateral_per_speed * std::abs(relative_lateral_speed);
}

bool rss_violation(const ActorTruth& actor, double ego_speed, const Footprint& ego,
                   const SafetyParams& p) {
  const double lat_gap = std::abs(actor.position.x) - 0.5 * (ego.width + actor.width);
  if (lat_gap >= rss_lateral_min(actor.ground_velocity.x, p)) return false;

  const double lon_gap = std::abs(actor.position.y) - 0.5 * (ego.length + actor.length);
  if (lon_gap < 0) return true;
  const double actor_speed = std::max(0.0, actor.ground_velocity.y);
  const double need = actor.position.y >= 0 ? rss_longitudinal(ego_speed, actor_speed, p)
                                            : rss_longitudinal(actor_speed, ego_speed, p);
  return lon_gap < need;
}

}  // namespace percarch
