#pragma once

#include "percarch/scenario.hpp"

namespace percarch {

struct SafetyParams {
  double rho = 0.5;
  double a_max_accel = 3.0;
  double b_min_brake = 4.0;
  double b_max_brake = 8.0;
  double lateral_base = 0.9;
  double lateral_per_speed = 0.5;

  /// Throws kValidation listing every violated invariant.
  void validate() const;
};

/// Minimum safe gap (m) between a rear vehicle at `v_rear` and a front vehicle
/// at `v_front`, both moving the same way.
double rss_longitudinal(double v_rear, double v_front, const SafetyParams& p);

double rss_lateral_min(double relative_lateral_speed, const SafetyParams& p);

struct Footprint {
  double length = 4.2;
  double width = 1.8;
};

/// Dangerous situation: both the longitudinal and the lateral gap to the ego
/// are below their minimum safe distances.
bool rss_violation(const ActorTruth& actor, double ego_speed, const Footprint& ego,
                   const SafetyParams& p);

}  // namespace percarch
