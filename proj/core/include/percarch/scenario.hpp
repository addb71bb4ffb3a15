#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "percarch/geometry.hpp"
#include "percarch/random.hpp"
#include "percarch/vehicle_model.hpp"

namespace percarch {

/// Arc-length parameterised polyline. Queries beyond either end extrapolate
/// along the end tangent.
class Route {
 public:
  struct Sample {
    Vec2 position;
    double heading = 0.0;  ///< world frame, radians counter-clockwise from +x
    double curvature = 0.0;
  };

  explicit Route(std::vector<Vec2> vertices);

  double length() const { return cumulative_.back(); }
  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<double>& cumulative() const { return cumulative_; }
  Sample at(double s) const;

 private:
  std::vector<Vec2> vertices_;
  std::vector<double> cumulative_;
  std::vector<double> headings_;
  std::vector<double> midpoints_;
};

struct Waypoint {
  double x = 0.0;
  double y = 0.0;
  double speed = 0.0;
};

/// Marking flags apply up to arc length `s_end` along the centreline; the
/// last segment also covers everything beyond it.
struct LaneSegment {
  double s_end = 0.0;
  bool left_marked = true;
  bool right_marked = true;
};

/// The ego lane. Its centreline is the ego waypoint polyline.
struct LaneModel {
  double lane_width = 3.5;
  std::vector<LaneSegment> segments;
};

struct LongitudinalPhase {
  double duration = 0.0;
  double accel = 0.0;

  bool operator==(const LongitudinalPhase&) const = default;
};

/// Move the lateral offset toward `target_offset` at `rate` (m/s), starting
/// at `t_start`. A later manoeuvre takes over from wherever the previous one
/// got to.
struct LateralManeuver {
  double t_start = 0.0;
  double target_offset = 0.0;
  double rate = 1.0;

  bool operator==(const LateralManeuver&) const = default;
};

/// Non-reactive actor scripted in lane coordinates: arc length `s` along the
/// ego centreline and signed offset `d` (positive to the left).
struct ActorScript {
  int actor_id = 0;
  double s0 = 0.0;
  double v0 = 0.0;
  double d0 = 0.0;
  std::vector<LongitudinalPhase> phases;
  std::vector<LateralManeuver> maneuvers;
  double length = 4.5;
  double width = 1.8;

  bool operator==(const ActorScript&) const = default;
};

struct FrenetState {
  double s = 0.0;
  double v = 0.0;
  double d = 0.0;
  double d_rate = 0.0;
};

FrenetState evaluate_script(const ActorScript& script, double t);

struct CycleSpec {
  int id = 0;
  Feature feature = Feature::kAcc;
  double duration = 60.0;
  double dt = 0.05;
  std::vector<Waypoint> ego_waypoints;
  std::vector<ActorScript> actors;
  LaneModel lane;
  double weather = 1.0;
};

/// Ground truth of one actor in the ego frame (+x left, +y forward).
struct ActorTruth {
  int actor_id = 0;
  Vec2 position;
  /// Rate of change of `position` as seen from the moving, turning ego.
  Vec2 velocity;
  /// Absolute velocity over ground, expressed in ego axes.
  Vec2 ground_velocity;
  /// Actor heading relative to the ego, azimuth convention.
  double heading = 0.0;
  double length = 4.5;
  double width = 1.8;

  OrientedRect footprint() const { return {position, heading, length, width}; }
};

struct LaneTruth {
  bool left_present = false;
  bool right_present = false;
  /// Lateral position of each lane boundary in the ego frame.
  double left_offset = 0.0;
  double right_offset = 0.0;
};

struct GroundTruthFrame {
  double t = 0.0;
  Vec2 ego_position;
  double ego_heading = 0.0;
  double ego_speed = 0.0;
  double ego_yaw_rate = 0.0;
  std::vector<ActorTruth> actors;
  LaneTruth lane;
};

class DriveCycle {
 public:
  /// Throws kValidation listing every violated invariant.
  explicit DriveCycle(CycleSpec spec);

  const CycleSpec& spec() const { return spec_; }
  int id() const { return spec_.id; }
  Feature feature() const { return spec_.feature; }
  double duration() const { return spec_.duration; }
  double dt() const { return spec_.dt; }
  double weather() const { return spec_.weather; }
  const Route& route() const { return route_; }

  /// Number of simulation steps, t = k*dt for k in [0, step_count).
  int step_count() const;
  double step_time(int k) const { return k * spec_.dt; }

  /// Throws kTimeDomain outside [0, duration].
  GroundTruthFrame frame_at(double t) const;

  struct EgoState {
    double s = 0.0;
    double speed = 0.0;
    double accel = 0.0;
  };
  EgoState ego_state(double t) const;

  /// World position of an actor at time t.
  Vec2 actor_world_position(const ActorScript& script, double t) const;

 private:
  CycleSpec spec_;
  Route route_;
  std::vector<double> segment_start_time_;
};

struct CycleParams {
  double duration = 60.0;
  double dt = 0.05;
  int cycles_per_feature = 5;
  /// Nominal ego footprint used when screening generated scripts.
  double ego_length = 4.2;
  double ego_width = 1.8;
  double lane_width = 3.5;
};

/// Twenty optimisation cycles, five per feature, in feature order.
std::vector<DriveCycle> generate_standard_cycles(const CycleParams& params, Rng& rng);

/// Held-out cycles drawn from parameter ranges disjoint from the
/// optimisation set. Ids start at 100.
std::vector<DriveCycle> test_cycles(const CycleParams& params, Rng& rng);

/// Screening rules every generated cycle satisfies.
struct CycleCheck {
  std::vector<std::string> problems;
  bool ok() const { return problems.empty(); }
};
CycleCheck check_cycle(const DriveCycle& cycle, const CycleParams& params);

/// Flat (t, actor_id, x, y, vx, vy) rows over every step, ego frame.
struct TruthRow {
  double t = 0.0;
  int actor_id = 0;
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
};
std::vector<TruthRow> ground_truth_trace(const DriveCycle& cycle);

}  // namespace percarch
