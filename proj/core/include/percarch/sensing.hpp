#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "percarch/scenario.hpp"
#include "percarch/sensor_geometry.hpp"
#include "percarch/tables.hpp"

namespace percarch {

enum class LatencyColumn { kGpu, kCpu };

struct SensingConfig {
  LatencyColumn latency = LatencyColumn::kGpu;
  double radar_detection = 0.95;
  /// Camera clutter per frame is this times (1 - mAP).
  double camera_clutter_scale = 0.05;
  double radar_clutter = 0.01;
  double lane_spurious = 0.02;
  bool occlusion = true;
  /// Oracle sensing: every visible target is reported every step, exactly,
  /// with no latency and no clutter. Weather and occlusion are ignored.
  bool ideal = false;
};

double camera_detection_probability(const DetectorProfile& profile, double range, double max_range,
                                    double weather);
double radar_detection_probability(double range, double max_range, double weather,
                                   double base = 0.95);

/// Steps between capture and release of a camera frame (at least 1).
int latency_steps(const DetectorProfile& profile, double dt, LatencyColumn column = LatencyColumn::kGpu);

/// In the frustum and, when `blockers` is non-empty, not hidden behind any
/// other actor's footprint along the ground-plane line of sight.
bool visible(const PlacedSensor& sensor, const ActorTruth& target,
             std::span<const ActorTruth> blockers);

enum class MeasurementKind { kRadar, kCamera, kPosition };

/// One detection. Radar z = (range m, azimuth deg, range-rate m/s); camera
/// z = (azimuth deg, range m); position z = (x m, y m) in the ego frame.
/// Angles are relative to the sensor boresight, positive to the left.
struct Measurement {
  double t = 0.0;  ///< capture time
  int sensor_slot = -1;
  MeasurementKind kind = MeasurementKind::kRadar;
  Eigen::Vector3d z = Eigen::Vector3d::Zero();
  Eigen::Matrix3d R = Eigen::Matrix3d::Zero();
  Vec2 sensor_position;
  double boresight_yaw = 0.0;
  /// Actor that produced the detection, or -1 for clutter. Never read by fusion.
  int truth_actor = -1;

  int dim() const { return kind == MeasurementKind::kRadar ? 3 : 2; }
};

Measurement make_position_measurement(double t, Vec2 position, double sigma);

struct LaneObservation {
  double t = 0.0;
  bool left_detected = false;
  bool right_detected = false;
  bool truth_left = false;
  bool truth_right = false;
};

/// Pending camera frame inside the detector.
struct PendingBatch {
  int release_step = -1;
  std::vector<Measurement> detections;
};

/// Per camera slot: the frame currently being processed, if any.
struct LatencyQueue {
  std::vector<PendingBatch> slots;
};

/// The measurement source of one architecture on one cycle. Every random draw
/// comes from a generator re-derived from (stream key, step, channel, slot),
/// so changing the detector or fusion algorithm never shifts the noise seen
/// by the rest of the rig.
class SensorSuite {
 public:
  SensorSuite(std::vector<PlacedSensor> sensors, const DetectorProfile& detector,
              SensingConfig config, double dt, double weather, std::uint64_t stream_key);

  const std::vector<PlacedSensor>& sensors() const { return sensors_; }
  int camera_latency_steps() const { return latency_steps_; }

  /// Measurements released at step k: radar sensors first, then cameras, each
  /// group in slot order.
  std::vector<Measurement> sense_frame(int step, const GroundTruthFrame& frame, LatencyQueue& queue) const;

  /// `z1_coverage` is the fraction of the near-front zone seen by cameras.
  LaneObservation lane_channel(int step, const GroundTruthFrame& frame, double z1_coverage) const;

  LatencyQueue make_queue() const;

 private:
  std::vector<Measurement> detect(const PlacedSensor& sensor, int step,
                                  const GroundTruthFrame& frame) const;

  std::vector<PlacedSensor> sensors_;
  DetectorProfile detector_;
  SensingConfig config_;
  double dt_;
  double weather_;
  std::uint64_t stream_key_;
  int latency_steps_;
};

}  // namespace percarch
