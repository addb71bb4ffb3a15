#include "percarch/sensing.hpp"

#include <algorithm>
#include <cmath>

#include "percarch/error.hpp"
#include "percarch/random.hpp"

namespace percarch {

namespace {

enum Channel : std::uint64_t { kRadarChannel = 1, kCameraChannel = 2, kLaneChannel = 3 };

constexpr double kMinClutterRange = 1.0;
constexpr double kClutterRangeRate = 20.0;

}  // namespace

double camera_detection_probability(const DetectorProfile& profile, double range, double max_range,
                                    double weather) {
  if (range > max_range) return 0.0;
  return profile.map_pct / 100.0 * weather * (1.0 - std::max(0.0, range) / max_range);
}

double radar_detection_probability(double range, double max_range, double weather, double base) {
  if (range > max_range) return 0.0;
  return base * weather * (1.0 - std::max(0.0, range) / max_range);
}

int latency_steps(const DetectorProfile& profile, double dt, LatencyColumn column) {
  const double ms = column == LatencyColumn::kGpu ? profile.latency_gpu_ms : profile.latency_cpu_ms;
  const double steps = std::ceil(ms / 1000.0 / dt - 1e-9);
  return std::max(1, static_cast<int>(steps));
}

bool visible(const PlacedSensor& sensor, const ActorTruth& target,
             std::span<const ActorTruth> blockers) {
  if (!sensor.in_frustum({target.position.x, target.position.y, kTargetHeight})) return false;
  const Vec2 from = sensor.ground_position();
  for (const ActorTruth& b : blockers) {
    if (b.actor_id == target.actor_id) continue;
    if (segment_intersects_rect(from, target.position, b.footprint())) return false;
  }
  return true;
}

Measurement make_position_measurement(double t, Vec2 position, double sigma) {
  Measurement m;
  m.t = t;
  m.kind = MeasurementKind::kPosition;
  m.z << position.x, position.y, 0.0;
  m.R.setZero();
  m.R(0, 0) = m.R(1, 1) = sigma * sigma;
  return m;
}

SensorSuite::SensorSuite(std::vector<PlacedSensor> sensors, const DetectorProfile& detector,
                         SensingConfig config, double dt, double weather, std::uint64_t stream_key)
    : sensors_(std::move(sensors)),
      detector_(detector),
      config_(config),
      dt_(dt),
      weather_(weather),
      stream_key_(stream_key),
      latency_steps_(latency_steps(detector, dt, config.latency)) {
  if (!(dt > 0)) throw Error(ErrorCode::kValidation, "sensing step must be positive");
  if (!(weather > 0 && weather <= 1)) throw Error(ErrorCode::kValidation, "weather must lie in (0, 1]");
  std::stable_sort(sensors_.begin(), sensors_.end(),
                   [](const PlacedSensor& a, const PlacedSensor& b) { return a.slot() < b.slot(); });
}

LatencyQueue SensorSuite::make_queue() const {
  LatencyQueue q;
  for (const auto& s : sensors_) {
    if (s.kind() == SensorKind::kCamera) q.slots.push_back({});
  }
  return q;
}

std::vector<Measurement> SensorSuite::detect(const PlacedSensor& sensor, int step,
                                             const GroundTruthFrame& frame) const {
  const bool camera = sensor.kind() == SensorKind::kCamera;
  Rng rng(derive_key({stream_key_, static_cast<std::uint64_t>(step),
                      camera ? kCameraChannel : kRadarChannel,
                      static_cast<std::uint64_t>(sensor.slot() + 1)}));
  const SensorSpec& spec = sensor.spec();
  const double w = config_.ideal ? 1.0 : weather_;
  const double noise_on = config_.ideal ? 0.0 : 1.0;
  const double half_fov = deg_to_rad(spec.hfov_deg) / 2.0;
  const Vec2 origin = sensor.ground_position();

  std::vector<Measurement> out;
  auto base = [&](int truth) {
    Measurement m;
    m.t = frame.t;
    m.sensor_slot = sensor.slot();
    m.kind = camera ? MeasurementKind::kCamera : MeasurementKind::kRadar;
    m.sensor_position = origin;
    m.boresight_yaw = sensor.boresight_yaw();
    m.truth_actor = truth;
    return m;
  };
  auto clamp_azimuth = [&](double az) {
    return spec.is_omnidirectional() ? wrap_angle(az) : std::clamp(az, -half_fov, half_fov);
  };

  const std::span<const ActorTruth> blockers =
      (config_.occlusion && !config_.ideal) ? std::span<const ActorTruth>(frame.actors)
                                            : std::span<const ActorTruth>();
  for (const ActorTruth& actor : frame.actors) {
    const double u = rng.uniform();
    const double n1 = rng.normal();
    const double n2 = rng.normal();
    const double n3 = rng.normal();
    if (!visible(sensor, actor, blockers)) continue;
    const double range = sensor.ground_range(actor.position);
    const double az = sensor.ground_azimuth(actor.position);
    if (!config_.ideal) {
      const double p = camera ? camera_detection_probability(detector_, range, spec.max_range_m, w)
                              : radar_detection_probability(range, spec.max_range_m, w,
                                                            config_.radar_detection);
      if (u >= p) continue;
    }
    Measurement m = base(actor.actor_id);
    const double sa = spec.noise.azimuth_deg / w;
    if (camera) {
      const double sr = spec.noise.range_fraction * range / w;
      const double az_deg = rad_to_deg(clamp_azimuth(az + deg_to_rad(noise_on * sa * n1)));
      const double r = std::max(0.0, range + noise_on * sr * n2);
      const double sr_meas = spec.noise.range_fraction * std::max(r, kMinClutterRange) / w;
      m.z << az_deg, r, 0.0;
      m.R.diagonal() << sa * sa, sr_meas * sr_meas, 0.0;
    } else {
      const Vec2 rel = actor.position - origin;
      const double rr = range > 1e-9 ? dot(rel, actor.velocity) / range : 0.0;
      const double sr = spec.noise.range_m / w;
      const double srr = spec.noise.range_rate_mps / w;
      m.z << std::max(0.0, range + noise_on * sr * n1),
          rad_to_deg(clamp_azimuth(az + deg_to_rad(noise_on * sa * n2))), rr + noise_on * srr * n3;
      m.R.diagonal() << sr * sr, sa * sa, srr * srr;
    }
    out.push_back(m);
  }

  const double uc = rng.uniform();
  const double a1 = rng.uniform();
  const double a2 = rng.uniform();
  const double a3 = rng.uniform();
  const double clutter_rate = camera ? config_.camera_clutter_scale * (1.0 - detector_.map_pct / 100.0)
                                     : config_.radar_clutter;
  if (!config_.ideal && uc < clutter_rate) {
    const double r = std::max(kMinClutterRange, spec.max_range_m * std::sqrt(a1));
    const double az_deg = (a2 - 0.5) * std::min(spec.hfov_deg, 360.0);
    Measurement m = base(-1);
    const double sa = spec.noise.azimuth_deg / w;
    if (camera) {
      const double sr = spec.noise.range_fraction * r / w;
      m.z << az_deg, r, 0.0;
      m.R.diagonal() << sa * sa, sr * sr, 0.0;
    } else {
      const double sr = spec.noise.range_m / w;
      const double srr = spec.noise.range_rate_mps / w;
      m.z << r, az_deg, (2.0 * a3 - 1.0) * kClutterRangeRate;
      m.R.diagonal() << sr * sr, sa * sa, srr * srr;
    }
    out.push_back(m);
  }
  return out;
}

std::vector<Measurement> SensorSuite::sense_frame(int step, const GroundTruthFrame& frame,
                                                  LatencyQueue& queue) const {
  std::vector<Measurement> out;
  for (const PlacedSensor& s : sensors_) {
    if (s.kind() != SensorKind::kRadar) continue;
    auto batch = detect(s, step, frame);
    out.insert(out.end(), batch.begin(), batch.end());
  }
  std::size_t cam = 0;
  for (const PlacedSensor& s : sensors_) {
    if (s.kind() != SensorKind::kCamera) continue;
    if (config_.ideal) {
      auto batch = detect(s, step, frame);
      out.insert(out.end(), batch.begin(), batch.end());
      continue;
    }
    if (cam >= queue.slots.size()) queue.slots.resize(cam + 1);
    PendingBatch& pending = queue.slots[cam++];
    if (pending.release_step >= 0 && pending.release_step <= step) {
      out.insert(out.end(), pending.detections.begin(), pending.detections.end());
      pending.detections.clear();
      pending.release_step = -1;
    }
    if (pending.release_step < 0) {
      pending.detections = detect(s, step, frame);
      pending.release_step = step + latency_steps_;
    }
  }
  return out;
}

LaneObservation SensorSuite::lane_channel(int step, const GroundTruthFrame& frame,
                                          double z1_coverage) const {
  Rng rng(derive_key({stream_key_, static_cast<std::uint64_t>(step), kLaneChannel, 0}));
  const double ul = rng.uniform();
  const double ur = rng.uniform();
  LaneObservation obs;
  obs.t = frame.t;
  obs.truth_left = frame.lane.left_present;
  obs.truth_right = frame.lane.right_present;
  const double c = std::clamp(z1_coverage, 0.0, 1.0);
  const double q = config_.ideal ? c : weather_ * c;
  const double spurious = config_.ideal ? 0.0 : config_.lane_spurious * (1.0 - q);
  obs.left_detected = obs.truth_left ? ul < q : ul < spurious;
  obs.right_detected = obs.truth_right ? ur < q : ur < spurious;
  return obs;
}

}  // namespace percarch
