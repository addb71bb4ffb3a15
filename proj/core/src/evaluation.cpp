#include "percarch/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "percarch/error.hpp"
#include "percarch/parallel.hpp"

namespace percarch {

std::string_view metric_name(int metric) {
  static constexpr std::string_view kNames[kMetricCount] = {
      "lon_pos_err",          "lat_pos_err",  "occlusion_rate", "velocity_uncertainty",
      "late_detection_rate",  "lane_fp_rate", "lane_fn_rate",   "object_fp_rate",
  };
  if (metric < 0 || metric >= kMetricCount) throw Error(ErrorCode::kOutOfBounds, "metric index");
  return kNames[metric];
}

void MetricNorms::validate() const {
  std::vector<std::string> problems;
  if (!(lon_error > 0)) problems.push_back("lon_error must be positive");
  if (!(lat_error > 0)) problems.push_back("lat_error must be positive");
  if (!(velocity_threshold > 0)) problems.push_back("velocity_threshold must be positive");
  if (!(vicinity > 0)) problems.push_back("vicinity must be positive");
  if (dwell < 0) problems.push_back("dwell must be non-negative");
  if (!(match_gate > 0)) problems.push_back("match_gate must be positive");
  if (problems.empty()) return;
  std::string msg = "invalid metric norms:";
  for (const auto& p : problems) msg += "\n  - " + p;
  throw Error(ErrorCode::kValidation, msg);
}

CostWeights CostWeights::normalized(const MetricVector& raw) {
  double sum = 0.0;
  for (double v : raw) {
    if (!(v >= 0) || !std::isfinite(v)) throw Error(ErrorCode::kValidation, "weights must be finite and non-negative");
    sum += v;
  }
  if (!(sum > 0)) throw Error(ErrorCode::kValidation, "weights must not all be zero");
  CostWeights out;
  for (int i = 0; i < kMetricCount; ++i) out.w[i] = raw[i] / sum;
  return out;
}

double CostWeights::cost(const MetricVector& metrics) const {
  double c = 0.0;
  for (int i = 0; i < kMetricCount; ++i) c += w[i] * metrics[i];
  return c;
}

MetricFeatureTable MetricFeatureTable::defaults() {
  const std::set<Feature> all(std::begin(kAllFeatures), std::end(kAllFeatures));
  const std::set<Feature> longitudinal{Feature::kAcc, Feature::kFcw};
  const std::set<Feature> lateral{Feature::kLka, Feature::kBw};
  const std::set<Feature> lane{Feature::kLka};
  MetricFeatureTable t;
  t.features = {longitudinal, lateral, all, longitudinal, longitudinal, lane, lane, all};
  return t;
}

CostWeights weights_from_feature_map(const FeatureZoneRegionMap& map, const MetricFeatureTable& table) {
  MetricVector raw{};
  for (int m = 0; m < kMetricCount; ++m) {
    for (Feature f : table.features[m]) {
      auto it = map.feature_to_zones.find(f);
      if (it != map.feature_to_zones.end()) raw[m] += static_cast<double>(it->second.size());
    }
  }
  return CostWeights::normalized(raw);
}

TruthMatch match_tracks_to_truth(std::span<const TrackState> tracks,
                                 std::span<const ActorTruth> actors, double gate) {
  struct Candidate {
    double d;
    int track;
    int actor;
  };
  std::vector<Candidate> cands;
  for (int t = 0; t < static_cast<int>(tracks.size()); ++t) {
    for (int a = 0; a < static_cast<int>(actors.size()); ++a) {
      const double d = std::hypot(tracks[t].x(0) - actors[a].position.x, tracks[t].x(1) - actors[a].position.y);
      if (d <= gate) cands.push_back({d, t, a});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& l, const Candidate& r) {
    return std::tie(l.d, l.track, l.actor) < std::tie(r.d, r.track, r.actor);
  });
  std::vector<char> track_used(tracks.size(), 0);
  std::vector<char> actor_used(actors.size(), 0);
  TruthMatch out;
  for (const Candidate& c : cands) {
    if (track_used[c.track] || actor_used[c.actor]) continue;
    track_used[c.track] = actor_used[c.actor] = 1;
    out.pairs.emplace_back(c.track, c.actor);
  }
  for (int t = 0; t < static_cast<int>(tracks.size()); ++t) {
    if (!track_used[t]) out.unmatched_tracks.push_back(t);
  }
  return out;
}

CycleTruth build_cycle_truth(const DriveCycle& cycle, const Footprint& ego, const SafetyParams& safety) {
  CycleTruth truth;
  truth.cycle_id = cycle.id();
  truth.feature = cycle.feature();
  truth.dt = cycle.dt();
  truth.weather = cycle.weather();
  const int n = cycle.step_count();
  truth.frames.reserve(n);
  truth.violation.reserve(n);
  for (int k = 0; k < n; ++k) {
    GroundTruthFrame f = cycle.frame_at(std::min(cycle.step_time(k), cycle.duration()));
    std::vector<char> flags(f.actors.size(), 0);
    for (std::size_t i = 0; i < f.actors.size(); ++i) {
      flags[i] = rss_violation(f.actors[i], f.ego_speed, ego, safety) ? 1 : 0;
    }
    truth.frames.push_back(std::move(f));
    truth.violation.push_back(std::move(flags));
  }
  return truth;
}

MetricAccumulator::MetricAccumulator(const CycleTruth& truth, MetricNorms norms)
    : truth_(truth), norms_(norms) {
  const std::size_t actors = truth.frames.empty() ? 0 : truth.frames.front().actors.size();
  vicinity_run_.assign(actors, 0);
  vicinity_qualified_.assign(actors, 0);
  covered_in_vicinity_.assign(actors, 0);
  first_confirmed_.assign(actors, -1);
  first_violation_.assign(actors, -1);
}

void MetricAccumulator::add_step(int k, std::span<const TrackState> tracks, const LaneObservation& lane) {
  const GroundTruthFrame& frame = truth_.frames.at(k);
  std::vector<TrackState> confirmed;
  for (const TrackState& t : tracks) {
    if (t.confirmed) confirmed.push_back(t);
  }
  max_tracks_ = std::max(max_tracks_, static_cast<int>(tracks.size()));
  confirmed_ += static_cast<long>(confirmed.size());

  const TruthMatch match = match_tracks_to_truth(confirmed, frame.actors, norms_.match_gate);
  unmatched_ += static_cast<long>(match.unmatched_tracks.size());

  std::vector<char> matched_actor(frame.actors.size(), 0);
  for (const auto& [ti, ai] : match.pairs) {
    const TrackState& t = confirmed[ti];
    const ActorTruth& a = frame.actors[ai];
    lon_sum_ += std::abs(t.x(1) - a.position.y);
    lat_sum_ += std::abs(t.x(0) - a.position.x);
    const double dv = std::hypot(t.x(2) - a.velocity.x, t.x(3) - a.velocity.y);
    if (dv > norms_.velocity_threshold) ++velocity_bad_;
    ++matched_;
    matched_actor[ai] = 1;
    if (first_confirmed_[ai] < 0) first_confirmed_[ai] = k;
  }

  for (std::size_t i = 0; i < frame.actors.size(); ++i) {
    if (frame.actors[i].position.norm() <= norms_.vicinity) {
      ++vicinity_run_[i];
      if ((vicinity_run_[i] - 1) * truth_.dt >= norms_.dwell - 1e-9) vicinity_qualified_[i] = 1;
      if (matched_actor[i]) covered_in_vicinity_[i] = 1;
    } else {
      vicinity_run_[i] = 0;
    }
    if (truth_.violation[k][i] && first_violation_[i] < 0) first_violation_[i] = k;
  }

  lane_side_frames_ += 2;
  auto side = [&](bool truth, bool detected) {
    if (truth) {
      ++lane_truth_frames_;
      if (!detected) ++lane_fn_;
    } else if (detected) {
      ++lane_fp_;
    }
  };
  side(lane.truth_left, lane.left_detected);
  side(lane.truth_right, lane.right_detected);
}

MetricVector MetricAccumulator::finish(CycleDiagnostics* diagnostics) const {
  MetricVector m{};
  m[kLonPosErr] = matched_ > 0 ? std::min(1.0, lon_sum_ / matched_ / norms_.lon_error) : 1.0;
  m[kLatPosErr] = matched_ > 0 ? std::min(1.0, lat_sum_ / matched_ / norms_.lat_error) : 1.0;

  int qualified = 0;
  int missed = 0;
  int late = 0;
  int violating = 0;
  const std::size_t actors = first_confirmed_.size();
  for (std::size_t i = 0; i < actors; ++i) {
    if (vicinity_qualified_[i]) {
      ++qualified;
      if (!covered_in_vicinity_[i]) ++missed;
    }
    if (first_violation_[i] >= 0) ++violating;
    const bool never = first_confirmed_[i] < 0;
    const bool after = first_violation_[i] >= 0 && first_confirmed_[i] > first_violation_[i];
    if (never || after) ++late;
  }
  m[kOcclusionRate] = qualified > 0 ? static_cast<double>(missed) / qualified : 0.0;
  m[kVelocityUncertainty] = matched_ > 0 ? static_cast<double>(velocity_bad_) / matched_ : 1.0;
  m[kLateDetectionRate] = actors > 0 ? static_cast<double>(late) / actors : 0.0;
  m[kLaneFpRate] = lane_side_frames_ > 0 ? static_cast<double>(lane_fp_) / lane_side_frames_ : 0.0;
  m[kLaneFnRate] = lane_truth_frames_ > 0 ? static_cast<double>(lane_fn_) / lane_truth_frames_ : 0.0;
  m[kObjectFpRate] = confirmed_ > 0 ? static_cast<double>(unmatched_) / confirmed_ : 0.0;

  if (diagnostics) {
    diagnostics->matched_pairs = static_cast<int>(matched_);
    diagnostics->confirmed_samples = static_cast<int>(confirmed_);
    diagnostics->max_tracks = max_tracks_;
    diagnostics->vicinity_actors = qualified;
    diagnostics->violating_actors = violating;
    diagnostics->late_actors = late;
  }
  return m;
}

MetricVector compute_cycle_metrics(const CycleTruth& truth, std::span<const CycleStepRecord> steps,
                                   const MetricNorms& norms, CycleDiagnostics* diagnostics) {
  MetricAccumulator acc(truth, norms);
  for (std::size_t k = 0; k < steps.size(); ++k) {
    acc.add_step(static_cast<int>(k), steps[k].tracks, steps[k].lane);
  }
  return acc.finish(diagnostics);
}

Evaluator::Evaluator(VehicleLayout layout, std::vector<DriveCycle> cycles, EvaluationConfig config)
    : layout_(std::move(layout)), cycles_(std::move(cycles)), config_(std::move(config)) {
  if (cycles_.empty()) throw Error(ErrorCode::kConfiguration, "evaluator needs at least one drive cycle");
  config_.fusion.validate();
  config_.safety.validate();
  config_.norms.validate();
  weights_ = config_.weights ? CostWeights::normalized(config_.weights->w)
                             : weights_from_feature_map(layout_.feature_map());
  const Footprint ego{layout_.model().dims.length, layout_.model().dims.width};
  truths_.resize(cycles_.size());
  parallel_for(cycles_.size(), config_.threads,
               [&](std::size_t i) { truths_[i] = build_cycle_truth(cycles_[i], ego, config_.safety); });
}

std::vector<int> Evaluator::cache_key(const DesignGenome& genome) const {
  std::vector<int> key;
  for (int s = 0; s < kSensorSlots; ++s) {
    const SensorGene& g = genome.sensors[s];
    if (!g.active) continue;
    key.insert(key.end(), {s, g.region_id, g.grid_i, g.grid_j, g.roll_deg, g.pitch_deg, g.yaw_deg});
  }
  key.push_back(genome.detector_index);
  key.push_back(static_cast<int>(genome.fusion));
  return key;
}

EvaluationReport Evaluator::evaluate(const DesignGenome& genome) const {
  std::vector<int> key;
  if (config_.cache) {
    key = cache_key(genome);
    std::lock_guard lock(cache_mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  const auto sensors = place_sensors(genome, layout_, config_.camera, config_.radar);
  EvaluationReport report = evaluate_sensors(sensors, genome.detector_index, genome.fusion,
                                             sensor_layout_hash(genome), config_.sensing);
  if (config_.cache) {
    std::lock_guard lock(cache_mutex_);
    cache_.emplace(std::move(key), report);
  }
  return report;
}

std::vector<double> Evaluator::costs(std::span<const DesignGenome> genomes, int threads) const {
  std::vector<double> out(genomes.size(), 0.0);
  parallel_for(genomes.size(), threads > 0 ? threads : config_.threads,
               [&](std::size_t i) { out[i] = evaluate(genomes[i]).cost; });
  return out;
}

EvaluationReport Evaluator::evaluate_sensors(const std::vector<PlacedSensor>& sensors, int detector_index,
                                             FusionAlgorithm algo, std::uint64_t layout_key,
                                             const SensingConfig& sensing) const {
  ++simulations_;
  std::vector<PlacedSensor> cameras;
  for (const auto& s : sensors) {
    if (s.kind() == SensorKind::kCamera) cameras.push_back(s);
  }
  double z1_coverage = 0.0;
  if (!cameras.empty()) {
    const FovZone& z1 = layout_.zone(1);
    z1_coverage = zone_coverage(cameras, std::span<const FovZone>(&z1, 1)).at(1);
  }
  FusionConfig fusion = config_.fusion;
  fusion.algo = algo;
  const DetectorProfile& profile = detector(detector_index);

  EvaluationReport report;
  report.cycles.resize(cycles_.size());
  for (std::size_t c = 0; c < cycles_.size(); ++c) {
    const CycleTruth& truth = truths_[c];
    const std::uint64_t key =
        derive_key({config_.seed, layout_key, static_cast<std::uint64_t>(truth.cycle_id)});
    SensorSuite suite(sensors, profile, sensing, truth.dt, truth.weather, key);
    LatencyQueue queue = suite.make_queue();
    Tracker tracker(fusion);
    MetricAccumulator acc(truth, config_.norms);
    for (int k = 0; k < static_cast<int>(truth.frames.size()); ++k) {
      const GroundTruthFrame& frame = truth.frames[k];
      const std::vector<Measurement> meas = suite.sense_frame(k, frame, queue);
      tracker.step(meas, truth.dt);
      acc.add_step(k, tracker.tracks(), suite.lane_channel(k, frame, z1_coverage));
    }
    CycleReport& cr = report.cycles[c];
    cr.cycle_id = truth.cycle_id;
    cr.feature = truth.feature;
    cr.metrics = acc.finish(&cr.diagnostics);
  }
  const double n = static_cast<double>(cycles_.size());
  // Sum first, divide once: a metric that is 1 on every cycle averages to
  // exactly 1.
  for (CycleReport& cr : report.cycles) {
    for (int m = 0; m < kMetricCount; ++m) report.aggregate[m] += cr.metrics[m];
    cr.cost_contribution = weights_.cost(cr.metrics) / n;
  }
  for (double& a : report.aggregate) a /= n;
  report.cost = weights_.cost(report.aggregate);
  return report;
}

}  // namespace percarch
