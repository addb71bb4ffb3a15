#pragma once

#include <array>
#include <atomic>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "percarch/design_space.hpp"
#include "percarch/fusion.hpp"
#include "percarch/safety.hpp"
#include "percarch/scenario.hpp"
#include "percarch/sensing.hpp"
#include "percarch/vehicle_model.hpp"

namespace percarch {

enum Metric : int {
  kLonPosErr = 0,
  kLatPosErr,
  kOcclusionRate,
  kVelocityUncertainty,
  kLateDetectionRate,
  kLaneFpRate,
  kLaneFnRate,
  kObjectFpRate,
};
inline constexpr int kMetricCount = 8;

using MetricVector = std::array<double, kMetricCount>;

std::string_view metric_name(int metric);

struct MetricNorms {
  double lon_error = 5.0;
  double lat_error = 2.0;
  double velocity_threshold = 2.0;
  double vicinity = 30.0;
  double dwell = 1.0;
  double match_gate = 3.0;

  void validate() const;
};

struct CostWeights {
  MetricVector w{};

  /// Scales non-negative raw weights to sum 1. Throws kValidation otherwise.
  static CostWeights normalized(const MetricVector& raw);
  double cost(const MetricVector& metrics) const;
};

/// Which features each metric serves.
struct MetricFeatureTable {
  std::array<std::set<Feature>, kMetricCount> features;
  static MetricFeatureTable defaults();
};

/// Raw weight of a metric = sum over its features of the number of zones that
/// feature uses; then normalised.
CostWeights weights_from_feature_map(const FeatureZoneRegionMap& map,
                                     const MetricFeatureTable& table = MetricFeatureTable::defaults());

struct TruthMatch {
  /// (track index, actor index)
  std::vector<std::pair<int, int>> pairs;
  std::vector<int> unmatched_tracks;
};

/// Greedy one-to-one nearest neighbour on ground-plane distance within `gate`.
TruthMatch match_tracks_to_truth(std::span<const TrackState> tracks,
                                 std::span<const ActorTruth> actors, double gate = 3.0);

/// Ground truth of one cycle, sampled at every step, with per-actor safety
/// violations for a given ego footprint. Built once and shared.
struct CycleTruth {
  int cycle_id = 0;
  Feature feature = Feature::kAcc;
  double dt = 0.05;
  double weather = 1.0;
  std::vector<GroundTruthFrame> frames;
  /// violation[k][i]: actor i (frame order) is inside its minimum safe
  /// distance at step k.
  std::vector<std::vector<char>> violation;
};

CycleTruth build_cycle_truth(const DriveCycle& cycle, const Footprint& ego, const SafetyParams& safety);

struct CycleDiagnostics {
  int matched_pairs = 0;
  int confirmed_samples = 0;
  int max_tracks = 0;
  int vicinity_actors = 0;
  int violating_actors = 0;
  int late_actors = 0;
};

/// Streams tracker output step by step and produces the eight metrics.
class MetricAccumulator {
 public:
  MetricAccumulator(const CycleTruth& truth, MetricNorms norms);

  /// `tracks` is the full tracker state after step k; only confirmed tracks
  /// are scored.
  void add_step(int k, std::span<const TrackState> tracks, const LaneObservation& lane);
  MetricVector finish(CycleDiagnostics* diagnostics = nullptr) const;

 private:
  const CycleTruth& truth_;
  MetricNorms norms_;
  double lon_sum_ = 0.0;
  double lat_sum_ = 0.0;
  long matched_ = 0;
  long velocity_bad_ = 0;
  long confirmed_ = 0;
  long unmatched_ = 0;
  long lane_fp_ = 0;
  long lane_fn_ = 0;
  long lane_side_frames_ = 0;
  long lane_truth_frames_ = 0;
  int max_tracks_ = 0;
  std::vector<int> vicinity_run_;
  std::vector<char> vicinity_qualified_;
  std::vector<char> covered_in_vicinity_;
  std::vector<int> first_confirmed_;
  std::vector<int> first_violation_;
};

struct CycleStepRecord {
  std::vector<TrackState> tracks;
  LaneObservation lane;
};

/// Batch form of the accumulator.
MetricVector compute_cycle_metrics(const CycleTruth& truth, std::span<const CycleStepRecord> steps,
                                   const MetricNorms& norms, CycleDiagnostics* diagnostics = nullptr);

struct EvaluationConfig {
  SensorSpec camera = SensorSpec::default_camera();
  SensorSpec radar = SensorSpec::default_radar();
  SensingConfig sensing;
  /// The algorithm field is taken from the genome.
  FusionConfig fusion;
  SafetyParams safety;
  MetricNorms norms;
  /// Empty weights mean "derive from the layout's feature map".
  std::optional<CostWeights> weights;
  std::uint64_t seed = 1;
  int threads = 1;
  bool cache = true;
};

struct CycleReport {
  int cycle_id = 0;
  Feature feature = Feature::kAcc;
  MetricVector metrics{};
  double cost_contribution = 0.0;
  CycleDiagnostics diagnostics;
};

struct EvaluationReport {
  std::vector<CycleReport> cycles;
  MetricVector aggregate{};
  double cost = 0.0;
};

/// Scores architectures over a fixed cycle set. Thread-safe; results depend
/// only on (genome, cycles, seed).
class Evaluator {
 public:
  Evaluator(VehicleLayout layout, std::vector<DriveCycle> cycles, EvaluationConfig config);

  const VehicleLayout& layout() const { return layout_; }
  const std::vector<DriveCycle>& cycles() const { return cycles_; }
  const EvaluationConfig& config() const { return config_; }
  const CostWeights& weights() const { return weights_; }

  EvaluationReport evaluate(const DesignGenome& genome) const;
  double cost(const DesignGenome& genome) const { return evaluate(genome).cost; }

  /// Costs for many genomes, computed on `threads` workers (0 = config) and
  /// returned in input order.
  std::vector<double> costs(std::span<const DesignGenome> genomes, int threads = 0) const;

  /// Lower-level entry: explicit sensors and choices, no cache. `layout_key`
  /// feeds the random-stream derivation.
  EvaluationReport evaluate_sensors(const std::vector<PlacedSensor>& sensors, int detector_index,
                                    FusionAlgorithm algo, std::uint64_t layout_key,
                                    const SensingConfig& sensing) const;

  /// Fresh (uncached) architecture simulations performed so far.
  long simulations() const { return simulations_.load(); }

 private:
  std::vector<int> cache_key(const DesignGenome& genome) const;

  VehicleLayout layout_;
  std::vector<DriveCycle> cycles_;
  EvaluationConfig config_;
  CostWeights weights_;
  std::vector<CycleTruth> truths_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::vector<int>, EvaluationReport> cache_;
  mutable std::atomic<long> simulations_{0};
};

}  // namespace percarch
