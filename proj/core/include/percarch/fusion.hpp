#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "percarch/sensing.hpp"
#include "percarch/tables.hpp"

namespace percarch {

struct FusionConfig {
  FusionAlgorithm algo = FusionAlgorithm::kEkf;
  /// Acceleration spectral density, (m/s^2)^2 s.
  double q = 1.0;
  double ukf_alpha = 1e-3;
  double ukf_beta = 2.0;
  double ukf_kappa = 0.0;
  /// Squared Mahalanobis gate for two-dimensional innovations. Three-dimensional
  /// ones use the threshold with the same tail probability.
  double gate = 9.21;
  int confirm_m = 2;
  int confirm_n = 3;
  int delete_after = 5;
  double init_velocity_variance = 100.0;
  /// Collapse tracks whose positions agree within `gate`, keeping the oldest.
  bool merge_duplicates = true;

  /// Throws kValidation listing every violated invariant.
  void validate() const;
};

using StateVec = Eigen::Vector4d;  // x, y, vx, vy in the ego frame
using StateCov = Eigen::Matrix4d;

struct TrackState {
  int track_id = 0;
  StateVec x = StateVec::Zero();
  StateCov P = StateCov::Identity();
  int hits = 0;
  int misses = 0;
  bool confirmed = false;
  double last_update = 0.0;
  /// Bit k set when the track was updated k steps ago.
  std::uint32_t history = 0;
};

Eigen::Matrix4d cv_transition(double dt);
Eigen::Matrix4d cv_process_noise(double dt, double q);

/// Throws kCovarianceIntegrity unless P is symmetric and positive semi-definite.
void check_covariance(const StateCov& P);

TrackState predict(const TrackState& track, double dt, const FusionConfig& config);

/// Single measurement update with the configured filter variant.
TrackState update(const TrackState& track, const Measurement& z, const FusionConfig& config);

/// Squared Mahalanobis distance of the innovation, in the space the variant
/// gates in: converted Cartesian position for KF, native measurement space
/// (linearised) for EKF and UKF.
double mahalanobis2(const TrackState& track, const Measurement& z, const FusionConfig& config);

/// Measurement converted to an ego-frame position with first-order covariance.
struct CartesianPosition {
  Eigen::Vector2d p;
  Eigen::Matrix2d R;
};
CartesianPosition to_cartesian(const Measurement& z);

struct UnscentedWeights {
  double lambda = 0.0;
  Eigen::Matrix<double, 9, 1> mean;
  Eigen::Matrix<double, 9, 1> cov;
};
UnscentedWeights unscented_weights(const FusionConfig& config);

/// Gate for an innovation of dimension `dim` (2 or 3).
double gate_threshold(const FusionConfig& config, int dim);

struct Association {
  /// (track index, measurement index)
  std::vector<std::pair<int, int>> pairs;
  std::vector<int> unassigned;
};

/// Greedy nearest neighbour on gated Mahalanobis distance. Ties go to the
/// lower measurement index, then the lower track id.
Association associate(const std::vector<TrackState>& tracks, std::span<const Measurement> measurements,
                      const FusionConfig& config);

TrackState spawn_track(int track_id, const Measurement& z, const FusionConfig& config);

/// Multi-target tracker. Each step predicts once, then folds in the
/// measurements sensor by sensor in the order given.
class Tracker {
 public:
  explicit Tracker(FusionConfig config);

  void step(std::span<const Measurement> measurements, double dt);

  const std::vector<TrackState>& tracks() const { return tracks_; }
  const FusionConfig& config() const { return config_; }

 private:
  FusionConfig config_;
  std::vector<TrackState> tracks_;
  int next_id_ = 1;
};

/// Drops the younger of any two tracks whose position difference is inside
/// `gate` under the sum of their position covariances.
std::vector<TrackState> merge_duplicate_tracks(std::vector<TrackState> tracks, const FusionConfig& config);

/// Functional form of one tracker step; `next_id` supplies fresh track ids.
std::vector<TrackState> step_tracker(std::vector<TrackState> tracks,
                                     std::span<const Measurement> measurements, double dt,
                                     const FusionConfig& config, int& next_id);

}  // namespace percarch
