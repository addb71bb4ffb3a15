#include "percarch/fusion.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>
#include <tuple>

#include <Eigen/Cholesky>
#include <boost/math/distributions/chi_squared.hpp>

#include "percarch/error.hpp"

namespace percarch {

namespace {

constexpr double kMinRange = 0.1;
constexpr double kDegToRad = kPi / 180.0;

template <int M>
using Vec = Eigen::Matrix<double, M, 1>;
template <int M>
using Mat = Eigen::Matrix<double, M, M>;
template <int M>
using Jac = Eigen::Matrix<double, M, 4>;

/// Native-space measurement model, angles in radians.
template <int M>
struct NativeModel {
  Vec<M> z;
  Mat<M> R;
  std::array<bool, M> angle{};
};

template <int M>
NativeModel<M> native(const Measurement& m) {
  NativeModel<M> out;
  if constexpr (M == 3) {
    out.z << m.z(0), m.z(1) * kDegToRad, m.z(2);
    Vec<3> s(1.0, kDegToRad, 1.0);
    out.R = s.asDiagonal() * m.R * s.asDiagonal();
    out.angle = {false, true, false};
  } else {
    if (m.kind == MeasurementKind::kCamera) {
      out.z << m.z(0) * kDegToRad, m.z(1);
      Vec<2> s(kDegToRad, 1.0);
      out.R = s.asDiagonal() * m.R.topLeftCorner<2, 2>() * s.asDiagonal();
      out.angle = {true, false};
    } else {
      out.z << m.z(0), m.z(1);
      out.R = m.R.topLeftCorner<2, 2>();
    }
  }
  return out;
}

/// h(x) for the measurement's kind and sensor pose.
template <int M>
Vec<M> predict_measurement(const StateVec& x, const Measurement& m) {
  Vec<M> h;
  if (m.kind == MeasurementKind::kPosition) {
    if constexpr (M == 2) h << x(0), x(1);
    return h;
  }
  const double dx = x(0) - m.sensor_position.x;
  const double dy = x(1) - m.sensor_position.y;
  const double rho = std::hypot(dx, dy);
  if (rho < kMinRange) {
    throw Error(ErrorCode::kDegenerateGeometry, "track within 0.1 m of the sensor");
  }
  const double az = wrap_angle(std::atan2(dx, dy) - m.boresight_yaw);
  if constexpr (M == 3) {
    h << rho, az, (dx * x(2) + dy * x(3)) / rho;
  } else {
    h << az, rho;
  }
  return h;
}

template <int M>
Jac<M> jacobian(const StateVec& x, const Measurement& m) {
  Jac<M> H = Jac<M>::Zero();
  if (m.kind == MeasurementKind::kPosition) {
    if constexpr (M == 2) {
      H(0, 0) = 1.0;
      H(1, 1) = 1.0;
    }
    return H;
  }
  const double dx = x(0) - m.sensor_position.x;
  const double dy = x(1) - m.sensor_position.y;
  const double r2 = dx * dx + dy * dy;
  const double rho = std::sqrt(r2);
  if (rho < kMinRange) {
    throw Error(ErrorCode::kDegenerateGeometry, "track within 0.1 m of the sensor");
  }
  const double daz_dx = dy / r2;
  const double daz_dy = -dx / r2;
  if constexpr (M == 3) {
    const double r3 = r2 * rho;
    const double cross_v = x(2) * dy - x(3) * dx;
    H.row(0) << dx / rho, dy / rho, 0.0, 0.0;
    H.row(1) << daz_dx, daz_dy, 0.0, 0.0;
    H.row(2) << dy * cross_v / r3, -dx * cross_v / r3, dx / rho, dy / rho;
  } else {
    H.row(0) << daz_dx, daz_dy, 0.0, 0.0;
    H.row(1) << dx / rho, dy / rho, 0.0, 0.0;
  }
  return H;
}

template <int M>
Vec<M> wrapped(Vec<M> v, const std::array<bool, M>& angle) {
  for (int i = 0; i < M; ++i) {
    if (angle[i]) v(i) = wrap_angle(v(i));
  }
  return v;
}

template <int M>
Eigen::LLT<Mat<M>> factor_innovation(const Mat<M>& S) {
  Eigen::LLT<Mat<M>> llt(S);
  if (llt.info() != Eigen::Success || !S.allFinite()) {
    throw Error(ErrorCode::kNumericalSingularity, "innovation covariance is not positive definite");
  }
  return llt;
}

StateCov symmetrized(const StateCov& P) { return 0.5 * (P + P.transpose()); }

/// Joseph-form linear update.
template <int M>
TrackState linear_update(const TrackState& track, const Vec<M>& y, const Jac<M>& H, const Mat<M>& R) {
  const Mat<M> S = H * track.P * H.transpose() + R;
  const auto llt = factor_innovation<M>(S);
  const Eigen::Matrix<double, 4, M> K = llt.solve(H * track.P).transpose();
  TrackState out = track;
  out.x = track.x + K * y;
  const StateCov I_KH = StateCov::Identity() - K * H;
  out.P = symmetrized(I_KH * track.P * I_KH.transpose() + K * R * K.transpose());
  return out;
}

template <int M>
TrackState ekf_update(const TrackState& track, const Measurement& m) {
  const NativeModel<M> nm = native<M>(m);
  const Vec<M> y = wrapped<M>(nm.z - predict_measurement<M>(track.x, m), nm.angle);
  return linear_update<M>(track, y, jacobian<M>(track.x, m), nm.R);
}

TrackState kf_update(const TrackState& track, const Measurement& m) {
  const CartesianPosition c = to_cartesian(m);
  Jac<2> H = Jac<2>::Zero();
  H(0, 0) = 1.0;
  H(1, 1) = 1.0;
  const Vec<2> y = c.p - track.x.head<2>();
  return linear_update<2>(track, y, H, c.R);
}

template <int M>
TrackState ukf_update(const TrackState& track, const Measurement& m, const FusionConfig& cfg) {
  constexpr int n = 4;
  const UnscentedWeights w = unscented_weights(cfg);
  const NativeModel<M> nm = native<M>(m);
  Eigen::LLT<StateCov> llt((n + w.lambda) * track.P);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kCovarianceIntegrity, "covariance has no Cholesky factor");
  }
  const StateCov L = llt.matrixL();
  Eigen::Matrix<double, 4, 2 * n + 1> X;
  X.col(0) = track.x;
  for (int i = 0; i < n; ++i) {
    X.col(1 + i) = track.x + L.col(i);
    X.col(1 + n + i) = track.x - L.col(i);
  }
  // Residuals are taken about h(x) so that angles wrap consistently.
  const Vec<M> h0 = predict_measurement<M>(track.x, m);
  Eigen::Matrix<double, M, 2 * n + 1> dZ;
  for (int i = 0; i < 2 * n + 1; ++i) {
    dZ.col(i) = wrapped<M>(predict_measurement<M>(X.col(i), m) - h0, nm.angle);
  }
  const Vec<M> dz_mean = dZ * w.mean;
  Mat<M> S = nm.R;
  Eigen::Matrix<double, 4, M> Pxz = Eigen::Matrix<double, 4, M>::Zero();
  for (int i = 0; i < 2 * n + 1; ++i) {
    const Vec<M> dz = dZ.col(i) - dz_mean;
    S += w.cov(i) * dz * dz.transpose();
    Pxz += w.cov(i) * (X.col(i) - track.x) * dz.transpose();
  }
  const auto s_llt = factor_innovation<M>(S);
  const Eigen::Matrix<double, 4, M> K = s_llt.solve(Pxz.transpose()).transpose();
  const Vec<M> y = wrapped<M>(nm.z - h0 - dz_mean, nm.angle);
  TrackState out = track;
  out.x = track.x + K * y;
  out.P = symmetrized(track.P - K * S * K.transpose());
  return out;
}

template <int M>
double native_distance(const TrackState& track, const Measurement& m) {
  const NativeModel<M> nm = native<M>(m);
  const Vec<M> y = wrapped<M>(nm.z - predict_measurement<M>(track.x, m), nm.angle);
  const Jac<M> H = jacobian<M>(track.x, m);
  const Mat<M> S = H * track.P * H.transpose() + nm.R;
  return y.dot(factor_innovation<M>(S).solve(y));
}

}  // namespace

void FusionConfig::validate() const {
  std::vector<std::string> problems;
  if (!(q > 0)) problems.push_back("q must be positive");
  if (!(gate > 0)) problems.push_back("gate must be positive");
  if (!(ukf_alpha > 0)) problems.push_back("ukf_alpha must be positive");
  if (confirm_m < 1 || confirm_n < 1 || confirm_n > 32) problems.push_back("confirm_m and confirm_n must lie in [1, 32]");
  if (confirm_m > confirm_n) problems.push_back("confirm_m must not exceed confirm_n");
  if (delete_after < 1) problems.push_back("delete_after must be at least 1");
  if (!(init_velocity_variance > 0)) problems.push_back("init_velocity_variance must be positive");
  if (problems.empty()) return;
  std::string msg = "invalid fusion configuration:";
  for (const auto& p : problems) msg += "\n  - " + p;
  throw Error(ErrorCode::kValidation, msg);
}

Eigen::Matrix4d cv_transition(double dt) {
  Eigen::Matrix4d F = Eigen::Matrix4d::Identity();
  F(0, 2) = dt;
  F(1, 3) = dt;
  return F;
}

Eigen::Matrix4d cv_process_noise(double dt, double q) {
  const double dt2 = dt * dt;
  const double dt3 = dt2 * dt;
  Eigen::Matrix4d Q = Eigen::Matrix4d::Zero();
  for (int axis = 0; axis < 2; ++axis) {
    Q(axis, axis) = q * dt3 / 3.0;
    Q(axis, axis + 2) = Q(axis + 2, axis) = q * dt2 / 2.0;
    Q(axis + 2, axis + 2) = q * dt;
  }
  return Q;
}

void check_covariance(const StateCov& P) {
  if (!P.allFinite()) throw Error(ErrorCode::kCovarianceIntegrity, "covariance has non-finite entries");
  const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw Error(ErrorCode::kCovarianceIntegrity, "covariance is not symmetric");
  }
  Eigen::LLT<StateCov> llt(P + 1e-9 * scale * StateCov::Identity());
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kCovarianceIntegrity, "covariance is not positive semi-definite");
  }
}

TrackState predict(const TrackState& track, double dt, const FusionConfig& config) {
  if (!(dt > 0)) throw Error(ErrorCode::kValidation, "prediction step must be positive");
  check_covariance(track.P);
  const Eigen::Matrix4d F = cv_transition(dt);
  TrackState out = track;
  out.x = F * track.x;
  out.P = symmetrized(F * track.P * F.transpose() + cv_process_noise(dt, config.q));
  return out;
}

CartesianPosition to_cartesian(const Measurement& m) {
  CartesianPosition out;
  if (m.kind == MeasurementKind::kPosition) {
    out.p << m.z(0), m.z(1);
    out.R = m.R.topLeftCorner<2, 2>();
    return out;
  }
  double r = 0.0;
  double az = 0.0;
  double var_r = 0.0;
  double var_az = 0.0;
  if (m.kind == MeasurementKind::kRadar) {
    r = m.z(0);
    az = m.z(1) * kDegToRad;
    var_r = m.R(0, 0);
    var_az = m.R(1, 1) * kDegToRad * kDegToRad;
  } else {
    az = m.z(0) * kDegToRad;
    r = m.z(1);
    var_az = m.R(0, 0) * kDegToRad * kDegToRad;
    var_r = m.R(1, 1);
  }
  const double a = m.boresight_yaw + az;
  const double s = std::sin(a);
  const double c = std::cos(a);
  out.p << m.sensor_position.x + r * s, m.sensor_position.y + r * c;
  Eigen::Matrix2d J;
  J << s, r * c, c, -r * s;
  out.R = J * Eigen::Vector2d(var_r, var_az).asDiagonal() * J.transpose();
  return out;
}

UnscentedWeights unscented_weights(const FusionConfig& config) {
  constexpr int n = 4;
  UnscentedWeights w;
  const double a2 = config.ukf_alpha * config.ukf_alpha;
  w.lambda = a2 * (n + config.ukf_kappa) - n;
  const double denom = n + w.lambda;
  w.mean.setConstant(0.5 / denom);
  w.cov.setConstant(0.5 / denom);
  w.mean(0) = w.lambda / denom;
  w.cov(0) = w.lambda / denom + (1.0 - a2 + config.ukf_beta);
  return w;
}

TrackState update(const TrackState& track, const Measurement& z, const FusionConfig& config) {
  check_covariance(track.P);
  TrackState out;
  switch (config.algo) {
    case FusionAlgorithm::kKf:
      out = kf_update(track, z);
      break;
    case FusionAlgorithm::kEkf:
      out = z.dim() == 3 ? ekf_update<3>(track, z) : ekf_update<2>(track, z);
      break;
    case FusionAlgorithm::kUkf:
      out = z.dim() == 3 ? ukf_update<3>(track, z, config) : ukf_update<2>(track, z, config);
      break;
  }
  out.last_update = z.t;
  return out;
}

double mahalanobis2(const TrackState& track, const Measurement& z, const FusionConfig& config) {
  if (config.algo == FusionAlgorithm::kKf) {
    const CartesianPosition c = to_cartesian(z);
    const Eigen::Vector2d y = c.p - track.x.head<2>();
    const Eigen::Matrix2d S = track.P.topLeftCorner<2, 2>() + c.R;
    return y.dot(factor_innovation<2>(S).solve(y));
  }
  return z.dim() == 3 ? native_distance<3>(track, z) : native_distance<2>(track, z);
}

double gate_threshold(const FusionConfig& config, int dim) {
  if (dim == 2) return config.gate;
  // Same tail probability as `gate` has at two degrees of freedom.
  const double p = -std::expm1(-0.5 * config.gate);
  return boost::math::quantile(boost::math::chi_squared(dim), p);
}

int gating_dim(const Measurement& z, const FusionConfig& config) {
  return config.algo == FusionAlgorithm::kKf ? 2 : z.dim();
}

namespace {

bool recoverable_in_tracker(const Error& e) {
  return e.code() == ErrorCode::kDegenerateGeometry || e.code() == ErrorCode::kNumericalSingularity;
}

}  // namespace

Association associate(const std::vector<TrackState>& tracks, std::span<const Measurement> measurements,
                      const FusionConfig& config) {
  struct Candidate {
    double d2;
    int meas;
    int track_id;
    int track;
  };
  std::vector<Candidate> cands;
  std::vector<double> gates(measurements.size());
  for (std::size_t j = 0; j < measurements.size(); ++j) {
    gates[j] = gate_threshold(config, gating_dim(measurements[j], config));
  }
  for (int t = 0; t < static_cast<int>(tracks.size()); ++t) {
    for (int j = 0; j < static_cast<int>(measurements.size()); ++j) {
      double d2 = 0.0;
      try {
        d2 = mahalanobis2(tracks[t], measurements[j], config);
      } catch (const Error& e) {
        // A track sitting on the sensor has no usable measurement geometry;
        // it simply cannot be gated against this measurement.
        if (!recoverable_in_tracker(e)) throw;
        continue;
      }
      if (d2 <= gates[j]) cands.push_back({d2, j, tracks[t].track_id, t});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.d2, a.meas, a.track_id) < std::tie(b.d2, b.meas, b.track_id);
  });
  std::vector<char> track_used(tracks.size(), 0);
  std::vector<char> meas_used(measurements.size(), 0);
  Association out;
  for (const Candidate& c : cands) {
    if (track_used[c.track] || meas_used[c.meas]) continue;
    track_used[c.track] = meas_used[c.meas] = 1;
    out.pairs.emplace_back(c.track, c.meas);
  }
  for (int j = 0; j < static_cast<int>(measurements.size()); ++j) {
    if (!meas_used[j]) out.unassigned.push_back(j);
  }
  return out;
}

TrackState spawn_track(int track_id, const Measurement& z, const FusionConfig& config) {
  const CartesianPosition c = to_cartesian(z);
  TrackState t;
  t.track_id = track_id;
  t.x << c.p, 0.0, 0.0;
  t.P.setZero();
  t.P.topLeftCorner<2, 2>() = c.R;
  t.P(2, 2) = t.P(3, 3) = config.init_velocity_variance;
  t.P = symmetrized(t.P);
  t.last_update = z.t;
  return t;
}

std::vector<TrackState> step_tracker(std::vector<TrackState> tracks,
                                     std::span<const Measurement> measurements, double dt,
                                     const FusionConfig& config, int& next_id) {
  for (TrackState& t : tracks) t = predict(t, dt, config);
  std::vector<char> updated(tracks.size(), 0);
  const std::size_t existing = tracks.size();

  std::size_t begin = 0;
  while (begin < measurements.size()) {
    std::size_t end = begin + 1;
    while (end < measurements.size() && measurements[end].sensor_slot == measurements[begin].sensor_slot &&
           measurements[end].kind == measurements[begin].kind) {
      ++end;
    }
    const auto batch = measurements.subspan(begin, end - begin);
    const Association assoc = associate(tracks, batch, config);
    for (const auto& [ti, mi] : assoc.pairs) {
      try {
        tracks[ti] = update(tracks[ti], batch[mi], config);
        updated[ti] = 1;
      } catch (const Error& e) {
        // Sigma points can straddle the sensor even when the mean gated;
        // the measurement is consumed and the track coasts.
        if (!recoverable_in_tracker(e)) throw;
      }
    }
    for (int mi : assoc.unassigned) {
      tracks.push_back(spawn_track(next_id++, batch[mi], config));
      updated.push_back(1);
    }
    begin = end;
  }

  const std::uint32_t window =
      config.confirm_n >= 32 ? 0xffffffffu : ((1u << config.confirm_n) - 1u);
  std::vector<TrackState> out;
  out.reserve(tracks.size());
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    TrackState& t = tracks[i];
    if (i < existing) t.history <<= 1;
    if (updated[i]) {
      t.history |= 1u;
      ++t.hits;
      t.misses = 0;
    } else {
      ++t.misses;
    }
    if (std::popcount(t.history & window) >= config.confirm_m) t.confirmed = true;
    if (t.misses < config.delete_after) out.push_back(std::move(t));
  }
  if (config.merge_duplicates) out = merge_duplicate_tracks(std::move(out), config);
  return out;
}

std::vector<TrackState> merge_duplicate_tracks(std::vector<TrackState> tracks, const FusionConfig& config) {
  std::sort(tracks.begin(), tracks.end(),
            [](const TrackState& a, const TrackState& b) { return a.track_id < b.track_id; });
  std::vector<char> dropped(tracks.size(), 0);
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (dropped[i]) continue;
    for (std::size_t j = i + 1; j < tracks.size(); ++j) {
      if (dropped[j]) continue;
      const Eigen::Vector2d d = tracks[j].x.head<2>() - tracks[i].x.head<2>();
      const Eigen::Matrix2d S = tracks[i].P.topLeftCorner<2, 2>() + tracks[j].P.topLeftCorner<2, 2>();
      const Eigen::LDLT<Eigen::Matrix2d> ldlt(S);
      if (ldlt.info() != Eigen::Success) continue;
      if (d.dot(ldlt.solve(d)) <= config.gate) {
        dropped[j] = 1;
        // The survivor inherits the duplicate's recent hits so a split
        // detection stream does not delay confirmation.
        tracks[i].history |= tracks[j].history;
        tracks[i].confirmed = tracks[i].confirmed || tracks[j].confirmed;
        tracks[i].misses = std::min(tracks[i].misses, tracks[j].misses);
      }
    }
  }
  std::vector<TrackState> out;
  out.reserve(tracks.size());
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (!dropped[i]) out.push_back(std::move(tracks[i]));
  }
  return out;
}

Tracker::Tracker(FusionConfig config) : config_(config) { config_.validate(); }

void Tracker::step(std::span<const Measurement> measurements, double dt) {
  tracks_ = step_tracker(std::move(tracks_), measurements, dt, config_, next_id_);
}

}  // namespace percarch
