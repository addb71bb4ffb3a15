#include "percarch/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "percarch/error.hpp"
#include "percarch/safety.hpp"

namespace percarch {

namespace {

Vec2 unit(double heading) { return {std::cos(heading), std::sin(heading)}; }
Vec2 left_of(double heading) { return {-std::sin(heading), std::cos(heading)}; }

[[noreturn]] void throw_problems(const std::string& what, const std::vector<std::string>& problems) {
  std::string msg = what + ":";
  for (const auto& p : problems) msg += "\n  - " + p;
  throw Error(ErrorCode::kValidation, msg);
}

}  // namespace

Route::Route(std::vector<Vec2> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.size() < 2) throw Error(ErrorCode::kValidation, "route needs at least two vertices");
  cumulative_.push_back(0.0);
  for (std::size_t k = 0; k + 1 < vertices_.size(); ++k) {
    const Vec2 d = vertices_[k + 1] - vertices_[k];
    const double len = d.norm();
    if (!(len > 1e-9)) {
      throw Error(ErrorCode::kValidation, "route has a zero-length segment at vertex " + std::to_string(k));
    }
    headings_.push_back(std::atan2(d.y, d.x));
    midpoints_.push_back(cumulative_.back() + 0.5 * len);
    cumulative_.push_back(cumulative_.back() + len);
  }
}

Route::Sample Route::at(double s) const {
  Sample out;
  const std::size_t nseg = headings_.size();
  if (s <= 0.0) {
    out.position = vertices_.front() + unit(headings_.front()) * s;
  } else if (s >= length()) {
    out.position = vertices_.back() + unit(headings_.back()) * (s - length());
  } else {
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    const std::size_t k = static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    const double frac = (s - cumulative_[k]) / (cumulative_[k + 1] - cumulative_[k]);
    out.position = vertices_[k] + (vertices_[k + 1] - vertices_[k]) * frac;
  }

  if (s <= midpoints_.front() || nseg == 1) {
    out.heading = headings_.front();
  } else if (s >= midpoints_.back()) {
    out.heading = headings_.back();
  } else {
    auto it = std::upper_bound(midpoints_.begin(), midpoints_.end(), s);
    const std::size_t j = static_cast<std::size_t>(it - midpoints_.begin()) - 1;
    const double turn = wrap_angle(headings_[j + 1] - headings_[j]);
    const double span = midpoints_[j + 1] - midpoints_[j];
    out.heading = wrap_angle(headings_[j] + turn * (s - midpoints_[j]) / span);
    out.curvature = turn / span;
  }
  return out;
}

FrenetState evaluate_script(const ActorScript& script, double t) {
  FrenetState st;
  st.s = script.s0;
  st.v = script.v0;
  double remaining = std::max(0.0, t);
  for (const LongitudinalPhase& ph : script.phases) {
    if (remaining <= 0.0) break;
    const double dur = std::min(ph.duration, remaining);
    remaining -= dur;
    if (ph.accel < 0.0 && st.v + ph.accel * dur < 0.0) {
      const double t_stop = st.v / -ph.accel;
      st.s += 0.5 * st.v * t_stop;
      st.v = 0.0;
    } else {
      st.s += st.v * dur + 0.5 * ph.accel * dur * dur;
      st.v += ph.accel * dur;
    }
  }
  st.s += st.v * remaining;

  st.d = script.d0;
  const auto& mans = script.maneuvers;
  for (std::size_t k = 0; k < mans.size(); ++k) {
    const LateralManeuver& m = mans[k];
    if (t < m.t_start) break;
    const double end = k + 1 < mans.size() ? std::min(t, mans[k + 1].t_start) : t;
    const double need = std::abs(m.target_offset - st.d) / m.rate;
    const double elapsed = end - m.t_start;
    const double dir = m.target_offset >= st.d ? 1.0 : -1.0;
    if (elapsed < need) {
      st.d += dir * m.rate * elapsed;
      st.d_rate = dir * m.rate;
    } else {
      st.d = m.target_offset;
      st.d_rate = 0.0;
    }
  }
  return st;
}

namespace {

std::vector<Vec2> waypoint_positions(const std::vector<Waypoint>& wps) {
  std::vector<Vec2> out;
  out.reserve(wps.size());
  for (const auto& w : wps) out.push_back({w.x, w.y});
  return out;
}

CycleSpec validated(CycleSpec spec) {
  std::vector<std::string> problems;
  if (!(spec.duration > 0)) problems.push_back("duration must be positive");
  if (!(spec.dt > 0)) problems.push_back("dt must be positive");
  if (!(spec.weather > 0 && spec.weather <= 1)) problems.push_back("weather must lie in (0, 1]");
  if (spec.ego_waypoints.size() < 2) problems.push_back("at least two ego waypoints are required");
  for (std::size_t k = 0; k < spec.ego_waypoints.size(); ++k) {
    if (!(spec.ego_waypoints[k].speed > 0)) {
      problems.push_back("waypoint " + std::to_string(k) + " speed must be positive");
      break;
    }
  }
  if (spec.feature != Feature::kLka && spec.actors.empty()) {
    problems.push_back(std::string(to_string(spec.feature)) + " cycles need at least one actor");
  }
  for (std::size_t a = 0; a < spec.actors.size(); ++a) {
    const ActorScript& s = spec.actors[a];
    const std::string tag = "actor " + std::to_string(s.actor_id);
    for (std::size_t b = 0; b < a; ++b) {
      if (spec.actors[b].actor_id == s.actor_id) problems.push_back(tag + " id is duplicated");
    }
    if (s.actor_id < 0) problems.push_back(tag + " id must be non-negative");
    if (s.v0 < 0) problems.push_back(tag + " initial speed must be non-negative");
    if (!(s.length > 0 && s.width > 0)) problems.push_back(tag + " footprint must be positive");
    for (const auto& ph : s.phases) {
      if (ph.duration < 0) problems.push_back(tag + " has a negative phase duration");
    }
    for (std::size_t m = 0; m < s.maneuvers.size(); ++m) {
      if (!(s.maneuvers[m].rate > 0)) problems.push_back(tag + " lateral rate must be positive");
      if (m > 0 && s.maneuvers[m].t_start < s.maneuvers[m - 1].t_start) {
        problems.push_back(tag + " manoeuvres must be sorted by start time");
      }
    }
  }
  if (!(spec.lane.lane_width > 0)) problems.push_back("lane width must be positive");
  if (spec.lane.segments.empty()) problems.push_back("lane model needs at least one segment");
  for (std::size_t k = 1; k < spec.lane.segments.size(); ++k) {
    if (!(spec.lane.segments[k].s_end > spec.lane.segments[k - 1].s_end)) {
      problems.push_back("lane segments must have increasing s_end");
    }
  }
  if (!problems.empty()) throw_problems("invalid drive cycle " + std::to_string(spec.id), problems);
  return spec;
}

}  // namespace

DriveCycle::DriveCycle(CycleSpec spec)
    : spec_(validated(std::move(spec))), route_(waypoint_positions(spec_.ego_waypoints)) {
  const auto& cum = route_.cumulative();
  segment_start_time_.push_back(0.0);
  for (std::size_t k = 0; k + 1 < spec_.ego_waypoints.size(); ++k) {
    const double v0 = spec_.ego_waypoints[k].speed;
    const double v1 = spec_.ego_waypoints[k + 1].speed;
    const double len = cum[k + 1] - cum[k];
    segment_start_time_.push_back(segment_start_time_.back() + 2.0 * len / (v0 + v1));
  }
}

int DriveCycle::step_count() const {
  return static_cast<int>(std::floor(spec_.duration / spec_.dt + 1e-9)) + 1;
}

DriveCycle::EgoState DriveCycle::ego_state(double t) const {
  const auto& wps = spec_.ego_waypoints;
  const auto& cum = route_.cumulative();
  EgoState st;
  if (t >= segment_start_time_.back()) {
    st.speed = wps.back().speed;
    st.s = route_.length() + st.speed * (t - segment_start_time_.back());
    return st;
  }
  auto it = std::upper_bound(segment_start_time_.begin(), segment_start_time_.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - segment_start_time_.begin()) - 1;
  const double v0 = wps[k].speed;
  const double v1 = wps[k + 1].speed;
  const double len = cum[k + 1] - cum[k];
  const double a = (v1 * v1 - v0 * v0) / (2.0 * len);
  const double tau = t - segment_start_time_[k];
  st.s = cum[k] + v0 * tau + 0.5 * a * tau * tau;
  st.speed = v0 + a * tau;
  st.accel = a;
  return st;
}

Vec2 DriveCycle::actor_world_position(const ActorScript& script, double t) const {
  const FrenetState fs = evaluate_script(script, t);
  const Route::Sample rs = route_.at(fs.s);
  return rs.position + left_of(rs.heading) * fs.d;
}

GroundTruthFrame DriveCycle::frame_at(double t) const {
  if (!(t >= 0.0 && t <= spec_.duration + 1e-9)) {
    throw Error(ErrorCode::kTimeDomain, "time " + std::to_string(t) + " outside [0, " +
                                            std::to_string(spec_.duration) + "]");
  }
  GroundTruthFrame frame;
  frame.t = t;
  const EgoState ego = ego_state(t);
  const Route::Sample es = route_.at(ego.s);
  frame.ego_position = es.position;
  frame.ego_heading = es.heading;
  frame.ego_speed = ego.speed;
  frame.ego_yaw_rate = ego.speed * es.curvature;

  const Vec2 fe = unit(es.heading);
  const Vec2 le = left_of(es.heading);
  const Vec2 ego_vel = fe * ego.speed;
  const double omega = frame.ego_yaw_rate;

  frame.actors.reserve(spec_.actors.size());
  for (const ActorScript& script : spec_.actors) {
    const FrenetState fs = evaluate_script(script, t);
    const Route::Sample rs = route_.at(fs.s);
    const Vec2 fa = unit(rs.heading);
    const Vec2 la = left_of(rs.heading);
    const double along = fs.v * (1.0 - rs.curvature * fs.d);
    const Vec2 pos = rs.position + la * fs.d;
    const Vec2 vel = fa * along + la * fs.d_rate;

    ActorTruth a;
    a.actor_id = script.actor_id;
    const Vec2 r = pos - frame.ego_position;
    a.position = {dot(r, le), dot(r, fe)};
    const Vec2 vrel = vel - ego_vel;
    a.velocity = {dot(vrel, le) - omega * a.position.y, dot(vrel, fe) + omega * a.position.x};
    a.ground_velocity = {dot(vel, le), dot(vel, fe)};
    const double world_heading =
        rs.heading + ((along == 0.0 && fs.d_rate == 0.0) ? 0.0 : std::atan2(fs.d_rate, along));
    a.heading = wrap_angle(world_heading - es.heading);
    a.length = script.length;
    a.width = script.width;
    frame.actors.push_back(a);
  }

  const auto& segs = spec_.lane.segments;
  auto seg = std::find_if(segs.begin(), segs.end(),
                          [&](const LaneSegment& l) { return ego.s <= l.s_end; });
  if (seg == segs.end()) seg = std::prev(segs.end());
  frame.lane.left_present = seg->left_marked;
  frame.lane.right_present = seg->right_marked;
  frame.lane.left_offset = 0.5 * spec_.lane.lane_width;
  frame.lane.right_offset = -0.5 * spec_.lane.lane_width;
  return frame;
}

std::vector<TruthRow> ground_truth_trace(const DriveCycle& cycle) {
  std::vector<TruthRow> rows;
  for (int k = 0; k < cycle.step_count(); ++k) {
    const GroundTruthFrame f = cycle.frame_at(std::min(cycle.step_time(k), cycle.duration()));
    for (const ActorTruth& a : f.actors) {
      rows.push_back({f.t, a.actor_id, a.position.x, a.position.y, a.velocity.x, a.velocity.y});
    }
  }
  return rows;
}

CycleCheck check_cycle(const DriveCycle& cycle, const CycleParams& params) {
  CycleCheck out;
  const int n = cycle.step_count();
  const double dt = cycle.dt();
  const double half_lane = 0.5 * params.lane_width;
  const double front = 0.5 * params.ego_length;
  const OrientedRect ego_rect{{0.0, 0.0}, 0.0, params.ego_length, params.ego_width};
  const Footprint ego{params.ego_length, params.ego_width};
  const SafetyParams safety;

  int lead_steps = 0;
  int blind_run = 0;
  int best_blind_run = 0;
  bool any_marking = false;
  std::vector<int> vicinity_run(cycle.spec().actors.size(), 0);
  std::vector<int> best_vicinity(cycle.spec().actors.size(), 0);
  bool collided = false;
  bool early_violation = false;

  for (int k = 0; k < n; ++k) {
    const GroundTruthFrame f = cycle.frame_at(std::min(cycle.step_time(k), cycle.duration()));
    any_marking = any_marking || f.lane.left_present || f.lane.right_present;
    bool lead = false;
    bool blind = false;
    for (std::size_t i = 0; i < f.actors.size(); ++i) {
      const ActorTruth& a = f.actors[i];
      const Vec2 p = a.position;
      if (!collided && rects_overlap(ego_rect, a.footprint())) {
        out.problems.push_back("actor " + std::to_string(a.actor_id) + " collides with ego at t=" +
                               std::to_string(f.t));
        collided = true;
      }
      for (std::size_t j = 0; j < i && !collided; ++j) {
        if (rects_overlap(a.footprint(), f.actors[j].footprint())) {
          out.problems.push_back("actors " + std::to_string(a.actor_id) + " and " +
                                 std::to_string(f.actors[j].actor_id) + " collide at t=" +
                                 std::to_string(f.t));
          collided = true;
        }
      }
      if (f.t < 1.0 && !early_violation && rss_violation(a, f.ego_speed, ego, safety)) {
        out.problems.push_back("actor " + std::to_string(a.actor_id) +
                               " violates the safe distance within the first second");
        early_violation = true;
      }
      if (std::abs(p.x) <= half_lane && p.y >= front && p.y <= front + 100.0) lead = true;
      if (std::abs(p.x) >= half_lane && std::abs(p.x) <= 3.0 * half_lane && p.y <= -front &&
          p.y >= -front - 10.0) {
        blind = true;
      }
      if (p.norm() <= 30.0) {
        best_vicinity[i] = std::max(best_vicinity[i], ++vicinity_run[i]);
      } else {
        vicinity_run[i] = 0;
      }
    }
    if (lead) ++lead_steps;
    blind_run = blind ? blind_run + 1 : 0;
    best_blind_run = std::max(best_blind_run, blind_run);
  }

  const Feature feat = cycle.feature();
  if ((feat == Feature::kAcc || feat == Feature::kFcw) && lead_steps < 0.8 * n) {
    out.problems.push_back("lead actor inside the forward zones for only " +
                           std::to_string(100.0 * lead_steps / n) + "% of the cycle");
  }
  if (feat == Feature::kBw && (best_blind_run - 1) * dt < 2.0 - 1e-9) {
    out.problems.push_back("no blindspot dwell of at least 2 s");
  }
  const bool vicinity = std::any_of(best_vicinity.begin(), best_vicinity.end(),
                                    [&](int run) { return (run - 1) * dt >= 1.0 - 1e-9; });
  if (!vicinity) out.problems.push_back("no actor stays within 30 m for at least 1 s");
  if (!any_marking) out.problems.push_back("no lane markings anywhere on the cycle");
  return out;
}

namespace {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double draw(Rng& rng) const { return rng.uniform(lo, hi); }
};

/// Scripted-traffic parameter ranges. The optimisation and held-out tables
/// never overlap.
struct TrafficTable {
  int id_base = 0;
  bool pin_first_acc = false;
  Range acc_speed, acc_gap, acc_accel;
  Range event_frac;
  Range fcw_speed, fcw_brake, fcw_margin, cut_in_rate;
  Range lka_speed, lka_radius;
  Range bw_speed, bw_closing, bw_dwell;
  Range weather;
};

const TrafficTable kOptimisationTable{
    0,           true,         {12, 18},   {30, 40},     {0.8, 1.4}, {0.10, 0.20},
    {13, 18},    {5.0, 6.5},   {3, 8},     {0.8, 1.2},   {12, 16},   {100, 300},
    {15, 22},    {2.0, 3.0},   {3.0, 5.0}, {0.6, 0.8},
};

const TrafficTable kHeldOutTable{
    100,         false,        {19, 24},   {41, 50},     {1.5, 2.0}, {0.22, 0.32},
    {19, 23},    {6.6, 8.0},   {8.5, 12},  {1.3, 1.6},   {17, 20},   {300.5, 500},
    {23, 28},    {3.2, 4.0},   {5.5, 7.0}, {0.45, 0.59},
};

struct RoutePiece {
  double length = 0.0;
  double curvature = 0.0;
};

std::vector<Vec2> build_centerline(double heading, const std::vector<RoutePiece>& pieces) {
  std::vector<Vec2> pts{{0.0, 0.0}};
  Vec2 p{0.0, 0.0};
  for (const RoutePiece& piece : pieces) {
    const int steps = std::max(1, static_cast<int>(std::round(piece.length)));
    const double ds = piece.length / steps;
    for (int i = 0; i < steps; ++i) {
      const double dtheta = piece.curvature * ds;
      const double chord = std::abs(dtheta) < 1e-12 ? ds : 2.0 * std::sin(0.5 * dtheta) / piece.curvature;
      p = p + unit(heading + 0.5 * dtheta) * chord;
      heading += dtheta;
      pts.push_back(p);
    }
  }
  return pts;
}

std::vector<Waypoint> with_speed(const std::vector<Vec2>& pts, double base, double ripple) {
  std::vector<Waypoint> out;
  out.reserve(pts.size());
  double s = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (k > 0) s += (pts[k] - pts[k - 1]).norm();
    out.push_back({pts[k].x, pts[k].y, base + ripple * std::sin(2.0 * kPi * s / 400.0)});
  }
  return out;
}

double safe_following_gap(double v, const CycleParams& params, double actor_length = 4.5) {
  return rss_longitudinal(v, v, SafetyParams{}) + 0.5 * (params.ego_length + actor_length);
}

LaneModel all_marked(double lane_width) { return {lane_width, {{1e9, true, true}}}; }

struct Builder {
  const CycleParams& params;
  const TrafficTable& table;
  Rng& rng;
  int index;  // 0..4 within the feature

  double route_length(double v_max) const { return v_max * params.duration + 300.0; }
  double weather() { return index >= 3 ? table.weather.draw(rng) : 1.0; }
  double side() const { return index % 2 == 0 ? 1.0 : -1.0; }

  std::vector<RoutePiece> mostly_straight(double total) {
    const double lead_in = 0.4 * total;
    const double radius = rng.uniform(1500.0, 3000.0) * (rng.below(2) ? 1.0 : -1.0);
    const double arc = rng.uniform(100.0, 200.0);
    return {{lead_in, 0.0}, {arc, 1.0 / radius}, {total - lead_in - arc, 0.0}};
  }

  CycleSpec acc() {
    const bool pinned = table.pin_first_acc && index == 0;
    const double v = pinned ? 12.0 : table.acc_speed.draw(rng);
    const double gap = pinned ? 30.0 : std::max(table.acc_gap.draw(rng), safe_following_gap(v, params) + 3.0);
    const double heading = rng.uniform(-kPi, kPi);
    const double len = route_length(v + 2.0);

    ActorScript lead;
    lead.actor_id = 1;
    lead.s0 = gap;
    lead.v0 = v;
    const double accel = table.acc_accel.draw(rng);
    double t = std::max(2.0, table.event_frac.draw(rng) * params.duration);
    lead.phases.push_back({t, 0.0});
    bool speed_up = true;
    while (t < params.duration) {
      const double ramp = rng.uniform(3.0, 5.0);
      const double hold = rng.uniform(1.0, 3.0);
      const double cruise = rng.uniform(3.0, 6.0);
      const double a = speed_up ? accel : -accel;
      lead.phases.push_back({ramp, a});
      lead.phases.push_back({hold, 0.0});
      lead.phases.push_back({ramp, -a});
      lead.phases.push_back({cruise, 0.0});
      t += 2 * ramp + hold + cruise;
      speed_up = !speed_up;
    }

    ActorScript passer;
    passer.actor_id = 2;
    passer.d0 = side() * params.lane_width;
    const double start = rng.uniform(35.0, 55.0);
    const double closing = (start + 20.0) / (0.7 * params.duration);
    if (index % 2 == 0) {
      passer.s0 = start;
      passer.v0 = std::max(0.0, v - closing);
    } else {
      passer.s0 = -start;
      passer.v0 = v + closing;
    }

    CycleSpec spec;
    spec.feature = Feature::kAcc;
    spec.ego_waypoints = with_speed(build_centerline(heading, mostly_straight(len)), v, 0.0);
    spec.actors = {lead, passer};
    spec.lane = all_marked(params.lane_width);
    spec.weather = weather();
    return spec;
  }

  CycleSpec fcw() {
    const double v = table.fcw_speed.draw(rng);
    const double heading = rng.uniform(-kPi, kPi);
    const double len = route_length(v + 2.0);
    const double brake = table.fcw_brake.draw(rng);
    const double brake_time = rng.uniform(1.0, 1.5);
    const double dv = std::min(brake * brake_time, v - 2.0);
    const double t_brake = dv / brake;
    constexpr double kRecover = 2.5;
    const double t_recover = dv / kRecover;
    const double lost = 0.5 * brake * t_brake * t_brake + dv * dv / (2.0 * kRecover);
    const double restore = std::sqrt(lost);
    const double gap = std::max(safe_following_gap(v, params) + table.fcw_margin.draw(rng),
                                lost + 0.5 * (params.ego_length + 4.5) + 4.0);

    ActorScript lead;
    lead.actor_id = 1;
    lead.s0 = gap;
    lead.v0 = v;
    double t = std::max(2.0, table.event_frac.draw(rng) * params.duration);
    lead.phases.push_back({t, 0.0});
    double first_event_end = -1.0;
    while (t < params.duration) {
      lead.phases.push_back({t_brake, -brake});
      lead.phases.push_back({t_recover, kRecover});
      lead.phases.push_back({1.0, 0.0});
      lead.phases.push_back({restore, 1.0});
      lead.phases.push_back({restore, -1.0});
      t += t_brake + t_recover + 1.0 + 2.0 * restore;
      if (first_event_end < 0) first_event_end = t;
      const double cruise = rng.uniform(6.0, 10.0);
      lead.phases.push_back({cruise, 0.0});
      t += cruise;
    }

    ActorScript cutter;
    cutter.actor_id = 2;
    cutter.d0 = side() * params.lane_width;
    cutter.s0 = rng.uniform(0.45, 0.6) * gap;
    cutter.v0 = v;
    const double rate = table.cut_in_rate.draw(rng);
    const double t_cut = first_event_end + rng.uniform(0.5, 2.0);
    const double hold = rng.uniform(3.0, 5.0);
    cutter.maneuvers.push_back({t_cut, 0.0, rate});
    cutter.maneuvers.push_back({t_cut + params.lane_width / rate + hold, cutter.d0, rate});

    CycleSpec spec;
    spec.feature = Feature::kFcw;
    spec.ego_waypoints = with_speed(build_centerline(heading, mostly_straight(len)), v, 0.0);
    spec.actors = {lead, cutter};
    spec.lane = all_marked(params.lane_width);
    spec.weather = weather();
    return spec;
  }

  CycleSpec lka() {
    const double v = table.lka_speed.draw(rng);
    const double heading = rng.uniform(-kPi, kPi);
    const double len = route_length(v + 1.0);
    std::vector<RoutePiece> pieces{{80.0, 0.0}};
    double total = 80.0;
    double turn_sign = rng.below(2) ? 1.0 : -1.0;
    while (total < len) {
      const double radius = table.lka_radius.draw(rng);
      const double angle = deg_to_rad(rng.uniform(25.0, 50.0));
      const double straight = rng.uniform(50.0, 150.0);
      pieces.push_back({radius * angle, turn_sign / radius});
      pieces.push_back({straight, 0.0});
      total += radius * angle + straight;
      turn_sign = -turn_sign;
    }

    const double travel = v * params.duration;
    LaneModel lane{params.lane_width, {}};
    const double gap_start = rng.uniform(0.15, 0.35) * travel;
    const double gap_len = rng.uniform(0.15, 0.25) * travel;
    const bool left_gap = index % 3 != 1;
    const bool right_gap = index % 3 != 0;
    lane.segments.push_back({gap_start, true, true});
    lane.segments.push_back({gap_start + gap_len, !left_gap, true});
    const double second_start = gap_start + gap_len + rng.uniform(0.1, 0.2) * travel;
    lane.segments.push_back({second_start, true, true});
    lane.segments.push_back({second_start + rng.uniform(0.1, 0.2) * travel, true, !right_gap});
    lane.segments.push_back({1e9, true, true});

    ActorScript drifter;
    drifter.actor_id = 1;
    drifter.d0 = side() * params.lane_width;
    drifter.s0 = rng.uniform(8.0, 20.0);
    drifter.v0 = v;
    double t = std::max(1.5, rng.uniform(0.05, 0.15) * params.duration);
    while (t < params.duration) {
      const double inward = side() * (params.lane_width - rng.uniform(0.6, 1.0));
      drifter.maneuvers.push_back({t, inward, 0.3});
      drifter.maneuvers.push_back({t + rng.uniform(4.0, 6.0), drifter.d0, 0.3});
      t += rng.uniform(12.0, 18.0);
    }

    ActorScript passer;
    passer.actor_id = 2;
    passer.d0 = -side() * params.lane_width;
    const double start = rng.uniform(20.0, 35.0);
    passer.s0 = -start;
    passer.v0 = v + (start + 25.0) / (0.6 * params.duration);

    CycleSpec spec;
    spec.feature = Feature::kLka;
    spec.ego_waypoints = with_speed(build_centerline(heading, pieces), v, 0.8);
    spec.actors = {drifter, passer};
    spec.lane = lane;
    spec.weather = weather();
    return spec;
  }

  ActorScript overtaker(int id, double d0, double v, double arrive, double closing, double dwell) {
    ActorScript a;
    a.actor_id = id;
    a.d0 = d0;
    const double park = -(0.5 * params.ego_length + 5.0);
    a.s0 = park - closing * (arrive + 0.5);
    a.v0 = v + closing;
    const double leave = rng.uniform(1.5, 2.5);
    a.phases = {{arrive, 0.0}, {1.0, -closing}, {dwell, 0.0}, {1.5, leave}};
    return a;
  }

  CycleSpec bw() {
    const double v = table.bw_speed.draw(rng);
    const double heading = rng.uniform(-kPi, kPi);
    const double len = route_length(v + 5.0);
    const double closing = table.bw_closing.draw(rng);
    const double dwell = table.bw_dwell.draw(rng);
    const double arrive = std::max(2.0, table.event_frac.draw(rng) * params.duration);
    const double arrive2 = arrive + dwell + rng.uniform(6.0, 10.0);

    CycleSpec spec;
    spec.feature = Feature::kBw;
    spec.ego_waypoints = with_speed(build_centerline(heading, mostly_straight(len)), v, 0.0);
    spec.actors = {overtaker(1, side() * params.lane_width, v, arrive, closing, dwell),
                   overtaker(2, -side() * params.lane_width, v, arrive2, table.bw_closing.draw(rng),
                             table.bw_dwell.draw(rng))};
    spec.lane = all_marked(params.lane_width);
    spec.weather = weather();
    return spec;
  }
};

std::vector<DriveCycle> generate_from(const CycleParams& params, Rng& rng, const TrafficTable& table) {
  if (!(params.duration > 0) || !(params.dt > 0) || params.cycles_per_feature < 1) {
    throw Error(ErrorCode::kValidation, "cycle parameters need duration > 0, dt > 0 and >= 1 cycle per feature");
  }
  constexpr int kAttempts = 200;
  std::vector<DriveCycle> out;
  int id = table.id_base;
  for (Feature feature : kAllFeatures) {
    for (int k = 0; k < params.cycles_per_feature; ++k, ++id) {
      std::string last_problem;
      bool done = false;
      for (int attempt = 0; attempt < kAttempts && !done; ++attempt) {
        Builder b{params, table, rng, k};
        CycleSpec spec;
        switch (feature) {
          case Feature::kAcc: spec = b.acc(); break;
          case Feature::kFcw: spec = b.fcw(); break;
          case Feature::kLka: spec = b.lka(); break;
          case Feature::kBw: spec = b.bw(); break;
        }
        spec.id = id;
        spec.duration = params.duration;
        spec.dt = params.dt;
        DriveCycle cycle(std::move(spec));
        const CycleCheck check = check_cycle(cycle, params);
        if (check.ok()) {
          out.push_back(std::move(cycle));
          done = true;
        } else {
          last_problem = check.problems.front();
        }
      }
      if (!done) {
        throw Error(ErrorCode::kConfiguration, "could not generate drive cycle " + std::to_string(id) +
                                                   " (" + std::string(to_string(feature)) +
                                                   "): " + last_problem);
      }
    }
  }
  return out;
}

}  // namespace

std::vector<DriveCycle> generate_standard_cycles(const CycleParams& params, Rng& rng) {
  return generate_from(params, rng, kOptimisationTable);
}

std::vector<DriveCycle> test_cycles(const CycleParams& params, Rng& rng) {
  return generate_from(params, rng, kHeldOutTable);
}

}  // namespace percarch
