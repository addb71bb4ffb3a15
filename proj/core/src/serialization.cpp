#include "percarch/serialization.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

#include "percarch/error.hpp"
#include "percarch/format.hpp"
#include "percarch/tables.hpp"

namespace percarch {

using nlohmann::ordered_json;

namespace {

ordered_json parse(std::string_view text, const char* what) {
  try {
    return ordered_json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string(what) + ": " + e.what());
  }
}

// Wraps nlohmann type/key errors as kParse with some context.
template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string(what) + ": " + e.what());
  }
}

std::string num(double v) { return format_double(v); }

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string genome_to_json(const DesignGenome& genome) {
  ordered_json j;
  j["detector"] = detector(genome.detector_index).name;
  j["fusion"] = std::string(to_string(genome.fusion));
  ordered_json slots = ordered_json::array();
  for (int s = 0; s < kSensorSlots; ++s) {
    const SensorGene& g = genome.sensors[s];
    slots.push_back({{"slot", s},
                     {"kind", std::string(to_string(g.kind))},
                     {"active", g.active},
                     {"region", std::string(1, g.region_id)},
                     {"i", g.grid_i},
                     {"j", g.grid_j},
                     {"roll_deg", g.roll_deg},
                     {"pitch_deg", g.pitch_deg},
                     {"yaw_deg", g.yaw_deg}});
  }
  j["slots"] = std::move(slots);
  return dump(j);
}

DesignGenome genome_from_json(std::string_view text) {
  const ordered_json j = parse(text, "genome");
  return guarded("genome", [&] {
    DesignGenome g;
    g.detector_index = detector_index(j.at("detector").get<std::string>());
    g.fusion = fusion_from_string(j.at("fusion").get<std::string>());
    const auto& slots = j.at("slots");
    if (!slots.is_array() || slots.size() != kSensorSlots) {
      throw Error(ErrorCode::kParse, "genome: expected 8 slots");
    }
    for (const auto& row : slots) {
      const int s = row.at("slot").get<int>();
      if (s < 0 || s >= kSensorSlots) throw Error(ErrorCode::kParse, "genome: slot out of range");
      SensorGene& gene = g.sensors[s];
      gene.active = row.at("active").get<bool>();
      const std::string region = row.at("region").get<std::string>();
      if (region.size() != 1) throw Error(ErrorCode::kParse, "genome: region must be one letter");
      gene.region_id = region[0];
      gene.grid_i = row.at("i").get<int>();
      gene.grid_j = row.at("j").get<int>();
      gene.roll_deg = row.at("roll_deg").get<int>();
      gene.pitch_deg = row.at("pitch_deg").get<int>();
      gene.yaw_deg = row.at("yaw_deg").get<int>();
    }
    return g;
  });
}

std::string cycles_to_json(std::span<const DriveCycle> cycles) {
  ordered_json arr = ordered_json::array();
  for (const DriveCycle& c : cycles) {
    const CycleSpec& s = c.spec();
    ordered_json j;
    j["id"] = s.id;
    j["feature"] = std::string(to_string(s.feature));
    j["duration"] = s.duration;
    j["dt"] = s.dt;
    j["weather"] = s.weather;
    j["lane_width"] = s.lane.lane_width;
    ordered_json lane = ordered_json::array();
    for (const LaneSegment& seg : s.lane.segments) {
      lane.push_back({{"s_end", seg.s_end}, {"left", seg.left_marked}, {"right", seg.right_marked}});
    }
    j["lane_segments"] = std::move(lane);
    ordered_json wps = ordered_json::array();
    for (const Waypoint& w : s.ego_waypoints) wps.push_back({w.x, w.y, w.speed});
    j["ego_waypoints"] = std::move(wps);
    ordered_json actors = ordered_json::array();
    for (const ActorScript& a : s.actors) {
      ordered_json aj;
      aj["actor_id"] = a.actor_id;
      aj["s0"] = a.s0;
      aj["v0"] = a.v0;
      aj["d0"] = a.d0;
      aj["length"] = a.length;
      aj["width"] = a.width;
      ordered_json phases = ordered_json::array();
      for (const auto& p : a.phases) phases.push_back({p.duration, p.accel});
      aj["phases"] = std::move(phases);
      ordered_json man = ordered_json::array();
      for (const auto& m : a.maneuvers) man.push_back({m.t_start, m.target_offset, m.rate});
      aj["maneuvers"] = std::move(man);
      actors.push_back(std::move(aj));
    }
    j["actors"] = std::move(actors);
    arr.push_back(std::move(j));
  }
  ordered_json root;
  root["cycles"] = std::move(arr);
  return dump(root);
}

std::vector<DriveCycle> cycles_from_json(std::string_view text) {
  const ordered_json root = parse(text, "cycles");
  return guarded("cycles", [&] {
    std::vector<DriveCycle> out;
    for (const auto& j : root.at("cycles")) {
      CycleSpec s;
      s.id = j.at("id").get<int>();
      s.feature = feature_from_string(j.at("feature").get<std::string>());
      s.duration = j.at("duration").get<double>();
      s.dt = j.at("dt").get<double>();
      s.weather = j.at("weather").get<double>();
      s.lane.lane_width = j.at("lane_width").get<double>();
      for (const auto& seg : j.at("lane_segments")) {
        s.lane.segments.push_back(
            {seg.at("s_end").get<double>(), seg.at("left").get<bool>(), seg.at("right").get<bool>()});
      }
      for (const auto& w : j.at("ego_waypoints")) {
        s.ego_waypoints.push_back({w.at(0).get<double>(), w.at(1).get<double>(), w.at(2).get<double>()});
      }
      for (const auto& aj : j.at("actors")) {
        ActorScript a;
        a.actor_id = aj.at("actor_id").get<int>();
        a.s0 = aj.at("s0").get<double>();
        a.v0 = aj.at("v0").get<double>();
        a.d0 = aj.at("d0").get<double>();
        a.length = aj.at("length").get<double>();
        a.width = aj.at("width").get<double>();
        for (const auto& p : aj.at("phases")) a.phases.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        for (const auto& m : aj.at("maneuvers")) {
          a.maneuvers.push_back({m.at(0).get<double>(), m.at(1).get<double>(), m.at(2).get<double>()});
        }
        s.actors.push_back(std::move(a));
      }
      out.emplace_back(std::move(s));
    }
    return out;
  });
}

std::string report_to_json(const EvaluationReport& report, const CostWeights& weights) {
  ordered_json j;
  j["cost"] = report.cost;
  ordered_json agg;
  ordered_json w;
  for (int m = 0; m < kMetricCount; ++m) {
    agg[std::string(metric_name(m))] = report.aggregate[m];
    w[std::string(metric_name(m))] = weights.w[m];
  }
  j["metrics"] = std::move(agg);
  j["weights"] = std::move(w);
  ordered_json cycles = ordered_json::array();
  for (const CycleReport& c : report.cycles) {
    ordered_json cj;
    cj["cycle_id"] = c.cycle_id;
    cj["feature"] = std::string(to_string(c.feature));
    ordered_json m;
    for (int k = 0; k < kMetricCount; ++k) m[std::string(metric_name(k))] = c.metrics[k];
    cj["metrics"] = std::move(m);
    cj["cost_contribution"] = c.cost_contribution;
    cj["diagnostics"] = {{"matched_pairs", c.diagnostics.matched_pairs},
                         {"confirmed_samples", c.diagnostics.confirmed_samples},
                         {"max_tracks", c.diagnostics.max_tracks},
                         {"vicinity_actors", c.diagnostics.vicinity_actors},
                         {"violating_actors", c.diagnostics.violating_actors},
                         {"late_actors", c.diagnostics.late_actors}};
    cycles.push_back(std::move(cj));
  }
  j["cycles"] = std::move(cycles);
  return dump(j);
}

std::string trace_csv(const SearchTrace& trace) {
  std::ostringstream os;
  os << "iteration,best_cost,mean_cost\n";
  for (const TraceRow& r : trace.rows) {
    os << r.iteration << ',' << num(r.best_cost) << ',' << num(r.mean_cost) << '\n';
  }
  return os.str();
}

std::string ablation_csv(std::span<const AblationRow> rows) {
  std::ostringstream os;
  os << "mode,seed,best_cost,iterations,wall_time_s\n";
  for (const AblationRow& r : rows) {
    os << to_string(r.mode) << ',' << r.seed << ',' << num(r.best_cost) << ',' << r.iterations << ','
       << format_fixed(r.wall_time_s, 3) << '\n';
  }
  return os.str();
}

std::string cycle_metrics_csv(const EvaluationReport& report) {
  std::ostringstream os;
  os << "cycle_id,feature";
  for (int m = 0; m < kMetricCount; ++m) os << ',' << metric_name(m);
  os << ",cost_contribution\n";
  for (const CycleReport& c : report.cycles) {
    os << c.cycle_id << ',' << to_string(c.feature);
    for (double v : c.metrics) os << ',' << num(v);
    os << ',' << num(c.cost_contribution) << '\n';
  }
  return os.str();
}

std::string ground_truth_csv(const DriveCycle& cycle) {
  std::ostringstream os;
  os << "t,actor_id,x,y,vx,vy\n";
  for (const TruthRow& r : ground_truth_trace(cycle)) {
    os << num(r.t) << ',' << r.actor_id << ',' << num(r.x) << ',' << num(r.y) << ',' << num(r.vx) << ','
       << num(r.vy) << '\n';
  }
  return os.str();
}

std::string zone_polygons_csv(const VehicleLayout& layout) {
  std::ostringstream os;
  os << "zone_id,vertex_index,x,y\n";
  for (const FovZone& z : layout.zones()) {
    for (std::size_t v = 0; v < z.polygon.size(); ++v) {
      os << z.id << ',' << v << ',' << num(z.polygon[v].x) << ',' << num(z.polygon[v].y) << '\n';
    }
  }
  return os.str();
}

std::string tracks_csv(std::span<const TrackRow> rows) {
  std::ostringstream os;
  os << "t,track_id,x,y,vx,vy,confirmed\n";
  for (const TrackRow& r : rows) {
    const StateVec& x = r.track.x;
    os << num(r.t) << ',' << r.track.track_id << ',' << num(x(0)) << ',' << num(x(1)) << ',' << num(x(2))
       << ',' << num(x(3)) << ',' << (r.track.confirmed ? 1 : 0) << '\n';
  }
  return os.str();
}

std::vector<CoverageSample> coverage_grid(std::span<const PlacedSensor> sensors,
                                          const VehicleLayout& layout, double spacing) {
  if (!(spacing > 0)) throw Error(ErrorCode::kValidation, "coverage spacing must be positive");
  std::vector<Vec2> all;
  for (const FovZone& z : layout.zones()) all.insert(all.end(), z.polygon.begin(), z.polygon.end());
  if (all.empty()) return {};
  const Box2 box = bounding_box(all);
  const int nx = std::max(1, static_cast<int>(std::ceil((box.max.x - box.min.x) / spacing)));
  const int ny = std::max(1, static_cast<int>(std::ceil((box.max.y - box.min.y) / spacing)));
  std::vector<CoverageSample> out;
  out.reserve(static_cast<std::size_t>(nx) * ny);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      CoverageSample s;
      s.point = {box.min.x + (ix + 0.5) * spacing, box.min.y + (iy + 0.5) * spacing};
      for (const PlacedSensor& sensor : sensors) {
        if (covered_by_any(std::span<const PlacedSensor>(&sensor, 1), s.point)) ++s.sensor_count;
      }
      s.zone_ids = zone_membership(layout.zones(), s.point);
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::string coverage_grid_csv(std::span<const CoverageSample> samples) {
  std::ostringstream os;
  os << "x,y,covering_sensor_count,zone_ids\n";
  for (const CoverageSample& s : samples) {
    os << num(s.point.x) << ',' << num(s.point.y) << ',' << s.sensor_count << ',';
    for (std::size_t k = 0; k < s.zone_ids.size(); ++k) os << (k ? ";" : "") << s.zone_ids[k];
    os << '\n';
  }
  return os.str();
}

std::string zone_fraction_csv(const std::map<int, double>& fractions) {
  std::ostringstream os;
  os << "zone_id,covered_fraction\n";
  for (const auto& [id, f] : fractions) os << id << ',' << num(f) << '\n';
  return os.str();
}

}  // namespace percarch
