#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "percarch/design_space.hpp"
#include "percarch/evaluation.hpp"
#include "percarch/fusion.hpp"
#include "percarch/scenario.hpp"
#include "percarch/search.hpp"

namespace percarch {

// JSON records. Readers throw kParse on malformed text or unknown names.

std::string genome_to_json(const DesignGenome& genome);
DesignGenome genome_from_json(std::string_view text);

std::string cycles_to_json(std::span<const DriveCycle> cycles);
std::vector<DriveCycle> cycles_from_json(std::string_view text);

std::string report_to_json(const EvaluationReport& report, const CostWeights& weights);

// CSV tables. Numbers go through format_double, so output is byte-stable.

std::string trace_csv(const SearchTrace& trace);
std::string ablation_csv(std::span<const AblationRow> rows);
/// cycle_id, feature, eight metric columns, cost_contribution
std::string cycle_metrics_csv(const EvaluationReport& report);
/// t, actor_id, x, y, vx, vy
std::string ground_truth_csv(const DriveCycle& cycle);
/// zone_id, vertex_index, x, y
std::string zone_polygons_csv(const VehicleLayout& layout);

struct TrackRow {
  double t = 0.0;
  TrackState track;
};
/// t, track_id, x, y, vx, vy, confirmed
std::string tracks_csv(std::span<const TrackRow> rows);

struct CoverageSample {
  Vec2 point;
  int sensor_count = 0;
  std::vector<int> zone_ids;
};

/// Cell-centre samples over the bounding box of all zones.
std::vector<CoverageSample> coverage_grid(std::span<const PlacedSensor> sensors,
                                          const VehicleLayout& layout, double spacing = 0.5);
/// x, y, covering_sensor_count, zone_ids (zone ids joined by ';')
std::string coverage_grid_csv(std::span<const CoverageSample> samples);
/// zone_id, covered_fraction
std::string zone_fraction_csv(const std::map<int, double>& fractions);

}  // namespace percarch
