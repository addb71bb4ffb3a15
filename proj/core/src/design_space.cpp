#include "percarch/design_space.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "percarch/error.hpp"

namespace percarch {

namespace {

int snap(double u, int count) {
  if (count <= 1) return 0;
  const double x = std::clamp(std::isnan(u) ? 0.0 : u, 0.0, 1.0);
  const int idx = static_cast<int>(std::floor(x * (count - 1) + 0.5));
  return std::clamp(idx, 0, count - 1);
}

double normalise(int idx, int count) {
  return count <= 1 ? 0.0 : static_cast<double>(idx) / (count - 1);
}

int angle_from_index(const AngleLimits& lim, int idx) { return lim.lower + idx * lim.step; }

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

template <typename T>
int index_in(const std::vector<T>& values, T v) {
  auto it = std::find(values.begin(), values.end(), v);
  return it == values.end() ? -1 : static_cast<int>(it - values.begin());
}

void apply_mode(DesignGenome& g, const SearchBounds& bounds, SearchMode mode) {
  const ModeBinding b = mode_binding(mode);
  if (b.detector) g.detector_index = *b.detector;
  if (b.fusion) g.fusion = *b.fusion;
  for (int s = 0; s < kSensorSlots; ++s) {
    if (bounds.slots[s] == SlotPolicy::kForcedOn) g.sensors[s].active = true;
    if (bounds.slots[s] == SlotPolicy::kForcedOff) g.sensors[s].active = false;
  }
}

}  // namespace

std::string_view to_string(SearchMode mode) {
  switch (mode) {
    case SearchMode::kPasta: return "PASTA";
    case SearchMode::kPo: return "PO";
    case SearchMode::kOp: return "OP";
    case SearchMode::kVespa: return "VESPA";
    case SearchMode::kPod: return "POD";
    case SearchMode::kPof: return "POF";
  }
  return "?";
}

SearchMode search_mode_from_string(std::string_view name) {
  const std::string up = upper(name);
  for (SearchMode m : kAllModes) {
    if (to_string(m) == up) return m;
  }
  throw Error(ErrorCode::kParse, "unknown search mode '" + std::string(name) + "'");
}

ModeBinding mode_binding(SearchMode mode) {
  switch (mode) {
    case SearchMode::kPasta: return {};
    case SearchMode::kPod: return {std::nullopt, FusionAlgorithm::kEkf};
    case SearchMode::kPof: return {kYolov3, std::nullopt};
    case SearchMode::kPo:
    case SearchMode::kOp:
    case SearchMode::kVespa: return {kYolov3, FusionAlgorithm::kEkf};
  }
  return {};
}

DesignGenome::DesignGenome() {
  for (int s = 0; s < kSensorSlots; ++s) sensors[s].kind = slot_kind(s);
}

int DesignGenome::active_count() const {
  return static_cast<int>(
      std::count_if(sensors.begin(), sensors.end(), [](const SensorGene& g) { return g.active; }));
}

SearchBounds SearchBounds::from_layout(const VehicleLayout& layout) {
  SearchBounds b;
  for (const MountRegion& r : layout.regions()) {
    if (r.placeable) b.regions.push_back({r.id, r.max_i(), r.max_j()});
  }
  b.validate();
  return b;
}

void SearchBounds::validate() const {
  std::vector<std::string> problems;
  if (regions.empty()) problems.push_back("no placeable regions");
  for (const RegionGrid& r : regions) {
    if (r.max_i < 0 || r.max_j < 0) problems.push_back(std::string("region ") + r.id + " has an empty grid");
    if (std::count_if(regions.begin(), regions.end(), [&](const RegionGrid& o) { return o.id == r.id; }) > 1) {
      problems.push_back(std::string("region ") + r.id + " listed twice");
    }
  }
  auto check_angle = [&](const char* name, const AngleLimits& a) {
    if (a.step <= 0) {
      problems.push_back(std::string(name) + " step must be positive");
    } else if (a.upper < a.lower || (a.upper - a.lower) % a.step != 0) {
      problems.push_back(std::string(name) + " limits must satisfy lower <= upper on the step grid");
    }
  };
  check_angle("roll", roll);
  check_angle("pitch", pitch);
  check_angle("yaw", yaw);
  if (detectors.empty()) problems.push_back("no detectors allowed");
  for (int d : detectors) {
    if (d < 0 || d >= kDetectorCount) problems.push_back("detector index " + std::to_string(d) + " out of range");
  }
  if (fusions.empty()) problems.push_back("no fusion algorithms allowed");
  if (problems.empty()) return;
  std::string msg = "invalid search bounds:";
  for (const auto& p : problems) msg += "\n  - " + p;
  throw Error(ErrorCode::kValidation, msg);
}

int SearchBounds::region_index(char id) const {
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (regions[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

const RegionGrid& SearchBounds::region(char id) const {
  const int idx = region_index(id);
  if (idx < 0) throw Error(ErrorCode::kEncodingDomain, std::string("region ") + id + " not in bounds");
  return regions[idx];
}

void validate_genome(const DesignGenome& genome, const SearchBounds& bounds) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kEncodingDomain, what); };
  for (int s = 0; s < kSensorSlots; ++s) {
    const SensorGene& g = genome.sensors[s];
    const std::string slot = "slot " + std::to_string(s) + ": ";
    if (g.kind != slot_kind(s)) fail(slot + "sensor kind does not match slot");
    const int r = bounds.region_index(g.region_id);
    if (r < 0) fail(slot + "region " + g.region_id + " not searchable");
    const RegionGrid& grid = bounds.regions[r];
    if (g.grid_i < 0 || g.grid_i > grid.max_i || g.grid_j < 0 || g.grid_j > grid.max_j) {
      fail(slot + "grid point outside region");
    }
    if (!bounds.roll.contains(g.roll_deg)) fail(slot + "roll outside limits");
    if (!bounds.pitch.contains(g.pitch_deg)) fail(slot + "pitch outside limits");
    if (!bounds.yaw.contains(g.yaw_deg)) fail(slot + "yaw outside limits");
  }
  if (index_in(bounds.detectors, genome.detector_index) < 0) fail("detector not allowed");
  if (index_in(bounds.fusions, genome.fusion) < 0) fail("fusion algorithm not allowed");
}

std::vector<double> encode(const DesignGenome& genome, const SearchBounds& bounds) {
  validate_genome(genome, bounds);
  std::vector<double> v(kGenomeDim, 0.0);
  const int nregions = static_cast<int>(bounds.regions.size());
  for (int s = 0; s < kSensorSlots; ++s) {
    const SensorGene& g = genome.sensors[s];
    const RegionGrid& grid = bounds.region(g.region_id);
    double* slot = v.data() + s * kGenesPerSlot;
    slot[kGeneActive] = g.active ? 1.0 : 0.0;
    slot[kGeneRegion] = normalise(bounds.region_index(g.region_id), nregions);
    slot[kGeneGridI] = normalise(g.grid_i, grid.max_i + 1);
    slot[kGeneGridJ] = normalise(g.grid_j, grid.max_j + 1);
    slot[kGeneRoll] = normalise((g.roll_deg - bounds.roll.lower) / bounds.roll.step, bounds.roll.count());
    slot[kGenePitch] =
        normalise((g.pitch_deg - bounds.pitch.lower) / bounds.pitch.step, bounds.pitch.count());
    slot[kGeneYaw] = normalise((g.yaw_deg - bounds.yaw.lower) / bounds.yaw.step, bounds.yaw.count());
  }
  v[kGeneDetector] = normalise(index_in(bounds.detectors, genome.detector_index),
                               static_cast<int>(bounds.detectors.size()));
  v[kGeneFusion] =
      normalise(index_in(bounds.fusions, genome.fusion), static_cast<int>(bounds.fusions.size()));
  return v;
}

DesignGenome decode(std::span<const double> vec, const SearchBounds& bounds, SearchMode mode) {
  if (static_cast<int>(vec.size()) != kGenomeDim) {
    throw Error(ErrorCode::kShape, "genome vector has " + std::to_string(vec.size()) +
                                       " entries, expected " + std::to_string(kGenomeDim));
  }
  DesignGenome g;
  const int nregions = static_cast<int>(bounds.regions.size());
  for (int s = 0; s < kSensorSlots; ++s) {
    const double* slot = vec.data() + s * kGenesPerSlot;
    SensorGene& sg = g.sensors[s];
    sg.active = snap(slot[kGeneActive], 2) == 1;
    const RegionGrid& grid = bounds.regions.at(snap(slot[kGeneRegion], nregions));
    sg.region_id = grid.id;
    sg.grid_i = snap(slot[kGeneGridI], grid.max_i + 1);
    sg.grid_j = snap(slot[kGeneGridJ], grid.max_j + 1);
    sg.roll_deg = angle_from_index(bounds.roll, snap(slot[kGeneRoll], bounds.roll.count()));
    sg.pitch_deg = angle_from_index(bounds.pitch, snap(slot[kGenePitch], bounds.pitch.count()));
    sg.yaw_deg = angle_from_index(bounds.yaw, snap(slot[kGeneYaw], bounds.yaw.count()));
  }
  g.detector_index =
      bounds.detectors.at(snap(vec[kGeneDetector], static_cast<int>(bounds.detectors.size())));
  g.fusion = bounds.fusions.at(snap(vec[kGeneFusion], static_cast<int>(bounds.fusions.size())));
  apply_mode(g, bounds, mode);
  return g;
}

DesignGenome random_genome(Rng& rng, const SearchBounds& bounds, SearchMode mode) {
  DesignGenome g;
  for (int s = 0; s < kSensorSlots; ++s) {
    SensorGene& sg = g.sensors[s];
    sg.active = rng.below(2) == 1;
    const RegionGrid& grid = bounds.regions[rng.below(bounds.regions.size())];
    sg.region_id = grid.id;
    sg.grid_i = static_cast<int>(rng.below(grid.max_i + 1));
    sg.grid_j = static_cast<int>(rng.below(grid.max_j + 1));
    sg.roll_deg = angle_from_index(bounds.roll, static_cast<int>(rng.below(bounds.roll.count())));
    sg.pitch_deg = angle_from_index(bounds.pitch, static_cast<int>(rng.below(bounds.pitch.count())));
    sg.yaw_deg = angle_from_index(bounds.yaw, static_cast<int>(rng.below(bounds.yaw.count())));
  }
  g.detector_index = bounds.detectors[rng.below(bounds.detectors.size())];
  g.fusion = bounds.fusions[rng.below(bounds.fusions.size())];
  apply_mode(g, bounds, mode);
  return g;
}

CardinalityReport cardinality(const SearchBounds& bounds, int active_sensors) {
  if (active_sensors < 0 || active_sensors > kSensorSlots) {
    throw Error(ErrorCode::kOutOfBounds, "active sensor count must be in [0, 8]");
  }
  BigInt positions = 0;
  for (const RegionGrid& r : bounds.regions) positions += BigInt(r.point_count());
  CardinalityReport out;
  out.per_sensor = positions * bounds.roll.count() * bounds.pitch.count() * bounds.yaw.count();
  const BigInt choices = BigInt(bounds.detectors.size()) * BigInt(bounds.fusions.size());

  BigInt power = 1;
  BigInt binom = 1;
  for (int i = 0; i < active_sensors; ++i) {
    power *= out.per_sensor;
    binom = binom * (out.per_sensor - i) / (i + 1);
  }
  if (binom < 0) binom = 0;
  out.ordered_slots = power * choices;
  out.combinations = binom * choices;
  return out;
}

double genome_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kShape, "genome vectors differ in length");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sum);
}

std::uint64_t sensor_layout_hash(const DesignGenome& genome) {
  std::uint64_t h = mix64(0x5eedULL);
  for (int s = 0; s < kSensorSlots; ++s) {
    const SensorGene& g = genome.sensors[s];
    if (!g.active) continue;
    h = derive_key({h, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(g.region_id),
                    static_cast<std::uint64_t>(g.grid_i), static_cast<std::uint64_t>(g.grid_j),
                    static_cast<std::uint64_t>(g.roll_deg + 1000),
                    static_cast<std::uint64_t>(g.pitch_deg + 1000),
                    static_cast<std::uint64_t>(g.yaw_deg + 1000)});
  }
  return h;
}

std::vector<PlacedSensor> place_sensors(const DesignGenome& genome, const VehicleLayout& layout,
                                        const SensorSpec& camera, const SensorSpec& radar) {
  std::vector<PlacedSensor> out;
  for (int s = 0; s < kSensorSlots; ++s) {
    const SensorGene& g = genome.sensors[s];
    if (!g.active) continue;
    const MountRegion& region = layout.region(g.region_id);
    const Vec3 p = surface_point(region, g.grid_i, g.grid_j);
    const SensorPose pose{p.x, p.y, p.z, static_cast<double>(g.roll_deg),
                          static_cast<double>(g.pitch_deg), static_cast<double>(g.yaw_deg)};
    out.emplace_back(g.kind == SensorKind::kCamera ? camera : radar, pose, region.outward_normal, s);
  }
  return out;
}

DesignGenome industry_default_genome(const SearchBounds& bounds) {
  DesignGenome g;
  auto pick = [&](char preferred) -> const RegionGrid& {
    const int idx = bounds.region_index(preferred);
    return bounds.regions[idx < 0 ? 0 : idx];
  };
  auto clamp_angle = [](const AngleLimits& lim) {
    int best = lim.lower;
    for (int a = lim.lower; a <= lim.upper; a += lim.step) {
      if (std::abs(a) < std::abs(best)) best = a;
    }
    return best;
  };
  constexpr char kCameraRegions[] = {'D', 'E', 'D', 'E'};
  constexpr char kRadarRegions[] = {'A', 'J', 'A', 'J'};
  for (int s = 0; s < kSensorSlots; ++s) {
    const RegionGrid& grid = pick(s < kCameraSlots ? kCameraRegions[s] : kRadarRegions[s - kCameraSlots]);
    SensorGene& sg = g.sensors[s];
    sg.active = true;
    sg.region_id = grid.id;
    sg.grid_i = grid.max_i / 2;
    sg.grid_j = grid.max_j / 2;
    sg.roll_deg = clamp_angle(bounds.roll);
    sg.pitch_deg = clamp_angle(bounds.pitch);
    sg.yaw_deg = clamp_angle(bounds.yaw);
  }
  g.detector_index = kYolov3;
  g.fusion = FusionAlgorithm::kEkf;
  return g;
}

}  // namespace percarch
