#include "percarch/vehicle_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "percarch/error.hpp"

namespace percarch {

std::string_view to_string(Feature feature) {
  switch (feature) {
    case Feature::kAcc: return "ACC";
    case Feature::kFcw: return "FCW";
    case Feature::kLka: return "LKA";
    case Feature::kBw: return "BW";
  }
  return "?";
}

Feature feature_from_string(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (Feature f : kAllFeatures) {
    if (to_string(f) == upper) return f;
  }
  throw Error(ErrorCode::kParse, "unknown feature '" + std::string(name) + "'");
}

namespace {

constexpr double kGridEpsilon = 1e-9;

int grid_max(double extent, double step) {
  return static_cast<int>(std::floor(extent / step + kGridEpsilon));
}

bool is_unit(Vec3 v) { return std::abs(v.norm() - 1.0) < 1e-9; }

}  // namespace

int MountRegion::max_i() const { return grid_max(u_extent, grid_step); }
int MountRegion::max_j() const { return grid_max(v_extent, grid_step); }

Vec3 MountRegion::center() const {
  return origin + u_axis * (0.5 * max_i() * grid_step) + v_axis * (0.5 * max_j() * grid_step);
}

Vec3 surface_point(const MountRegion& region, int i, int j) {
  if (!region.placeable) {
    throw Error(ErrorCode::kPlacementForbidden,
                std::string("region ") + region.id + " is exempt from sensor placement");
  }
  if (i < 0 || j < 0 || i > region.max_i() || j > region.max_j()) {
    std::ostringstream os;
    os << "grid index (" << i << ", " << j << ") outside region " << region.id << " grid [0.."
       << region.max_i() << "]x[0.." << region.max_j() << "]";
    throw Error(ErrorCode::kOutOfBounds, os.str());
  }
  return region.origin + region.u_axis * (i * region.grid_step) +
         region.v_axis * (j * region.grid_step);
}

FeatureZoneRegionMap FeatureZoneRegionMap::defaults() {
  FeatureZoneRegionMap m;
  m.feature_to_zones[Feature::kAcc] = {1, 2};
  m.feature_to_zones[Feature::kFcw] = {1, 2, 3, 4};
  m.feature_to_zones[Feature::kLka] = {1, 3, 4, 5, 6};
  m.feature_to_zones[Feature::kBw] = {5, 6, 7, 8};
  m.feature_to_regions[Feature::kAcc] = {'A', 'B', 'C', 'D'};
  m.feature_to_regions[Feature::kFcw] = {'A', 'B', 'C', 'D'};
  m.feature_to_regions[Feature::kLka] = {'A', 'B', 'C', 'D', 'H', 'I'};
  m.feature_to_regions[Feature::kBw] = {'B', 'C', 'E', 'H', 'I', 'J'};
  return m;
}

std::vector<MountRegion> default_regions(const VehicleDims& d) {
  const double half_l = 0.5 * d.length;
  const double half_w = 0.5 * d.width;
  const double overhang = 0.5 * (d.length - d.wheelbase);
  const double bumper_z = 0.26 * d.height;
  const double fender_z = 0.45 * d.height;
  const double band = 0.3;
  const double roof_inset = 0.15;

  const Vec3 left{1, 0, 0};
  const Vec3 right{-1, 0, 0};
  const Vec3 fwd{0, 1, 0};
  const Vec3 back{0, -1, 0};
  const Vec3 up{0, 0, 1};

  std::vector<MountRegion> r;
  // Front bumper, full width, spanned right-to-left.
  r.push_back({'A', true, {-half_w, half_l, bumper_z}, left, up, fwd, d.width, band});
  // Front fenders: from just behind the front axle to the bumper corner.
  const double front_fender_y = 0.5 * d.wheelbase - 0.2;
  const double fender_len = overhang + 0.1;
  r.push_back({'B', true, {half_w, front_fender_y, fender_z}, fwd, up, left, fender_len, band});
  r.push_back({'C', true, {-half_w, front_fender_y, fender_z}, fwd, up, right, fender_len, band});
  // Roof edges: windshield top (front) and rear window top (rear).
  const double roof_span = d.width - 2.0 * roof_inset;
  r.push_back({'D', true, {-(half_w - roof_inset), 0.05 * d.length, d.height}, left, back, fwd,
               roof_span, 0.2});
  r.push_back({'E', true, {half_w - roof_inset, -0.25 * d.length, d.height}, right, fwd, back,
               roof_span, 0.2});
  // Doors.
  const double door_y = -0.5 * d.wheelbase + 0.3;
  const double door_len = d.wheelbase - 0.6;
  r.push_back({'F', false, {half_w, door_y, fender_z}, fwd, up, left, door_len, 0.4});
  r.push_back({'G', false, {-half_w, door_y, fender_z}, fwd, up, right, door_len, 0.4});
  // Rear fenders: from the bumper corner to just ahead of the rear axle.
  const double rear_fender_y = -half_l + 0.1;
  r.push_back({'H', true, {half_w, rear_fender_y, fender_z}, fwd, up, left, fender_len, band});
  r.push_back({'I', true, {-half_w, rear_fender_y, fender_z}, fwd, up, right, fender_len, band});
  // Rear bumper, spanned left-to-right.
  r.push_back({'J', true, {half_w, -half_l, bumper_z}, right, up, back, d.width, band});
  return r;
}

namespace {

std::vector<Vec2> rect(double x0, double x1, double y0, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

}  // namespace

std::vector<FovZone> default_zones(const VehicleDims& d, const ZoneLayoutParams& p,
                                   const FeatureZoneRegionMap& feature_map) {
  const double front = 0.5 * d.length;
  const double rear = -0.5 * d.length;
  const double lane = 0.5 * p.lane_width;
  const double outer = 1.5 * p.lane_width;

  std::vector<FovZone> zones;
  zones.push_back({1, rect(-lane, lane, front, front + p.front_near), {}});
  zones.push_back({2, rect(-lane, lane, front + p.front_near, front + p.front_far), {}});
  zones.push_back({3, rect(lane, outer, front, front + p.front_near), {}});
  zones.push_back({4, rect(-outer, -lane, front, front + p.front_near), {}});
  zones.push_back({5, rect(lane, outer, rear, front), {}});
  zones.push_back({6, rect(-outer, -lane, rear, front), {}});
  zones.push_back({7, rect(lane, outer, rear - p.blindspot, rear), {}});
  zones.push_back({8, rect(-outer, -lane, rear - p.blindspot, rear), {}});
  zones.push_back({9, rect(-lane, lane, rear - p.rear_near, rear), {}});
  zones.push_back({10, rect(-lane, lane, rear - p.rear_far, rear - p.rear_near), {}});

  for (auto& z : zones) {
    for (const auto& [feature, ids] : feature_map.feature_to_zones) {
      if (ids.contains(z.id)) z.features.insert(feature);
    }
  }
  return zones;
}

VehicleLayout::VehicleLayout(VehicleModel model, std::vector<MountRegion> regions,
                             std::vector<FovZone> zones, FeatureZoneRegionMap feature_map)
    : model_(std::move(model)),
      regions_(std::move(regions)),
      zones_(std::move(zones)),
      feature_map_(std::move(feature_map)) {
  std::vector<std::string> problems;
  const VehicleDims& d = model_.dims;
  if (!(d.length > 0 && d.width > 0 && d.height > 0 && d.wheelbase > 0)) {
    throw Error(ErrorCode::kInvalidDimensions,
                "vehicle '" + model_.name + "': all dimensions must be positive");
  }
  if (!(d.wheelbase < d.length) || !(d.width < d.length)) {
    throw Error(ErrorCode::kInvalidDimensions,
                "vehicle '" + model_.name + "': wheelbase and width must be below length");
  }

  std::set<char> region_ids;
  for (const auto& r : regions_) {
    if (!region_ids.insert(r.id).second) problems.push_back(std::string("duplicate region ") + r.id);
    if (!is_unit(r.u_axis) || !is_unit(r.v_axis) || !is_unit(r.outward_normal)) {
      problems.push_back(std::string("region ") + r.id + " axes must be unit vectors");
    }
    if (std::abs(dot(r.u_axis, r.v_axis)) > 1e-9) {
      problems.push_back(std::string("region ") + r.id + " u_axis and v_axis must be orthogonal");
    }
    if (!(r.grid_step > 0) || r.u_extent < 0 || r.v_extent < 0) {
      problems.push_back(std::string("region ") + r.id + " needs grid_step > 0 and extents >= 0");
    }
    if ((r.id == 'F' || r.id == 'G') && r.placeable) {
      problems.push_back(std::string("region ") + r.id + " must not be placeable");
    }
  }

  std::set<int> zone_ids;
  for (const auto& z : zones_) {
    if (!zone_ids.insert(z.id).second) problems.push_back("duplicate zone " + std::to_string(z.id));
    if (!polygon_is_simple(z.polygon)) {
      problems.push_back("zone " + std::to_string(z.id) + " polygon is not simple");
    }
  }
  if (zones_.size() != 10) problems.push_back("exactly 10 zones are required");

  for (Feature f : kAllFeatures) {
    auto zit = feature_map_.feature_to_zones.find(f);
    if (zit == feature_map_.feature_to_zones.end() || zit->second.empty()) {
      problems.push_back("feature " + std::string(to_string(f)) + " maps to no zone");
      continue;
    }
    for (int id : zit->second) {
      if (!zone_ids.contains(id)) {
        problems.push_back("feature " + std::string(to_string(f)) + " references missing zone " +
                           std::to_string(id));
      }
    }
  }
  for (const auto& [f, ids] : feature_map_.feature_to_regions) {
    for (char id : ids) {
      auto it = std::find_if(regions_.begin(), regions_.end(),
                             [id](const MountRegion& r) { return r.id == id; });
      if (it == regions_.end()) {
        problems.push_back("feature " + std::string(to_string(f)) + " references missing region " +
                           id);
      } else if (!it->placeable) {
        problems.push_back("feature " + std::string(to_string(f)) +
                           " maps to non-placeable region " + id);
      }
    }
  }

  if (!problems.empty()) {
    std::string msg = "invalid vehicle layout '" + model_.name + "':";
    for (const auto& p : problems) msg += " " + p + ";";
    throw Error(ErrorCode::kValidation, msg);
  }
}

const MountRegion& VehicleLayout::region(char id) const {
  for (const auto& r : regions_) {
    if (r.id == id) return r;
  }
  throw Error(ErrorCode::kOutOfBounds, std::string("no mount region ") + id);
}

const FovZone& VehicleLayout::zone(int id) const {
  for (const auto& z : zones_) {
    if (z.id == id) return z;
  }
  throw Error(ErrorCode::kOutOfBounds, "no zone " + std::to_string(id));
}

std::vector<char> VehicleLayout::placeable_region_ids() const {
  std::vector<char> ids;
  for (const auto& r : regions_) {
    if (r.placeable) ids.push_back(r.id);
  }
  return ids;
}

VehicleLayout VehicleLayout::with_regions(std::vector<MountRegion> regions) const {
  return VehicleLayout(model_, std::move(regions), zones_, feature_map_);
}

VehicleLayout VehicleLayout::with_zones(std::vector<FovZone> zones,
                                        FeatureZoneRegionMap feature_map) const {
  return VehicleLayout(model_, regions_, std::move(zones), std::move(feature_map));
}

VehicleLayout build_vehicle(std::string name, VehicleDims dims, const ZoneLayoutParams& zone_params) {
  if (!(dims.length > 0 && dims.width > 0 && dims.height > 0 && dims.wheelbase > 0)) {
    throw Error(ErrorCode::kInvalidDimensions,
                "vehicle '" + name + "': all dimensions must be positive");
  }
  if (!(zone_params.lane_width > 0)) {
    throw Error(ErrorCode::kInvalidDimensions, "lane width must be positive");
  }
  auto feature_map = FeatureZoneRegionMap::defaults();
  auto zones = default_zones(dims, zone_params, feature_map);
  return VehicleLayout(VehicleModel{std::move(name), dims}, default_regions(dims), std::move(zones),
                       std::move(feature_map));
}

std::vector<int> zone_membership(std::span<const FovZone> zones, Vec2 point) {
  std::vector<int> ids;
  for (const auto& z : zones) {
    if (point_in_polygon(z.polygon, point)) ids.push_back(z.id);
  }
  return ids;
}

std::vector<Vec2> zone_samples(const FovZone& zone, double spacing) {
  const Box2 box = bounding_box(zone.polygon);
  std::vector<Vec2> samples;
  for (int ix = 0;; ++ix) {
    const double x = box.min.x + (ix + 0.5) * spacing;
    if (x >= box.max.x) break;
    for (int iy = 0;; ++iy) {
      const double y = box.min.y + (iy + 0.5) * spacing;
      if (y >= box.max.y) break;
      if (point_in_polygon(zone.polygon, {x, y})) samples.push_back({x, y});
    }
  }
  if (samples.empty()) {
    samples.push_back({0.5 * (box.min.x + box.max.x), 0.5 * (box.min.y + box.max.y)});
  }
  return samples;
}

bool covered_by_any(std::span<const PlacedSensor> sensors, Vec2 ground_point) {
  const Vec3 target{ground_point.x, ground_point.y, kTargetHeight};
  return std::any_of(sensors.begin(), sensors.end(),
                     [&](const PlacedSensor& s) { return s.in_frustum(target); });
}

std::map<int, double> zone_coverage(std::span<const PlacedSensor> sensors,
                                    std::span<const FovZone> zones, double spacing) {
  std::map<int, double> coverage;
  for (const auto& z : zones) {
    const auto samples = zone_samples(z, spacing);
    std::size_t covered = 0;
    for (const Vec2& p : samples) {
      if (covered_by_any(sensors, p)) ++covered;
    }
    coverage[z.id] = static_cast<double>(covered) / static_cast<double>(samples.size());
  }
  return coverage;
}

}  // namespace percarch
