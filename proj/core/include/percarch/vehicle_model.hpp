#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "percarch/geometry.hpp"
#include "percarch/sensor_geometry.hpp"

namespace percarch {

enum class Feature { kAcc, kFcw, kLka, kBw };

inline constexpr Feature kAllFeatures[] = {Feature::kAcc, Feature::kFcw, Feature::kLka,
                                           Feature::kBw};

std::string_view to_string(Feature feature);
/// Accepts "ACC", "acc", ... Throws kParse on unknown names.
Feature feature_from_string(std::string_view name);

struct VehicleDims {
  double length = 0.0;
  double width = 0.0;
  double height = 0.0;
  double wheelbase = 0.0;
};

struct VehicleModel {
  std::string name;
  VehicleDims dims;
};

/// A flat surface patch on the body where sensors may be mounted on a
/// regular grid. Vehicle frame: +x left, +y forward, +z up.
struct MountRegion {
  char id = 'A';
  bool placeable = true;
  Vec3 origin;
  Vec3 u_axis;
  Vec3 v_axis;
  Vec3 outward_normal;
  double u_extent = 0.0;
  double v_extent = 0.0;
  double grid_step = 0.02;

  /// Largest valid grid index along u (inclusive).
  int max_i() const;
  int max_j() const;
  long long point_count() const {
    return static_cast<long long>(max_i() + 1) * (max_j() + 1);
  }
  Vec3 center() const;
};

/// Throws kOutOfBounds / kPlacementForbidden.
Vec3 surface_point(const MountRegion& region, int i, int j);

struct FovZone {
  int id = 0;
  std::vector<Vec2> polygon;
  std::set<Feature> features;
};

struct FeatureZoneRegionMap {
  std::map<Feature, std::set<int>> feature_to_zones;
  std::map<Feature, std::set<char>> feature_to_regions;

  static FeatureZoneRegionMap defaults();
};

/// Parameters of the default parametric zone layout (metres).
struct ZoneLayoutParams {
  double lane_width = 3.5;
  double front_near = 30.0;
  double front_far = 100.0;
  double rear_near = 30.0;
  double rear_far = 70.0;
  double blindspot = 10.0;
};

/// The immutable geometry bundle: model, ten mount regions, ten FOV zones and
/// the feature map. The constructor enforces all cross-references.
class VehicleLayout {
 public:
  VehicleLayout(VehicleModel model, std::vector<MountRegion> regions,
                std::vector<FovZone> zones, FeatureZoneRegionMap feature_map);

  const VehicleModel& model() const { return model_; }
  const std::vector<MountRegion>& regions() const { return regions_; }
  const std::vector<FovZone>& zones() const { return zones_; }
  const FeatureZoneRegionMap& feature_map() const { return feature_map_; }

  const MountRegion& region(char id) const;
  const FovZone& zone(int id) const;
  std::vector<char> placeable_region_ids() const;

  VehicleLayout with_regions(std::vector<MountRegion> regions) const;
  VehicleLayout with_zones(std::vector<FovZone> zones, FeatureZoneRegionMap feature_map) const;

 private:
  VehicleModel model_;
  std::vector<MountRegion> regions_;
  std::vector<FovZone> zones_;
  FeatureZoneRegionMap feature_map_;
};

/// Builds the default ten-region / ten-zone layout scaled to `dims`.
/// Throws kInvalidDimensions for non-positive or inconsistent dimensions.
VehicleLayout build_vehicle(std::string name, VehicleDims dims,
                            const ZoneLayoutParams& zone_params = {});

std::vector<MountRegion> default_regions(const VehicleDims& dims);
std::vector<FovZone> default_zones(const VehicleDims& dims, const ZoneLayoutParams& params,
                                   const FeatureZoneRegionMap& feature_map);

std::vector<int> zone_membership(std::span<const FovZone> zones, Vec2 point);

/// Cell-centre samples of a zone polygon on a square grid.
std::vector<Vec2> zone_samples(const FovZone& zone, double spacing = 0.5);

bool covered_by_any(std::span<const PlacedSensor> sensors, Vec2 ground_point);

/// Covered fraction of each zone, sampled on a `spacing` grid.
std::map<int, double> zone_coverage(std::span<const PlacedSensor> sensors,
                                    std::span<const FovZone> zones, double spacing = 0.5);

}  // namespace percarch
