#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "percarch/random.hpp"
#include "percarch/sensor_geometry.hpp"
#include "percarch/tables.hpp"
#include "percarch/vehicle_model.hpp"

namespace percarch {

inline constexpr int kSensorSlots = 8;
inline constexpr int kCameraSlots = 4;
inline constexpr int kGenesPerSlot = 7;
inline constexpr int kGenomeDim = kSensorSlots * kGenesPerSlot + 2;

/// Gene offsets inside one slot's block of the normalised vector.
enum SlotGene : int {
  kGeneActive = 0,
  kGeneRegion = 1,
  kGeneGridI = 2,
  kGeneGridJ = 3,
  kGeneRoll = 4,
  kGenePitch = 5,
  kGeneYaw = 6,
};
inline constexpr int kGeneDetector = kSensorSlots * kGenesPerSlot;
inline constexpr int kGeneFusion = kGeneDetector + 1;

constexpr SensorKind slot_kind(int slot) {
  return slot < kCameraSlots ? SensorKind::kCamera : SensorKind::kRadar;
}

/// Which subspace a search explores. PASTA searches everything; the other
/// modes pin the detector and/or fusion choice, and PO/OP additionally split
/// pose search into sequential phases (handled by the search module).
enum class SearchMode { kPasta, kPo, kOp, kVespa, kPod, kPof };

inline constexpr SearchMode kAllModes[] = {SearchMode::kPasta, SearchMode::kPo,
                                           SearchMode::kOp,    SearchMode::kVespa,
                                           SearchMode::kPod,   SearchMode::kPof};

std::string_view to_string(SearchMode mode);
SearchMode search_mode_from_string(std::string_view name);

struct ModeBinding {
  std::optional<int> detector;
  std::optional<FusionAlgorithm> fusion;
};
ModeBinding mode_binding(SearchMode mode);

struct SensorGene {
  bool active = false;
  SensorKind kind = SensorKind::kCamera;
  char region_id = 'A';
  int grid_i = 0;
  int grid_j = 0;
  /// Orientation relative to the region normal, whole degrees.
  int roll_deg = 0;
  int pitch_deg = 0;
  int yaw_deg = 0;

  bool operator==(const SensorGene&) const = default;
};

struct DesignGenome {
  std::array<SensorGene, kSensorSlots> sensors{};
  int detector_index = kYolov3;
  FusionAlgorithm fusion = FusionAlgorithm::kEkf;

  DesignGenome();
  bool operator==(const DesignGenome&) const = default;
  int active_count() const;
};

struct AngleLimits {
  int lower = 0;
  int upper = 0;
  int step = 1;

  int count() const { return (upper - lower) / step + 1; }
  bool contains(int deg) const {
    return deg >= lower && deg <= upper && (deg - lower) % step == 0;
  }
};

struct RegionGrid {
  char id = 'A';
  int max_i = 0;
  int max_j = 0;

  long long point_count() const { return static_cast<long long>(max_i + 1) * (max_j + 1); }
};

enum class SlotPolicy { kFree, kForcedOn, kForcedOff };

struct SearchBounds {
  std::vector<RegionGrid> regions;
  AngleLimits roll{-5, 5, 1};
  AngleLimits pitch{-15, 15, 1};
  AngleLimits yaw{-60, 60, 1};
  std::vector<int> detectors{kRcnn, kFastRcnn, kFasterRcnn, kSsd, kYolov3};
  std::vector<FusionAlgorithm> fusions{FusionAlgorithm::kKf, FusionAlgorithm::kEkf,
                                       FusionAlgorithm::kUkf};
  std::array<SlotPolicy, kSensorSlots> slots{};

  /// All placeable regions of the layout, default angle limits.
  static SearchBounds from_layout(const VehicleLayout& layout);

  /// Throws kValidation listing every violated invariant.
  void validate() const;
  const RegionGrid& region(char id) const;
  int region_index(char id) const;
};

/// Throws kEncodingDomain if the genome does not lie in the bounds.
void validate_genome(const DesignGenome& genome, const SearchBounds& bounds);

std::vector<double> encode(const DesignGenome& genome, const SearchBounds& bounds);

/// Clips to [0,1], snaps every coordinate to its nearest discrete value
/// (ties round up) and applies the mode's fixed choices and slot policies.
DesignGenome decode(std::span<const double> vec, const SearchBounds& bounds,
                    SearchMode mode = SearchMode::kPasta);

/// Uniform over active flags, regions, grid points, angle steps and allowed
/// discrete choices. Draw count is mode-independent, so two modes seeded
/// alike sample identical sensor layouts.
DesignGenome random_genome(Rng& rng, const SearchBounds& bounds,
                           SearchMode mode = SearchMode::kPasta);

using BigInt = boost::multiprecision::cpp_int;

struct CardinalityReport {
  /// Positions x orientations available to one sensor.
  BigInt per_sensor;
  /// Slots are distinguishable: per_sensor^k x detectors x fusions.
  BigInt ordered_slots;
  /// Unordered choice of k distinct configurations: C(per_sensor, k) x detectors x fusions.
  BigInt combinations;
};

CardinalityReport cardinality(const SearchBounds& bounds, int active_sensors);

/// Euclidean distance in the normalised space. Throws kShape on mismatch.
double genome_distance(std::span<const double> a, std::span<const double> b);

/// Content hash of the active sensor layout (detector and fusion excluded,
/// inactive slots ignored).
std::uint64_t sensor_layout_hash(const DesignGenome& genome);

std::vector<PlacedSensor> place_sensors(const DesignGenome& genome, const VehicleLayout& layout,
                                        const SensorSpec& camera, const SensorSpec& radar);

/// Conventional rig: cameras at the roof-edge (D, E) centres, radars at the
/// bumper (A, J) centres, all active and facing along the region normals,
/// YOLOv3 + EKF. Falls back to the first allowed region when one is absent.
DesignGenome industry_default_genome(const SearchBounds& bounds);

}  // namespace percarch
