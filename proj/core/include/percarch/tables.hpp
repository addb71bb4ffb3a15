#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "percarch/vehicle_model.hpp"

namespace percarch {

/// Latency/accuracy profile of one object detector.
struct DetectorProfile {
  std::string name;
  double latency_gpu_ms = 0.0;
  double latency_cpu_ms = 0.0;
  double map_pct = 0.0;
};

/// Row order of the detector table; genomes store these indices.
enum DetectorIndex : int {
  kRcnn = 0,
  kFastRcnn = 1,
  kFasterRcnn = 2,
  kSsd = 3,
  kYolov3 = 4,
};
inline constexpr int kDetectorCount = 5;

/// Sensor-fusion candidates, in genome index order.
enum class FusionAlgorithm : int { kKf = 0, kEkf = 1, kUkf = 2 };
inline constexpr int kFusionCount = 3;

std::string_view to_string(FusionAlgorithm algo);
/// Accepts "KF"/"kf", "EKF", "UKF". Throws kParse otherwise.
FusionAlgorithm fusion_from_string(std::string_view name);

/// Canonical CSV text compiled into the library. data/detectors.csv and
/// data/vehicles.csv are byte-identical copies.
std::string_view embedded_detector_csv();
std::string_view embedded_vehicle_csv();

/// The five detector rows, parsed from the embedded CSV.
const std::array<DetectorProfile, kDetectorCount>& load_detector_table();
const DetectorProfile& detector(int index);
/// Throws kParse for unknown names. Accepts the table name ("Faster R-CNN")
/// or a lowercase slug ("faster_rcnn", "yolov3").
int detector_index(std::string_view name);
std::string detector_slug(int index);

struct VehicleEntry {
  std::string key;
  VehicleModel model;
};

const std::vector<VehicleEntry>& load_vehicle_table();
/// Throws kConfiguration for unknown keys.
const VehicleModel& vehicle_by_key(std::string_view key);

/// 64-bit FNV-1a; used for table digests and content-keyed random streams.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

struct TableCheck {
  std::string name;
  std::string expected;
  std::string actual;
  bool ok = false;
};

struct TableVerification {
  std::vector<TableCheck> checks;
  bool ok() const;
};

/// Cross-checks the parsed tables against literal reference values and the
/// embedded text against its pinned digest. When `data_dir` is non-empty the
/// on-disk CSV copies are compared byte-for-byte too.
TableVerification verify_tables(const std::string& data_dir = {});

}  // namespace percarch
