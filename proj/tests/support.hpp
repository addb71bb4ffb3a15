#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "percarch/evaluation.hpp"
#include "percarch/random.hpp"
#include "percarch/scenario.hpp"
#include "percarch/tables.hpp"
#include "percarch/vehicle_model.hpp"

namespace percarch::testing {

inline VehicleLayout audi_layout() {
  const VehicleModel& m = vehicle_by_key("audi_tt");
  return build_vehicle(m.name, m.dims);
}

inline std::vector<DriveCycle> short_cycles(double duration, std::uint64_t seed = 1,
                                            int per_feature = 5) {
  CycleParams params;
  params.duration = duration;
  params.cycles_per_feature = per_feature;
  const VehicleModel& m = vehicle_by_key("audi_tt");
  params.ego_length = m.dims.length;
  params.ego_width = m.dims.width;
  Rng rng(seed);
  return generate_standard_cycles(params, rng);
}

inline std::vector<DriveCycle> only_feature(const std::vector<DriveCycle>& cycles, Feature f) {
  std::vector<DriveCycle> out;
  for (const auto& c : cycles) {
    if (c.feature() == f) out.push_back(c);
  }
  return out;
}

/// Fresh scratch directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("percarch_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace percarch::testing
