#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "percarch/evaluation.hpp"
#include "percarch/scenario.hpp"
#include "percarch/search.hpp"
#include "percarch/vehicle_model.hpp"

namespace percarch::app {

struct RunConfig {
  /// Table key ("audi_tt") or inline dimensions.
  std::string vehicle_key = "audi_tt";
  std::optional<VehicleModel> vehicle_inline;

  std::uint64_t seed = 1;
  /// Drive cycles are drawn from their own seed so that search seeds can vary
  /// over a fixed cycle suite.
  std::uint64_t cycle_seed = 1;
  CycleParams cycles;

  SearchMode mode = SearchMode::kPasta;
  /// Candidate detectors and fusion filters; empty keeps every choice.
  std::vector<int> detectors;
  std::vector<FusionAlgorithm> fusions;
  OptimizerConfig optimizer;
  EvaluationConfig evaluation;

  std::vector<SearchMode> ablation_modes{std::begin(kAllModes), std::end(kAllModes)};
  std::vector<std::uint64_t> ablation_seeds{1, 2, 3, 4, 5};

  std::string output_dir = "results";
  /// 0 means all hardware threads.
  int threads = 0;

  int resolved_threads() const;
  VehicleModel vehicle() const;
};

/// Parses JSON text. Unknown keys are rejected with a closest-match
/// suggestion; every validation problem is reported at once.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

/// Canonical JSON form of a config (all defaults filled in).
std::string config_to_json(const RunConfig& config);

/// Classic edit distance, used for "did you mean" hints.
std::size_t edit_distance(std::string_view a, std::string_view b);

/// "1..5" or "1,2,7" style seed lists.
std::vector<std::uint64_t> parse_seed_list(std::string_view text);
std::vector<SearchMode> parse_mode_list(std::string_view text);

}  // namespace percarch::app
