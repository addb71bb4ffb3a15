#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "app/config.hpp"
#include "percarch/design_space.hpp"
#include "percarch/evaluation.hpp"

namespace percarch::app {

/// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// Collects every file a command writes so the manifest can list them with
/// digests. Writes are byte-exact (binary mode).
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  void write(const std::string& relative, const std::string& content);

  /// Writes manifest.json: config snapshot, version, timestamps, status and
  /// the file inventory.
  void write_manifest(const std::string& command, const std::string& config_json,
                      const std::string& started, const std::string& error = {});

 private:
  std::filesystem::path root_;
  std::map<std::string, std::pair<std::string, std::size_t>> files_;  // path -> (sha, bytes)
};

std::string utc_timestamp();

struct Workbench {
  VehicleLayout layout;
  SearchBounds bounds;
  std::unique_ptr<Evaluator> evaluator;
};

VehicleLayout make_layout(const RunConfig& config);
std::vector<DriveCycle> make_cycles(const RunConfig& config);
Workbench make_workbench(const RunConfig& config);

DesignGenome read_genome(const std::string& path);

// Subcommands. Each returns the process exit status and writes a manifest
// (also on failure, listing whatever was written before the error).
int cmd_search(const RunConfig& config, std::ostream& log);
int cmd_ablate(const RunConfig& config, std::ostream& log);
int cmd_evaluate(const RunConfig& config, const std::string& genome_path, std::ostream& log);
int cmd_export_coverage(const std::string& genome_path, const std::string& vehicle_key,
                        const std::filesystem::path& out, double spacing, std::ostream& log);
int cmd_gen_cycles(const RunConfig& config, std::ostream& log);

struct TableCheck {
  bool ok = true;
  std::vector<std::string> lines;
};
/// Compares the compiled-in tables with reference values and digests.
TableCheck verify_tables();

}  // namespace percarch::app
