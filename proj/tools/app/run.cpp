#include "app/run.hpp"

#include <chrono>
#include <ctime>
#include <functional>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "json.hpp"

#include "percarch/error.hpp"
#include "percarch/format.hpp"
#include "percarch/search.hpp"
#include "percarch/serialization.hpp"
#include "percarch/tables.hpp"

namespace percarch::app {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

OutputDir::OutputDir(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

void OutputDir::write(const std::string& relative, const std::string& content) {
  const fs::path path = root_ / relative;
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kConfiguration, "cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::kConfiguration, "short write to '" + path.string() + "'");
  files_[relative] = {sha256_hex(content), content.size()};
}

void OutputDir::write_manifest(const std::string& command, const std::string& config_json,
                               const std::string& started, const std::string& error) {
  ordered_json j;
  j["artifact"] = "percarch";
  j["version"] = PERCARCH_VERSION;
  j["command"] = command;
  j["status"] = error.empty() ? "ok" : "error";
  if (!error.empty()) j["error"] = error;
  j["started"] = started;
  j["finished"] = utc_timestamp();
  j["config"] = config_json.empty() ? ordered_json() : ordered_json::parse(config_json);
  ordered_json files = ordered_json::array();
  for (const auto& [path, info] : files_) {
    files.push_back({{"path", path}, {"sha256", info.first}, {"bytes", info.second}});
  }
  j["files"] = std::move(files);
  const std::string text = j.dump(2) + "\n";
  std::ofstream out(root_ / "manifest.json", std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

VehicleLayout make_layout(const RunConfig& config) {
  const VehicleModel m = config.vehicle();
  ZoneLayoutParams zones;
  zones.lane_width = config.cycles.lane_width;
  return build_vehicle(m.name, m.dims, zones);
}

std::vector<DriveCycle> make_cycles(const RunConfig& config) {
  CycleParams p = config.cycles;
  const VehicleModel m = config.vehicle();
  p.ego_length = m.dims.length;
  p.ego_width = m.dims.width;
  Rng rng(config.cycle_seed);
  return generate_standard_cycles(p, rng);
}

Workbench make_workbench(const RunConfig& config) {
  Workbench wb{make_layout(config), {}, nullptr};
  wb.bounds = SearchBounds::from_layout(wb.layout);
  if (!config.detectors.empty()) wb.bounds.detectors = config.detectors;
  if (!config.fusions.empty()) wb.bounds.fusions = config.fusions;
  wb.evaluator = std::make_unique<Evaluator>(wb.layout, make_cycles(config), config.evaluation);
  return wb;
}

DesignGenome read_genome(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfiguration, "cannot open genome '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return genome_from_json(ss.str());
}

namespace {

// Runs `body`, then writes the manifest whether or not it threw.
int guarded_command(const std::string& command, const RunConfig* config, OutputDir& out, std::ostream& log,
                    const std::function<void()>& body) {
  const std::string started = utc_timestamp();
  const std::string config_json = config ? config_to_json(*config) : std::string();
  try {
    body();
    out.write_manifest(command, config_json, started);
    return 0;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    try {
      out.write_manifest(command, config_json, started, e.what());
    } catch (...) {
    }
    return 1;
  }
}

std::string run_tag(SearchMode mode, std::uint64_t seed) {
  std::string m(to_string(mode));
  for (char& c : m) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return m + "_seed" + std::to_string(seed);
}

void write_report(OutputDir& out, const std::string& prefix, const EvaluationReport& report,
                  const CostWeights& weights) {
  out.write(prefix + "report.json", report_to_json(report, weights));
  out.write(prefix + "cycle_metrics.csv", cycle_metrics_csv(report));
}

void write_coverage(OutputDir& out, const DesignGenome& genome, const VehicleLayout& layout,
                    const EvaluationConfig& eval, double spacing = 0.5) {
  const auto sensors = place_sensors(genome, layout, eval.camera, eval.radar);
  out.write("coverage_grid.csv", coverage_grid_csv(coverage_grid(sensors, layout, spacing)));
  out.write("zone_coverage.csv", zone_fraction_csv(zone_coverage(sensors, layout.zones(), spacing)));
}

Evaluator held_out_evaluator(const RunConfig& config, const VehicleLayout& layout) {
  CycleParams p = config.cycles;
  const VehicleModel m = config.vehicle();
  p.ego_length = m.dims.length;
  p.ego_width = m.dims.width;
  Rng rng(derive_key({config.cycle_seed, 0x7e57}));
  return Evaluator(layout, test_cycles(p, rng), config.evaluation);
}

}  // namespace

int cmd_search(const RunConfig& config, std::ostream& log) {
  OutputDir out(config.output_dir);
  return guarded_command("search", &config, out, log, [&] {
    Workbench wb = make_workbench(config);
    log << "search: " << to_string(config.optimizer.algorithm) << "-" << to_string(config.mode) << " on "
        << wb.layout.model().name << ", seed " << config.seed << ", " << wb.evaluator->cycles().size()
        << " cycles, " << config.resolved_threads() << " threads\n";
    const SearchResult r =
        run_search(config.mode, config.optimizer, wb.bounds, *wb.evaluator, config.seed, config.resolved_threads());
    out.write("trace.csv", trace_csv(r.trace));
    out.write("best_genome.json", genome_to_json(r.best_genome));
    write_report(out, "", wb.evaluator->evaluate(r.best_genome), wb.evaluator->weights());
    const Evaluator test = held_out_evaluator(config, wb.layout);
    write_report(out, "test_", test.evaluate(r.best_genome), test.weights());
    write_coverage(out, r.best_genome, wb.layout, config.evaluation);
    log << "best cost " << format_fixed(r.best_cost, 6) << " after " << r.trace.rows.back().iteration
        << " iterations (" << wb.evaluator->simulations() << " simulations, "
        << format_fixed(r.trace.wall_time_s, 1) << " s)\n";
  });
}

int cmd_ablate(const RunConfig& config, std::ostream& log) {
  OutputDir out(config.output_dir);
  return guarded_command("ablate", &config, out, log, [&] {
    Workbench wb = make_workbench(config);
    AblationResult result;
    for (std::uint64_t seed : config.ablation_seeds) {
      for (SearchMode mode : config.ablation_modes) {
        SearchResult r =
            run_search(mode, config.optimizer, wb.bounds, *wb.evaluator, seed, config.resolved_threads());
        const int steps = r.trace.rows.back().iteration;
        log << "  " << to_string(mode) << " seed " << seed << ": best " << format_fixed(r.best_cost, 6) << " ("
            << steps << " it, " << format_fixed(r.trace.wall_time_s, 1) << " s)\n";
        out.write("traces/" + run_tag(mode, seed) + ".csv", trace_csv(r.trace));
        out.write("best/" + run_tag(mode, seed) + ".json", genome_to_json(r.best_genome));
        result.rows.push_back({mode, seed, r.best_cost, steps, r.trace.wall_time_s});
        result.runs.push_back(std::move(r));
      }
    }
    out.write("ablation.csv", ablation_csv(result.rows));
    std::ostringstream summary;
    summary << "mode,median_best_cost\n";
    for (SearchMode mode : config.ablation_modes) {
      const double med = median_best_cost(result, mode);
      summary << to_string(mode) << ',' << format_double(med) << '\n';
      log << to_string(mode) << " median best cost " << format_fixed(med, 6) << "\n";
    }
    out.write("ablation_summary.csv", summary.str());
  });
}

int cmd_evaluate(const RunConfig& config, const std::string& genome_path, std::ostream& log) {
  OutputDir out(config.output_dir);
  return guarded_command("evaluate", &config, out, log, [&] {
    const DesignGenome genome = read_genome(genome_path);
    Workbench wb = make_workbench(config);
    validate_genome(genome, wb.bounds);
    const EvaluationReport report = wb.evaluator->evaluate(genome);
    write_report(out, "", report, wb.evaluator->weights());
    log << "cost " << format_fixed(report.cost, 6) << "\n";
    for (int m = 0; m < kMetricCount; ++m) {
      log << "  " << metric_name(m) << " " << format_fixed(report.aggregate[m], 6) << "\n";
    }
  });
}

int cmd_export_coverage(const std::string& genome_path, const std::string& vehicle_key, const fs::path& out_dir,
                        double spacing, std::ostream& log) {
  OutputDir out(out_dir);
  return guarded_command("export-coverage", nullptr, out, log, [&] {
    const VehicleModel& m = vehicle_by_key(vehicle_key);
    const VehicleLayout layout = build_vehicle(m.name, m.dims);
    const DesignGenome genome = read_genome(genome_path);
    validate_genome(genome, SearchBounds::from_layout(layout));
    write_coverage(out, genome, layout, EvaluationConfig{}, spacing);
    out.write("zone_polygons.csv", zone_polygons_csv(layout));
    log << "coverage written to " << out.root().string() << "\n";
  });
}

int cmd_gen_cycles(const RunConfig& config, std::ostream& log) {
  OutputDir out(config.output_dir);
  return guarded_command("gen-cycles", &config, out, log, [&] {
    const std::vector<DriveCycle> cycles = make_cycles(config);
    const VehicleLayout layout = make_layout(config);
    const Evaluator held = held_out_evaluator(config, layout);
    out.write("cycles.json", cycles_to_json(cycles));
    out.write("test_cycles.json", cycles_to_json(held.cycles()));
    for (const DriveCycle& c : cycles) {
      out.write("ground_truth/cycle_" + std::to_string(c.id()) + ".csv", ground_truth_csv(c));
    }
    out.write("zone_polygons.csv", zone_polygons_csv(layout));
    log << cycles.size() << " optimisation and " << held.cycles().size() << " held-out cycles written\n";
  });
}

TableCheck verify_tables() {
  struct DetectorRef {
    const char* name;
    double gpu;
    double cpu;
    double map;
  };
  static constexpr DetectorRef kDetectors[] = {
      {"R-CNN", 48956.18, 66090.83, 73.86},   {"Fast R-CNN", 1834.71, 2365.86, 76.81},
      {"Faster R-CNN", 176.99, 286.72, 79.63}, {"SSD", 53.25, 70.32, 70.58},
      {"YOLOv3", 24.03, 32.92, 71.86},
  };
  struct VehicleRef {
    const char* key;
    double length;
    double width;
    double height;
    double wheelbase;
  };
  static constexpr VehicleRef kVehicles[] = {
      {"bmw_minicooper", 3.835, 1.727, 1.414, 2.495},
      {"audi_tt", 4.177, 1.832, 1.353, 2.505},
  };
  static constexpr const char* kDetectorDigest = "625e17f38da5f20e9d14ea90ae6bb3eba05415445c12d87a59bb8456f50abae7";
  static constexpr const char* kVehicleDigest = "0d66dc56695a112b4d84a9b16baad63116bcc0852c707beaec5479ba14952613";

  TableCheck check;
  auto expect = [&](bool ok, const std::string& line) {
    check.ok = check.ok && ok;
    check.lines.push_back((ok ? "ok    " : "FAIL  ") + line);
  };
  expect(sha256_hex(embedded_detector_csv()) == kDetectorDigest, "detector table digest");
  expect(sha256_hex(embedded_vehicle_csv()) == kVehicleDigest, "vehicle table digest");

  const auto& detectors = load_detector_table();
  for (int i = 0; i < kDetectorCount; ++i) {
    const DetectorProfile& d = detectors[i];
    const DetectorRef& r = kDetectors[i];
    expect(d.name == r.name && d.latency_gpu_ms == r.gpu && d.latency_cpu_ms == r.cpu && d.map_pct == r.map,
           d.name + ": gpu " + format_double(d.latency_gpu_ms) + " ms, cpu " + format_double(d.latency_cpu_ms) +
               " ms, mAP " + format_double(d.map_pct) + "%");
  }
  for (const VehicleRef& r : kVehicles) {
    const VehicleModel& m = vehicle_by_key(r.key);
    const VehicleDims& d = m.dims;
    expect(d.length == r.length && d.width == r.width && d.height == r.height && d.wheelbase == r.wheelbase,
           m.name + ": length " + format_double(d.length) + ", width " + format_double(d.width) + ", height " +
               format_double(d.height) + ", wheelbase " + format_double(d.wheelbase));
  }
  return check;
}

}  // namespace percarch::app
