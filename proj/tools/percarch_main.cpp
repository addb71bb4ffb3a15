// percarch: perception architecture search from the command line.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "app/config.hpp"
#include "app/run.hpp"
#include "percarch/error.hpp"

using namespace percarch;

namespace {

app::RunConfig load_or_die(const std::string& path) {
  try {
    return app::load_config(path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    std::exit(1);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Perception architecture search: sensor placement, detector and fusion co-optimisation"};
  cli.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string genome_path;

  auto* search = cli.add_subcommand("search", "Run one search and write trace, best genome and reports");
  search->add_option("--config", config_path, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  search->add_option("--out", out_dir, "Output directory (overrides the config)");

  std::string modes;
  std::string seeds;
  auto* ablate = cli.add_subcommand("ablate", "Compare search modes over several seeds");
  ablate->add_option("--config", config_path, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  ablate->add_option("--modes", modes, "Comma list, e.g. pasta,po,op,vespa,pod,pof");
  ablate->add_option("--seeds", seeds, "Seed range or list, e.g. 1..5");
  ablate->add_option("--out", out_dir, "Output directory (overrides the config)");

  auto* evaluate = cli.add_subcommand("evaluate", "Score a saved genome without searching");
  evaluate->add_option("--genome", genome_path, "Genome file (JSON)")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--config", config_path, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--out", out_dir, "Output directory (overrides the config)");

  std::string vehicle = "audi_tt";
  double spacing = 0.5;
  std::string coverage_out = "coverage";
  auto* coverage = cli.add_subcommand("export-coverage", "Ground-plane coverage grid for a genome");
  coverage->add_option("--genome", genome_path, "Genome file (JSON)")->required()->check(CLI::ExistingFile);
  coverage->add_option("--vehicle", vehicle, "Vehicle key")->capture_default_str();
  coverage->add_option("--out", coverage_out, "Output directory")->capture_default_str();
  coverage->add_option("--spacing", spacing, "Grid spacing in metres")->capture_default_str()->check(
      CLI::PositiveNumber);

  auto* gen = cli.add_subcommand("gen-cycles", "Write the optimisation and held-out drive cycles");
  gen->add_option("--config", config_path, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", out_dir, "Output directory (overrides the config)");

  auto* verify = cli.add_subcommand("verify-tables", "Check the compiled-in detector and vehicle tables");

  CLI11_PARSE(cli, argc, argv);

  try {
    if (*verify) {
      const app::TableCheck check = app::verify_tables();
      for (const auto& line : check.lines) std::cout << line << "\n";
      std::cout << (check.ok ? "tables verified" : "table mismatch") << "\n";
      return check.ok ? 0 : 1;
    }
    if (*coverage) return app::cmd_export_coverage(genome_path, vehicle, coverage_out, spacing, std::cout);

    app::RunConfig config = load_or_die(config_path);
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (*search) return app::cmd_search(config, std::cout);
    if (*evaluate) return app::cmd_evaluate(config, genome_path, std::cout);
    if (*gen) return app::cmd_gen_cycles(config, std::cout);
    if (*ablate) {
      if (!modes.empty()) config.ablation_modes = app::parse_mode_list(modes);
      if (!seeds.empty()) config.ablation_seeds = app::parse_seed_list(seeds);
      return app::cmd_ablate(config, std::cout);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
