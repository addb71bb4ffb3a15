#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "percarch/design_space.hpp"
#include "percarch/random.hpp"

namespace percarch {

class Evaluator;

enum class Algorithm { kGa, kDe, kFa };

std::string_view to_string(Algorithm algo);
Algorithm algorithm_from_string(std::string_view name);

struct OptimizerConfig {
  Algorithm algorithm = Algorithm::kGa;
  int population = 50;
  double ga_crossover = 0.5;
  double ga_mutation = 0.2;
  double de_cr = 0.8;
  double de_f = 0.5;
  double fa_beta0 = 1.0;
  double fa_gamma = 1.0;
  double fa_alpha = 0.25;
  double fa_alpha_decay = 0.97;
  int term_window = 50;
  double term_threshold = 0.05;
  int max_iterations = 300;

  /// Throws kValidation listing every violated invariant.
  void validate() const;
};

using GenomeVec = std::vector<double>;

/// Scores a batch of normalised vectors; results in input order.
using BatchObjective = std::function<std::vector<double>(std::span<const GenomeVec>)>;

struct Population {
  std::vector<GenomeVec> vectors;
  std::vector<double> costs;
  GenomeVec best_vector;
  double best_cost = 0.0;
  /// Steps taken so far; drives the FA step-size schedule.
  int iteration = 0;

  double mean_cost() const;
  /// Lowest cost, lowest index on ties.
  int best_index() const;
};

/// Evaluates `vectors` and fills costs and best_so_far.
Population make_population(std::vector<GenomeVec> vectors, const BatchObjective& objective);

/// Roulette weights (max - cost + eps), normalised.
std::vector<double> roulette_probabilities(std::span<const double> costs, double eps = 1e-6);

/// Genes the optimiser may change; the rest are pinned to a base vector.
/// An empty mask means every gene is free.
struct GeneMask {
  std::vector<char> free;
  GenomeVec base;

  bool empty() const { return free.empty(); }
  void apply(GenomeVec& v) const;
};

void ga_step(Population& pop, Rng& rng, const OptimizerConfig& cfg, const BatchObjective& objective,
             const GeneMask& mask = {});
/// Throws kConfiguration when the population has fewer than 4 members.
void de_step(Population& pop, Rng& rng, const OptimizerConfig& cfg, const BatchObjective& objective,
             const GeneMask& mask = {});
void fa_step(Population& pop, Rng& rng, const OptimizerConfig& cfg, const BatchObjective& objective,
             const GeneMask& mask = {});

struct TraceRow {
  int iteration = 0;
  double best_cost = 0.0;
  double mean_cost = 0.0;
};

struct SearchTrace {
  std::vector<TraceRow> rows;
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;
  SearchMode mode = SearchMode::kPasta;
  Algorithm algorithm = Algorithm::kGa;
};

/// Relative change of the mean cost across the last `window` rows.
bool terminated(std::span<const TraceRow> rows, int window, double threshold);

struct SearchResult {
  GenomeVec best_vector;
  DesignGenome best_genome;
  double best_cost = 0.0;
  SearchTrace trace;
};

/// Mode-aware search over normalised vectors. PO and OP run two phases of
/// half the budget each with complementary gene masks; the other modes
/// search the whole vector and rely on decode() to apply their bindings.
SearchResult run_search(SearchMode mode, const OptimizerConfig& cfg, const SearchBounds& bounds,
                        const BatchObjective& objective, std::uint64_t seed);

/// Objective that decodes under `mode` and scores with the evaluator.
BatchObjective make_objective(const Evaluator& evaluator, const SearchBounds& bounds, SearchMode mode,
                              int threads = 0);

SearchResult run_search(SearchMode mode, const OptimizerConfig& cfg, const SearchBounds& bounds,
                        const Evaluator& evaluator, std::uint64_t seed, int threads = 0);

struct AblationRow {
  SearchMode mode = SearchMode::kPasta;
  std::uint64_t seed = 0;
  double best_cost = 0.0;
  int iterations = 0;
  double wall_time_s = 0.0;
};

struct AblationResult {
  std::vector<AblationRow> rows;
  std::vector<SearchResult> runs;  // same order as rows
};

/// Every mode runs with the same seeds and budget.
AblationResult run_ablation(const OptimizerConfig& cfg, const SearchBounds& bounds,
                            const Evaluator& evaluator, std::span<const SearchMode> modes,
                            std::span<const std::uint64_t> seeds, int threads = 0);

/// Median best cost of one mode across its ablation rows.
double median_best_cost(const AblationResult& result, SearchMode mode);

/// Genes that describe where sensors sit (active flag, region, grid) versus
/// how they point (roll, pitch, yaw).
std::vector<char> position_gene_mask();
std::vector<char> orientation_gene_mask();

}  // namespace percarch
