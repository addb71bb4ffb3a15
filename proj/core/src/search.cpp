#include "percarch/search.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "percarch/error.hpp"
#include "percarch/evaluation.hpp"

namespace percarch {

namespace {

constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::uint64_t kStepStream = 0x57e9;

void clip(GenomeVec& v) {
  for (double& x : v) x = std::clamp(x, 0.0, 1.0);
}

// Index drawn proportionally to `probs` (which sum to 1).
int roulette_pick(std::span<const double> probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

void refresh_best(Population& pop) {
  const int b = pop.best_index();
  if (pop.best_vector.empty() || pop.costs[b] < pop.best_cost) {
    pop.best_cost = pop.costs[b];
    pop.best_vector = pop.vectors[b];
  }
}

}  // namespace

std::string_view to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::kGa: return "GA";
    case Algorithm::kDe: return "DE";
    case Algorithm::kFa: return "FA";
  }
  return "?";
}

Algorithm algorithm_from_string(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "ga") return Algorithm::kGa;
  if (s == "de") return Algorithm::kDe;
  if (s == "fa") return Algorithm::kFa;
  throw Error(ErrorCode::kParse, "unknown algorithm '" + std::string(name) + "' (expected ga, de or fa)");
}

void OptimizerConfig::validate() const {
  std::vector<std::string> problems;
  auto rate = [&](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) problems.push_back(std::string(name) + " must lie in [0, 1]");
  };
  if (population < 4) problems.push_back("population must be at least 4");
  rate(ga_crossover, "ga_crossover");
  rate(ga_mutation, "ga_mutation");
  rate(de_cr, "de_cr");
  rate(fa_alpha_decay, "fa_alpha_decay");
  if (!(de_f >= 0.0)) problems.push_back("de_f must be non-negative");
  if (!(fa_beta0 >= 0.0)) problems.push_back("fa_beta0 must be non-negative");
  if (!(fa_gamma >= 0.0)) problems.push_back("fa_gamma must be non-negative");
  if (!(fa_alpha >= 0.0)) problems.push_back("fa_alpha must be non-negative");
  if (term_window < 1) problems.push_back("term_window must be at least 1");
  if (!(term_threshold >= 0.0)) problems.push_back("term_threshold must be non-negative");
  if (max_iterations < 0) problems.push_back("max_iterations must be non-negative");
  if (problems.empty()) return;
  std::string msg = "invalid optimizer config:";
  for (const auto& p : problems) msg += "\n  - " + p;
  throw Error(ErrorCode::kValidation, msg);
}

double Population::mean_cost() const {
  if (costs.empty()) return 0.0;
  return std::accumulate(costs.begin(), costs.end(), 0.0) / static_cast<double>(costs.size());
}

int Population::best_index() const {
  if (costs.empty()) throw Error(ErrorCode::kConfiguration, "empty population");
  return static_cast<int>(std::min_element(costs.begin(), costs.end()) - costs.begin());
}

Population make_population(std::vector<GenomeVec> vectors, const BatchObjective& objective) {
  Population pop;
  pop.vectors = std::move(vectors);
  pop.costs = objective(pop.vectors);
  if (pop.costs.size() != pop.vectors.size()) throw Error(ErrorCode::kShape, "objective returned wrong count");
  refresh_best(pop);
  return pop;
}

std::vector<double> roulette_probabilities(std::span<const double> costs, double eps) {
  std::vector<double> p(costs.size(), 0.0);
  if (costs.empty()) return p;
  const double worst = *std::max_element(costs.begin(), costs.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    p[i] = worst - costs[i] + eps;
    sum += p[i];
  }
  for (double& x : p) x /= sum;
  return p;
}

void GeneMask::apply(GenomeVec& v) const {
  if (empty()) return;
  for (std::size_t g = 0; g < v.size() && g < free.size(); ++g) {
    if (!free[g]) v[g] = base[g];
  }
}

void ga_step(Population& pop, Rng& rng, const OptimizerConfig& cfg, const BatchObjective& objective,
             const GeneMask& mask) {
  const int n = static_cast<int>(pop.vectors.size());
  if (n == 0) return;
  const int elite = pop.best_index();
  const int offspring_count =
      std::min(n - 1, static_cast<int>(std::lround(cfg.ga_crossover * n)));
  if (offspring_count <= 0) {
    ++pop.iteration;
    return;
  }
  const std::vector<double> probs = roulette_probabilities(pop.costs);
  const std::size_t dim = pop.vectors.front().size();

  std::vector<GenomeVec> children;
  children.reserve(offspring_count);
  for (int c = 0; c < offspring_count; ++c) {
    const GenomeVec& a = pop.vectors[roulette_pick(probs, rng)];
    const GenomeVec& b = pop.vectors[roulette_pick(probs, rng)];
    GenomeVec child(dim);
    for (std::size_t g = 0; g < dim; ++g) {
      child[g] = rng.uniform() < 0.5 ? a[g] : b[g];
      const double u = rng.uniform();
      const double fresh = rng.uniform();
      if (u < cfg.ga_mutation) child[g] = fresh;
    }
    mask.apply(child);
    children.push_back(std::move(child));
  }
  const std::vector<double> child_costs = objective(children);

  // Worst first; the elite is never a candidate for replacement.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int l, int r) { return pop.costs[l] > pop.costs[r]; });
  int placed = 0;
  for (int idx : order) {
    if (placed == offspring_count) break;
    if (idx == elite) continue;
    pop.vectors[idx] = std::move(children[placed]);
    pop.costs[idx] = child_costs[placed];
    ++placed;
  }
  ++pop.iteration;
  refresh_best(pop);
}

void de_step(Population& pop, Rng& rng, const OptimizerConfig& cfg, const BatchObjective& objective,
             const GeneMask& mask) {
  const int n = static_cast<int>(pop.vectors.size());
  if (n < 4) throw Error(ErrorCode::kConfiguration, "DE needs a population of at least 4");
  const std::size_t dim = pop.vectors.front().size();

  std::vector<GenomeVec> trials;
  trials.reserve(n);
  for (int i = 0; i < n; ++i) {
    int r[3];
    for (int k = 0; k < 3; ++k) {
      for (;;) {
        const int cand = static_cast<int>(rng.below(n));
        if (cand == i || std::find(r, r + k, cand) != r + k) continue;
        r[k] = cand;
        break;
      }
    }
    const std::size_t forced = rng.below(dim);
    GenomeVec trial = pop.vectors[i];
    for (std::size_t g = 0; g < dim; ++g) {
      const double u = rng.uniform();
      if (u < cfg.de_cr || g == forced) {
        trial[g] = pop.vectors[r[0]][g] + cfg.de_f * (pop.vectors[r[1]][g] - pop.vectors[r[2]][g]);
      }
    }
    clip(trial);
    mask.apply(trial);
    trials.push_back(std::move(trial));
  }
  const std::vector<double> trial_costs = objective(trials);
  for (int i = 0; i < n; ++i) {
    if (trial_costs[i] <= pop.costs[i]) {
      pop.vectors[i] = std::move(trials[i]);
      pop.costs[i] = trial_costs[i];
    }
  }
  ++pop.iteration;
  refresh_best(pop);
}

void fa_step(Population& pop, Rng& rng, const OptimizerConfig& cfg, const BatchObjective& objective,
             const GeneMask& mask) {
  const int n = static_cast<int>(pop.vectors.size());
  if (n == 0) return;
  const std::size_t dim = pop.vectors.front().size();
  const double alpha = cfg.fa_alpha * std::pow(cfg.fa_alpha_decay, pop.iteration);
  const int best = pop.best_index();

  std::vector<char> moved(n, 0);
  for (int i = 0; i < n; ++i) {
    if (i == best && n > 1) continue;
    GenomeVec& xi = pop.vectors[i];
    bool attracted = false;
    for (int j = 0; j < n; ++j) {
      // Brightness is -cost, compared on the costs at the start of the step.
      if (!(pop.costs[j] < pop.costs[i])) continue;
      attracted = true;
      const GenomeVec& xj = pop.vectors[j];
      const double r = genome_distance(xi, xj);
      const double beta = cfg.fa_beta0 * std::exp(-cfg.fa_gamma * r * r);
      for (std::size_t g = 0; g < dim; ++g) {
        xi[g] = (1.0 - beta) * xi[g] + beta * xj[g] + alpha * (rng.uniform() - 0.5);
      }
      clip(xi);
      mask.apply(xi);
    }
    if (!attracted) {
      for (std::size_t g = 0; g < dim; ++g) xi[g] += alpha * (rng.uniform() - 0.5);
      clip(xi);
      mask.apply(xi);
    }
    moved[i] = 1;
  }

  std::vector<GenomeVec> batch;
  std::vector<int> where;
  for (int i = 0; i < n; ++i) {
    if (!moved[i]) continue;
    batch.push_back(pop.vectors[i]);
    where.push_back(i);
  }
  const std::vector<double> fresh = objective(batch);
  for (std::size_t k = 0; k < where.size(); ++k) pop.costs[where[k]] = fresh[k];
  ++pop.iteration;
  refresh_best(pop);
}

bool terminated(std::span<const TraceRow> rows, int window, double threshold) {
  if (window < 1 || rows.size() < static_cast<std::size_t>(window)) return false;
  const double now = rows.back().mean_cost;
  const double then = rows[rows.size() - window].mean_cost;
  return std::abs(now - then) / std::max(then, 1e-12) < threshold;
}

std::vector<char> position_gene_mask() {
  std::vector<char> m(kGenomeDim, 0);
  for (int s = 0; s < kSensorSlots; ++s) {
    for (int g : {kGeneActive, kGeneRegion, kGeneGridI, kGeneGridJ}) m[s * kGenesPerSlot + g] = 1;
  }
  return m;
}

std::vector<char> orientation_gene_mask() {
  std::vector<char> m(kGenomeDim, 0);
  for (int s = 0; s < kSensorSlots; ++s) {
    for (int g : {kGeneRoll, kGenePitch, kGeneYaw}) m[s * kGenesPerSlot + g] = 1;
  }
  return m;
}

namespace {

// One optimisation phase: steps until the budget is spent or the mean cost
// settles. Rows are appended to `trace` with running iteration numbers.
void run_phase(Population& pop, Rng& rng, const OptimizerConfig& cfg, const BatchObjective& objective,
               const GeneMask& mask, int budget, double carried_best, SearchTrace& trace) {
  const std::size_t first = trace.rows.size();
  auto record = [&] {
    const int it = trace.rows.empty() ? 0 : trace.rows.back().iteration + 1;
    trace.rows.push_back({it, std::min(pop.best_cost, carried_best), pop.mean_cost()});
  };
  record();
  for (int step = 0; step < budget; ++step) {
    if (terminated(std::span(trace.rows).subspan(first), cfg.term_window, cfg.term_threshold)) break;
    switch (cfg.algorithm) {
      case Algorithm::kGa: ga_step(pop, rng, cfg, objective, mask); break;
      case Algorithm::kDe: de_step(pop, rng, cfg, objective, mask); break;
      case Algorithm::kFa: fa_step(pop, rng, cfg, objective, mask); break;
    }
    record();
  }
}

}  // namespace

SearchResult run_search(SearchMode mode, const OptimizerConfig& cfg, const SearchBounds& bounds,
                        const BatchObjective& objective, std::uint64_t seed) {
  cfg.validate();
  bounds.validate();
  const auto started = std::chrono::steady_clock::now();

  SearchResult result;
  result.trace.seed = seed;
  result.trace.mode = mode;
  result.trace.algorithm = cfg.algorithm;

  // Initial draws do not depend on the mode or algorithm, so every run with
  // the same seed starts from the same sensor layouts.
  Rng init(derive_key({seed, kInitStream}));
  std::vector<GenomeVec> initial;
  initial.reserve(cfg.population);
  for (int i = 0; i < cfg.population; ++i) initial.push_back(encode(random_genome(init, bounds, mode), bounds));
  Rng rng(derive_key({seed, kStepStream}));

  const bool phased = mode == SearchMode::kPo || mode == SearchMode::kOp;
  if (!phased) {
    Population pop = make_population(std::move(initial), objective);
    run_phase(pop, rng, cfg, objective, {}, cfg.max_iterations, pop.best_cost, result.trace);
    result.best_vector = pop.best_vector;
    result.best_cost = pop.best_cost;
  } else {
    const GenomeVec defaults = encode(industry_default_genome(bounds), bounds);
    const bool position_first = mode == SearchMode::kPo;
    GeneMask first{position_first ? position_gene_mask() : orientation_gene_mask(), defaults};
    for (GenomeVec& v : initial) first.apply(v);
    Population pop = make_population(initial, objective);
    const int budget1 = cfg.max_iterations / 2;
    run_phase(pop, rng, cfg, objective, first, budget1, pop.best_cost, result.trace);

    GeneMask second{position_first ? orientation_gene_mask() : position_gene_mask(), pop.best_vector};
    std::vector<GenomeVec> restart;
    restart.reserve(cfg.population);
    restart.push_back(pop.best_vector);
    for (int i = 1; i < cfg.population; ++i) {
      GenomeVec v = encode(random_genome(init, bounds, mode), bounds);
      second.apply(v);
      restart.push_back(std::move(v));
    }
    const double carried = pop.best_cost;
    const GenomeVec carried_vec = pop.best_vector;
    Population pop2 = make_population(std::move(restart), objective);
    run_phase(pop2, rng, cfg, objective, second, cfg.max_iterations - budget1, carried, result.trace);
    if (pop2.best_cost <= carried) {
      result.best_vector = pop2.best_vector;
      result.best_cost = pop2.best_cost;
    } else {
      result.best_vector = carried_vec;
      result.best_cost = carried;
    }
  }
  result.best_genome = decode(result.best_vector, bounds, mode);
  result.trace.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

BatchObjective make_objective(const Evaluator& evaluator, const SearchBounds& bounds, SearchMode mode,
                              int threads) {
  return [&evaluator, bounds, mode, threads](std::span<const GenomeVec> vectors) {
    std::vector<DesignGenome> genomes;
    genomes.reserve(vectors.size());
    for (const GenomeVec& v : vectors) genomes.push_back(decode(v, bounds, mode));
    return evaluator.costs(genomes, threads);
  };
}

SearchResult run_search(SearchMode mode, const OptimizerConfig& cfg, const SearchBounds& bounds,
                        const Evaluator& evaluator, std::uint64_t seed, int threads) {
  return run_search(mode, cfg, bounds, make_objective(evaluator, bounds, mode, threads), seed);
}

AblationResult run_ablation(const OptimizerConfig& cfg, const SearchBounds& bounds,
                            const Evaluator& evaluator, std::span<const SearchMode> modes,
                            std::span<const std::uint64_t> seeds, int threads) {
  AblationResult out;
  for (std::uint64_t seed : seeds) {
    for (SearchMode mode : modes) {
      SearchResult r = run_search(mode, cfg, bounds, evaluator, seed, threads);
      const int steps = r.trace.rows.empty() ? 0 : r.trace.rows.back().iteration;
      out.rows.push_back({mode, seed, r.best_cost, steps, r.trace.wall_time_s});
      out.runs.push_back(std::move(r));
    }
  }
  return out;
}

double median_best_cost(const AblationResult& result, SearchMode mode) {
  std::vector<double> v;
  for (const AblationRow& row : result.rows) {
    if (row.mode == mode) v.push_back(row.best_cost);
  }
  if (v.empty()) throw Error(ErrorCode::kConfiguration, "no ablation rows for mode");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace percarch
