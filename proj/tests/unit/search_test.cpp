#include "percarch/search.hpp"

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "percarch/error.hpp"
#include "percarch/evaluation.hpp"
#include "support.hpp"

namespace percarch {
namespace {

/// Squared distance to a fixed interior target; counts calls.
struct Sphere {
  GenomeVec target;
  int* calls = nullptr;
  std::vector<GenomeVec>* seen = nullptr;

  std::vector<double> operator()(std::span<const GenomeVec> vs) const {
    std::vector<double> out;
    for (const GenomeVec& v : vs) {
      double s = 0.0;
      for (std::size_t g = 0; g < v.size(); ++g) s += (v[g] - target[g]) * (v[g] - target[g]);
      out.push_back(s);
      if (seen) seen->push_back(v);
    }
    if (calls) *calls += static_cast<int>(vs.size());
    return out;
  }
};

Sphere sphere(int dim = kGenomeDim) {
  Sphere s;
  s.target.resize(dim);
  for (int g = 0; g < dim; ++g) s.target[g] = 0.2 + 0.6 * ((g * 37) % 11) / 10.0;
  return s;
}

std::vector<GenomeVec> random_vectors(Rng& rng, int n, int dim = kGenomeDim) {
  std::vector<GenomeVec> out(n, GenomeVec(dim));
  for (auto& v : out) {
    for (double& x : v) x = rng.uniform();
  }
  return out;
}

TEST(Search, AlgorithmNames) {
  EXPECT_EQ(algorithm_from_string("FA"), Algorithm::kFa);
  EXPECT_EQ(to_string(Algorithm::kDe), "DE");
  EXPECT_THROW(algorithm_from_string("pso"), Error);
}

TEST(Search, ConfigValidation) {
  OptimizerConfig c;
  EXPECT_NO_THROW(c.validate());
  c.population = 3;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.ga_mutation = 1.5;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.term_window = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Search, RouletteInversion) {
  const std::vector<double> costs{1.0, 3.0};
  const auto p = roulette_probabilities(costs, 1e-12);
  EXPECT_NEAR(p[0], 1.0, 1e-9);
  EXPECT_NEAR(p[1], 0.0, 1e-9);
  const std::vector<double> flat{2.0, 2.0, 2.0, 2.0};
  for (double x : roulette_probabilities(flat)) EXPECT_DOUBLE_EQ(x, 0.25);
}

TEST(Search, GaFixedPointWithoutMutation) {
  OptimizerConfig cfg;
  cfg.ga_mutation = 0.0;
  const Sphere f = sphere();
  Population pop = make_population(std::vector<GenomeVec>(10, GenomeVec(kGenomeDim, 0.4)), f);
  const auto before = pop.vectors;
  Rng rng(1);
  for (int k = 0; k < 5; ++k) ga_step(pop, rng, cfg, f);
  EXPECT_EQ(pop.vectors, before);
}

TEST(Search, GaEliteNeverLost) {
  const OptimizerConfig cfg;
  const Sphere f = sphere();
  Rng rng(2);
  Population pop = make_population(random_vectors(rng, 20), f);
  for (int k = 0; k < 100; ++k) {
    const GenomeVec elite = pop.vectors[pop.best_index()];
    const double best = pop.best_cost;
    ga_step(pop, rng, cfg, f);
    EXPECT_NE(std::find(pop.vectors.begin(), pop.vectors.end(), elite), pop.vectors.end()) << k;
    EXPECT_LE(pop.best_cost, best);
    EXPECT_LE(pop.costs[pop.best_index()], best);
  }
}

TEST(Search, DeIdenticalPopulationFixed) {
  const OptimizerConfig cfg;
  const Sphere f = sphere();
  Population pop = make_population(std::vector<GenomeVec>(6, GenomeVec(kGenomeDim, 0.7)), f);
  const auto before = pop.vectors;
  Rng rng(3);
  de_step(pop, rng, cfg, f);
  EXPECT_EQ(pop.vectors, before);
}

TEST(Search, DeZeroScaleFullCrossoverCopiesBase) {
  OptimizerConfig cfg;
  cfg.de_f = 0.0;
  cfg.de_cr = 1.0;
  Rng rng(4);
  std::vector<GenomeVec> trials;
  Sphere f = sphere();
  Population pop = make_population(random_vectors(rng, 8), f);
  f.seen = &trials;
  const auto members = pop.vectors;
  de_step(pop, rng, cfg, f);
  ASSERT_EQ(trials.size(), members.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto it = std::find(members.begin(), members.end(), trials[i]);
    ASSERT_NE(it, members.end()) << i;
    EXPECT_NE(static_cast<std::size_t>(it - members.begin()), i);
  }
}

TEST(Search, DeTooSmall) {
  const Sphere f = sphere();
  Population pop = make_population(std::vector<GenomeVec>(3, GenomeVec(kGenomeDim, 0.5)), f);
  Rng rng(1);
  try {
    de_step(pop, rng, OptimizerConfig{}, f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfiguration);
  }
}

TEST(Search, DeMeanNonIncreasing) {
  const OptimizerConfig cfg;
  const Sphere f = sphere();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    Population pop = make_population(random_vectors(rng, 12), f);
    for (int k = 0; k < 20; ++k) {
      const double before = pop.mean_cost();
      const auto old_costs = pop.costs;
      de_step(pop, rng, cfg, f);
      EXPECT_LE(pop.mean_cost(), before + 1e-15);
      for (std::size_t i = 0; i < old_costs.size(); ++i) EXPECT_LE(pop.costs[i], old_costs[i]);
    }
  }
}

TEST(Search, FaSingleFireflyOnlyNoise) {
  OptimizerConfig cfg;
  const Sphere f = sphere();
  Population pop = make_population({GenomeVec(kGenomeDim, 0.5)}, f);
  pop.iteration = 20;
  Rng rng(5);
  fa_step(pop, rng, cfg, f);
  const double alpha = 0.25 * std::pow(0.97, 20);
  double max_dev = 0.0;
  for (double x : pop.vectors[0]) max_dev = std::max(max_dev, std::abs(x - 0.5));
  EXPECT_LE(max_dev, alpha / 2 + 1e-15);
  EXPECT_GT(max_dev, 0.8 * alpha / 2);  // the schedule, not a smaller step
  EXPECT_EQ(pop.iteration, 21);
}

TEST(Search, FaFullAttraction) {
  OptimizerConfig cfg;
  cfg.fa_alpha = 0.0;
  cfg.fa_gamma = 0.0;
  cfg.fa_beta0 = 1.0;
  const Sphere f = sphere();
  Rng rng(6);
  Population pop = make_population(random_vectors(rng, 2), f);
  const int bright = pop.best_index();
  const GenomeVec target = pop.vectors[bright];
  fa_step(pop, rng, cfg, f);
  EXPECT_EQ(pop.vectors[1 - bright], target);
  EXPECT_EQ(pop.vectors[bright], target);
}

TEST(Search, FaBestHeldAndBounded) {
  const OptimizerConfig cfg;
  const Sphere f = sphere();
  Rng rng(9);
  Population pop = make_population(random_vectors(rng, 10), f);
  for (int k = 0; k < 30; ++k) {
    const GenomeVec best = pop.vectors[pop.best_index()];
    const double bc = pop.best_cost;
    fa_step(pop, rng, cfg, f);
    EXPECT_NE(std::find(pop.vectors.begin(), pop.vectors.end(), best), pop.vectors.end());
    EXPECT_LE(pop.best_cost, bc);
    for (const auto& v : pop.vectors) {
      for (double x : v) {
        EXPECT_GE(x, 0.0);
        EXPECT_LE(x, 1.0);
      }
    }
  }
}

std::vector<TraceRow> rows_with_means(const std::vector<double>& means) {
  std::vector<TraceRow> rows;
  for (std::size_t i = 0; i < means.size(); ++i) rows.push_back({static_cast<int>(i), means[i], means[i]});
  return rows;
}

TEST(Search, TerminationConstant) {
  const auto rows = rows_with_means(std::vector<double>(250, 0.3));
  EXPECT_FALSE(terminated(std::span(rows).first(249), 250, 0.05));
  EXPECT_TRUE(terminated(rows, 250, 0.05));
}

TEST(Search, TerminationHalving) {
  std::vector<double> m;
  for (int i = 0; i < 300; ++i) m.push_back(std::pow(0.5, i / 50.0));
  const auto rows = rows_with_means(m);
  for (std::size_t n = 51; n <= rows.size(); ++n) EXPECT_FALSE(terminated(std::span(rows).first(n), 51, 0.05));
}

TEST(Search, TerminationSmallDrift) {
  std::vector<double> m;
  for (int i = 0; i < 10; ++i) m.push_back(1.0 - 0.04 * i / 9.0);
  EXPECT_TRUE(terminated(rows_with_means(m), 10, 0.05));
  m.back() = 0.94;
  EXPECT_FALSE(terminated(rows_with_means(m), 10, 0.05));
}

SearchBounds small_bounds() { return SearchBounds::from_layout(testing::audi_layout()); }

TEST(Search, ConstantObjectiveStopsWhenWindowFills) {
  OptimizerConfig cfg;
  cfg.population = 8;
  cfg.term_window = 12;
  cfg.max_iterations = 100;
  const BatchObjective flat = [](std::span<const GenomeVec> v) { return std::vector<double>(v.size(), 0.5); };
  for (Algorithm a : {Algorithm::kGa, Algorithm::kDe, Algorithm::kFa}) {
    cfg.algorithm = a;
    const SearchResult r = run_search(SearchMode::kPasta, cfg, small_bounds(), flat, 1);
    EXPECT_EQ(r.trace.rows.size(), 12u) << to_string(a);
  }
}

TEST(Search, RunDeterministicAndMonotone) {
  const SearchBounds b = small_bounds();
  const Sphere f = sphere();
  OptimizerConfig cfg;
  cfg.population = 10;
  cfg.max_iterations = 40;
  for (Algorithm a : {Algorithm::kGa, Algorithm::kDe, Algorithm::kFa}) {
    cfg.algorithm = a;
    for (SearchMode m : kAllModes) {
      const SearchResult r1 = run_search(m, cfg, b, f, 11);
      const SearchResult r2 = run_search(m, cfg, b, f, 11);
      ASSERT_EQ(r1.trace.rows.size(), r2.trace.rows.size());
      for (std::size_t i = 0; i < r1.trace.rows.size(); ++i) {
        EXPECT_EQ(r1.trace.rows[i].best_cost, r2.trace.rows[i].best_cost);
        EXPECT_EQ(r1.trace.rows[i].mean_cost, r2.trace.rows[i].mean_cost);
        if (i > 0) EXPECT_LE(r1.trace.rows[i].best_cost, r1.trace.rows[i - 1].best_cost);
      }
      EXPECT_EQ(r1.best_vector, r2.best_vector);
      EXPECT_EQ(r1.best_cost, r1.trace.rows.back().best_cost);
      const ModeBinding mb = mode_binding(m);
      if (mb.detector) EXPECT_EQ(r1.best_genome.detector_index, *mb.detector);
      if (mb.fusion) EXPECT_EQ(r1.best_genome.fusion, *mb.fusion);
    }
  }
}

TEST(Search, SphereConverges) {
  const Sphere f = sphere();
  OptimizerConfig cfg;
  cfg.population = 20;
  cfg.max_iterations = 150;
  cfg.term_window = 1000;
  for (Algorithm a : {Algorithm::kGa, Algorithm::kDe, Algorithm::kFa}) {
    cfg.algorithm = a;
    const SearchResult r = run_search(SearchMode::kPasta, cfg, small_bounds(), f, 2);
    EXPECT_LT(r.best_cost, 0.5 * r.trace.rows.front().best_cost) << to_string(a);
  }
}

TEST(Search, PhasedModesRespectMasks) {
  const SearchBounds b = small_bounds();
  const GenomeVec defaults = encode(industry_default_genome(b), b);
  const auto pos = position_gene_mask();
  const auto ori = orientation_gene_mask();
  for (int g = 0; g < kGenomeDim; ++g) EXPECT_FALSE(pos[g] && ori[g]);
  EXPECT_FALSE(pos[kGeneDetector] || ori[kGeneDetector] || pos[kGeneFusion] || ori[kGeneFusion]);

  OptimizerConfig cfg;
  cfg.population = 6;
  cfg.max_iterations = 10;
  std::vector<GenomeVec> seen;
  Sphere f = sphere();
  f.seen = &seen;
  run_search(SearchMode::kOp, cfg, b, f, 3);
  // The first population of OP explores orientations only.
  for (int i = 0; i < cfg.population; ++i) {
    for (int g = 0; g < kGenomeDim; ++g) {
      if (!ori[g]) EXPECT_EQ(seen[i][g], defaults[g]) << g;
    }
  }
}

TEST(Search, MedianAndAblationShape) {
  OptimizerConfig cfg;
  cfg.population = 4;
  cfg.max_iterations = 2;
  EvaluationConfig ecfg;
  const Evaluator ev(testing::audi_layout(), testing::short_cycles(5.0, 1, 1), ecfg);
  const SearchMode modes[] = {SearchMode::kPasta};
  const std::uint64_t seeds[] = {1, 2, 3};
  const AblationResult r = run_ablation(cfg, SearchBounds::from_layout(ev.layout()), ev, modes, seeds);
  ASSERT_EQ(r.rows.size(), 3u);
  std::vector<double> c;
  for (const auto& row : r.rows) c.push_back(row.best_cost);
  std::sort(c.begin(), c.end());
  EXPECT_EQ(median_best_cost(r, SearchMode::kPasta), c[1]);
  EXPECT_THROW(median_best_cost(r, SearchMode::kPo), Error);
}

TEST(Search, TracesIdenticalAcrossThreadCounts) {
  EvaluationConfig ecfg;
  ecfg.cache = false;
  const Evaluator ev(testing::audi_layout(), testing::short_cycles(5.0, 1, 1), ecfg);
  const SearchBounds b = SearchBounds::from_layout(ev.layout());
  OptimizerConfig cfg;
  cfg.population = 6;
  cfg.max_iterations = 3;
  for (Algorithm a : {Algorithm::kGa, Algorithm::kDe, Algorithm::kFa}) {
    cfg.algorithm = a;
    const SearchResult r1 = run_search(SearchMode::kPasta, cfg, b, ev, 4, 1);
    const SearchResult r4 = run_search(SearchMode::kPasta, cfg, b, ev, 4, 4);
    ASSERT_EQ(r1.trace.rows.size(), r4.trace.rows.size());
    for (std::size_t i = 0; i < r1.trace.rows.size(); ++i) {
      EXPECT_EQ(r1.trace.rows[i].best_cost, r4.trace.rows[i].best_cost);
      EXPECT_EQ(r1.trace.rows[i].mean_cost, r4.trace.rows[i].mean_cost);
    }
  }
}

}  // namespace
}  // namespace percarch
