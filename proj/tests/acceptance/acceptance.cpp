// Acceptance runner. Prints one line per criterion:
//   criterion N: PASS|FAIL  <details>  (<seconds> s)
// With --criterion N only that one runs. Exit status is the number of
// failures (capped at 1).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Eigenvalues>

#include "CLI11.hpp"

#include "app/config.hpp"
#include "app/run.hpp"
#include "filter_scenario.hpp"
#include "percarch/error.hpp"
#include "percarch/format.hpp"
#include "percarch/safety.hpp"
#include "percarch/search.hpp"
#include "support.hpp"

using namespace percarch;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int d = 4) { return format_fixed(v, d); }

int hw_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

// 1. Detector latencies/accuracies and vehicle dimensions, against literals
// typed in here rather than read from the library's reference list.
Outcome data_fidelity() {
  struct Det {
    int index;
    double gpu, cpu, map;
  };
  const Det dets[] = {{kRcnn, 48956.18, 66090.83, 73.86},
                      {kFastRcnn, 1834.71, 2365.86, 76.81},
                      {kFasterRcnn, 176.99, 286.72, 79.63},
                      {kSsd, 53.25, 70.32, 70.58},
                      {kYolov3, 24.03, 32.92, 71.86}};
  struct Veh {
    const char* key;
    double length, width, height, wheelbase;
  };
  const Veh vehs[] = {{"bmw_minicooper", 3.835, 1.727, 1.414, 2.495}, {"audi_tt", 4.177, 1.832, 1.353, 2.505}};

  int values = 0, good = 0;
  for (const Det& d : dets) {
    const DetectorProfile& p = detector(d.index);
    for (auto [a, b] : {std::pair{p.latency_gpu_ms, d.gpu}, {p.latency_cpu_ms, d.cpu}, {p.map_pct, d.map}}) {
      ++values;
      good += a == b;
    }
  }
  int dims = 0, good_dims = 0;
  for (const Veh& v : vehs) {
    const VehicleDims& m = vehicle_by_key(v.key).dims;
    for (auto [a, b] : {std::pair{m.length, v.length}, {m.width, v.width}, {m.height, v.height},
                        {m.wheelbase, v.wheelbase}}) {
      ++dims;
      good_dims += a == b;
    }
  }
  const app::TableCheck check = app::verify_tables();
  std::ostringstream os;
  os << good << "/" << values << " detector values, " << good_dims << "/" << dims << " vehicle dimensions, "
     << "verify-tables " << (check.ok ? "ok" : "mismatch");
  return {good == 15 && values == 15 && good_dims == 8 && dims == 8 && check.ok, os.str()};
}

// 2. KF/EKF/UKF on a constant-velocity target with position fixes.
Outcome filter_correctness() {
  const FusionAlgorithm algos[] = {FusionAlgorithm::kKf, FusionAlgorithm::kEkf, FusionAlgorithm::kUkf};
  double worst_ratio = 0.0, worst_ukf = 0.0;
  bool ekf_exact = true;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::vector<testing::CvRun> runs;
    for (FusionAlgorithm a : algos) {
      FusionConfig c;
      c.algo = a;
      runs.push_back(testing::run_cv_scenario(c, seed));
      worst_ratio = std::max(worst_ratio, runs.back().filter_rmse / runs.back().measurement_rmse);
    }
    for (std::size_t k = 0; k < runs[0].estimates.size(); ++k) {
      const StateVec& kf = runs[0].estimates[k];
      ekf_exact = ekf_exact && kf == runs[1].estimates[k];
      worst_ukf = std::max(worst_ukf, (runs[2].estimates[k] - kf).norm() / std::max(1.0, kf.norm()));
    }
  }
  std::ostringstream os;
  os << "worst rmse ratio " << fmt(worst_ratio) << " (< 0.8), EKF==KF " << (ekf_exact ? "yes" : "no")
     << ", UKF max rel diff " << std::scientific << worst_ukf;
  return {worst_ratio < 0.8 && ekf_exact && worst_ukf < 1e-6, os.str()};
}

// 3. 108-point reduced space: brute force vs GA/DE/FA.
Outcome exhaustive_oracle() {
  const VehicleLayout layout = testing::audi_layout();
  SearchBounds b = SearchBounds::from_layout(layout);
  b.regions = {RegionGrid{'D', 2, 2}};
  b.roll = {0, 0, 1};
  b.pitch = {0, 0, 1};
  b.yaw = {-10, 10, 10};
  b.detectors = {kFasterRcnn, kYolov3};
  b.fusions = {FusionAlgorithm::kKf, FusionAlgorithm::kEkf};
  b.slots.fill(SlotPolicy::kForcedOff);
  b.slots[0] = SlotPolicy::kForcedOn;
  b.validate();

  EvaluationConfig ecfg;
  ecfg.threads = hw_threads();
  const Evaluator ev(layout, testing::short_cycles(10.0), ecfg);

  std::vector<DesignGenome> all;
  for (int i = 0; i <= 2; ++i) {
    for (int j = 0; j <= 2; ++j) {
      for (int yaw = -10; yaw <= 10; yaw += 10) {
        for (int d : b.detectors) {
          for (FusionAlgorithm f : b.fusions) {
            DesignGenome g;
            g.sensors[0] = SensorGene{true, SensorKind::kCamera, 'D', i, j, 0, 0, yaw};
            for (int s = 1; s < kSensorSlots; ++s) {
              g.sensors[s].kind = slot_kind(s);
              g.sensors[s].region_id = 'D';
            }
            g.detector_index = d;
            g.fusion = f;
            validate_genome(g, b);
            all.push_back(g);
          }
        }
      }
    }
  }
  const std::vector<double> costs = ev.costs(all);
  const double optimum = *std::min_element(costs.begin(), costs.end());

  OptimizerConfig cfg;
  cfg.population = 20;
  cfg.max_iterations = 50;
  std::ostringstream os;
  os << all.size() << " points, optimum " << fmt(optimum, 5) << ";";
  bool pass = all.size() == 108;
  for (Algorithm a : {Algorithm::kGa, Algorithm::kDe, Algorithm::kFa}) {
    cfg.algorithm = a;
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const SearchResult r = run_search(SearchMode::kPasta, cfg, b, ev, seed);
      hits += r.best_cost <= optimum * 1.05 + 1e-12;
    }
    os << " " << to_string(a) << " " << hits << "/5";
    pass = pass && hits >= 4;
  }
  return {pass, os.str()};
}

// 4. Mode ablation with equal budgets. The desk-scale suite is 20 cycles of
// 20 s; every run is DE with a population of 20 and at most 60 iterations.
// Smaller budgets leave PASTA behind the modes that start from fixed good
// choices, since it has to find those choices first.
Outcome ablation_ordering() {
  const VehicleLayout layout = testing::audi_layout();
  EvaluationConfig ecfg;
  ecfg.threads = hw_threads();
  const Evaluator ev(layout, testing::short_cycles(20.0), ecfg);
  OptimizerConfig cfg;
  cfg.algorithm = Algorithm::kDe;
  cfg.population = 20;
  cfg.max_iterations = 60;
  const std::uint64_t seeds[] = {1, 2, 3, 4, 5};
  const AblationResult r = run_ablation(cfg, SearchBounds::from_layout(layout), ev, kAllModes, seeds);
  auto med = [&](SearchMode m) { return median_best_cost(r, m); };
  const double pasta = med(SearchMode::kPasta), pod = med(SearchMode::kPod), pof = med(SearchMode::kPof),
               vespa = med(SearchMode::kVespa), po = med(SearchMode::kPo), op = med(SearchMode::kOp);
  const bool pass = pasta <= pod && pasta <= pof && pasta <= vespa && vespa <= std::min(po, op) + 0.02;
  std::ostringstream os;
  os << "medians PASTA " << fmt(pasta, 5) << ", POD " << fmt(pod, 5) << ", POF " << fmt(pof, 5) << ", VESPA "
     << fmt(vespa, 5) << ", PO " << fmt(po, 5) << ", OP " << fmt(op, 5);
  return {pass, os.str()};
}

// 5. Sensorless and oracle architectures on the standard cycles.
Outcome degenerate_metrics() {
  const VehicleLayout layout = testing::audi_layout();
  EvaluationConfig ecfg;
  ecfg.threads = hw_threads();
  const Evaluator ev(layout, testing::short_cycles(60.0), ecfg);

  DesignGenome none;
  for (int s = 0; s < kSensorSlots; ++s) none.sensors[s].kind = slot_kind(s);
  const EvaluationReport blind = ev.evaluate(none);

  SensingConfig ideal;
  ideal.ideal = true;
  const std::vector<PlacedSensor> omni{
      PlacedSensor(SensorSpec::omnidirectional(SensorKind::kCamera, 500.0), SensorPose{0, 0, 1.0}, Vec3{0, 1, 0})};
  const EvaluationReport oracle = ev.evaluate_sensors(omni, kYolov3, FusionAlgorithm::kEkf, 0, ideal);

  const MetricVector& m = blind.aggregate;
  const bool pass = m[kOcclusionRate] == 1.0 && m[kLateDetectionRate] == 1.0 && m[kLaneFnRate] == 1.0 &&
                    blind.cost > 0.5 && oracle.cost < 0.02;
  std::ostringstream os;
  os << "sensorless occlusion " << fmt(m[kOcclusionRate], 3) << " late " << fmt(m[kLateDetectionRate], 3)
     << " lane_fn " << fmt(m[kLaneFnRate], 3) << " cost " << fmt(blind.cost) << "; oracle cost "
     << fmt(oracle.cost, 5);
  return {pass, os.str()};
}

// 6. Slower detector never detects earlier on FCW cycles. Checked on the
// conventional rig and on its cameras alone, where the detector is the only
// path to a track.
Outcome latency_direction() {
  const VehicleLayout layout = testing::audi_layout();
  const SearchBounds b = SearchBounds::from_layout(layout);
  std::ostringstream os;
  bool pass = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    EvaluationConfig ecfg;
    ecfg.seed = seed;
    ecfg.threads = hw_threads();
    const Evaluator ev(layout, testing::only_feature(testing::short_cycles(60.0, seed), Feature::kFcw), ecfg);
    os << (seed > 1 ? "; " : "") << "seed " << seed;
    for (bool cameras_only : {false, true}) {
      DesignGenome g = industry_default_genome(b);
      if (cameras_only) {
        for (int s = kCameraSlots; s < kSensorSlots; ++s) g.sensors[s].active = false;
      }
      g.detector_index = kYolov3;
      const double yolo = ev.evaluate(g).aggregate[kLateDetectionRate];
      g.detector_index = kRcnn;
      const double rcnn = ev.evaluate(g).aggregate[kLateDetectionRate];
      pass = pass && rcnn >= yolo;
      os << (cameras_only ? " cameras " : " rig ") << fmt(yolo, 3) << "->" << fmt(rcnn, 3);
    }
  }
  return {pass, "late rate YOLOv3->R-CNN: " + os.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 7. The same run at 1, 4 and all threads writes identical bytes.
Outcome determinism() {
  testing::TempDir dir("determinism");
  const int counts[] = {1, 4, hw_threads()};
  const char* files[] = {"trace.csv", "best_genome.json", "report.json", "cycle_metrics.csv",
                         "test_report.json", "test_cycle_metrics.csv", "coverage_grid.csv"};
  bool pass = true;
  std::ostringstream os;
  for (const char* algo : {"ga", "de", "fa"}) {
    std::vector<std::string> first;
    for (int t : counts) {
      std::ostringstream text;
      text << R"({"seed": 7, "algorithm": ")" << algo << R"(", "threads": )" << t
           << R"(, "cycles": {"duration": 20.0}, "optimizer": {"population": 10, "max_iterations": 8}})";
      app::RunConfig c = app::parse_config(text.str());
      c.output_dir = (dir.path() / (std::string(algo) + std::to_string(t))).string();
      std::ostringstream log;
      if (app::cmd_search(c, log) != 0) return {false, "search failed: " + log.str()};
      std::vector<std::string> bytes;
      for (const char* f : files) bytes.push_back(slurp(fs::path(c.output_dir) / f));
      if (first.empty()) {
        first = bytes;
      } else if (bytes != first) {
        pass = false;
        os << algo << " differs at " << t << " threads; ";
      }
    }
  }
  os << "GA/DE/FA searches at threads 1, 4, " << hw_threads() << " compared over " << std::size(files) << " files";
  return {pass, os.str()};
}

double sphere_cost(const GenomeVec& v) {
  double s = 0.0;
  for (std::size_t g = 0; g < v.size(); ++g) {
    const double c = 0.1 + 0.8 * static_cast<double>((g * 7) % 13) / 12.0;
    s += (v[g] - c) * (v[g] - c);
  }
  return s;
}

std::vector<double> sphere(std::span<const GenomeVec> vs) {
  std::vector<double> out;
  for (const GenomeVec& v : vs) out.push_back(sphere_cost(v));
  return out;
}

std::vector<GenomeVec> random_vectors(Rng& rng, int n) {
  std::vector<GenomeVec> out(n, GenomeVec(kGenomeDim));
  for (auto& v : out) {
    for (double& x : v) x = rng.uniform();
  }
  return out;
}

// 8. Per-step laws of the three optimisers and the stopping rule.
Outcome step_laws() {
  const OptimizerConfig cfg;
  int de_bad = 0, ga_bad = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed);
    Population pop = make_population(random_vectors(rng, 4 + static_cast<int>(seed % 13)), sphere);
    for (int k = 0; k < 10; ++k) {
      const double before = pop.mean_cost();
      de_step(pop, rng, cfg, sphere);
      de_bad += pop.mean_cost() > before;
    }
    Population gp = make_population(random_vectors(rng, 10), sphere);
    for (int k = 0; k < 10; ++k) {
      const GenomeVec elite = gp.vectors[gp.best_index()];
      ga_step(gp, rng, cfg, sphere);
      ga_bad += std::find(gp.vectors.begin(), gp.vectors.end(), elite) == gp.vectors.end();
    }
  }

  OptimizerConfig fa = cfg;
  fa.fa_alpha = 0.0;
  fa.fa_gamma = 0.0;
  fa.fa_beta0 = 1.0;
  int fa_bad = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    Population pop = make_population(random_vectors(rng, 2), sphere);
    const GenomeVec bright = pop.vectors[pop.best_index()];
    fa_step(pop, rng, fa, sphere);
    fa_bad += pop.vectors[0] != bright || pop.vectors[1] != bright;
  }

  int term_bad = 0;
  for (int w : {1, 2, 5, 50, 250}) {
    std::vector<TraceRow> rows;
    for (int i = 0; i < w + 3; ++i) {
      rows.push_back({i, 0.4, 0.4});
      const bool fired = terminated(rows, w, 0.05);
      term_bad += fired != (static_cast<int>(rows.size()) >= w);
    }
    OptimizerConfig run = cfg;
    run.population = 4;
    run.term_window = w;
    run.max_iterations = 1000;
    const BatchObjective flat = [](std::span<const GenomeVec> v) { return std::vector<double>(v.size(), 0.4); };
    for (Algorithm a : {Algorithm::kGa, Algorithm::kDe, Algorithm::kFa}) {
      run.algorithm = a;
      term_bad += static_cast<int>(run_search(SearchMode::kPasta, run, SearchBounds::from_layout(testing::audi_layout()),
                                              flat, 1)
                                       .trace.rows.size()) != std::max(w, 1);
    }
  }
  std::ostringstream os;
  os << "DE mean increases " << de_bad << "/1000, GA elite losses " << ga_bad << "/1000, FA exact misses "
     << fa_bad << "/20, termination errors " << term_bad;
  return {de_bad == 0 && ga_bad == 0 && fa_bad == 0 && term_bad == 0, os.str()};
}

// 9. Encoding, coverage, covariance and RSS invariants.
Outcome micro_invariants() {
  const VehicleLayout layout = testing::audi_layout();
  const SearchBounds b = SearchBounds::from_layout(layout);
  Rng rng(2024);

  int roundtrip_bad = 0;
  for (int k = 0; k < 10000; ++k) {
    const DesignGenome g = random_genome(rng, b);
    roundtrip_bad += decode(encode(g, b), b) != g;
  }

  int coverage_bad = 0;
  const auto ids = layout.placeable_region_ids();
  for (int c = 0; c < 100; ++c) {
    std::vector<PlacedSensor> sensors;
    auto add = [&] {
      const MountRegion& r = layout.region(ids[rng.below(ids.size())]);
      const Vec3 p = surface_point(r, static_cast<int>(rng.below(r.max_i() + 1)),
                                   static_cast<int>(rng.below(r.max_j() + 1)));
      const SensorSpec spec = rng.below(2) ? SensorSpec::default_radar() : SensorSpec::default_camera();
      sensors.emplace_back(spec, SensorPose{p.x, p.y, p.z, rng.uniform(-5, 5), rng.uniform(-15, 15),
                                            rng.uniform(-60, 60)},
                           r.outward_normal);
    };
    const int base = static_cast<int>(rng.below(4));
    for (int s = 0; s < base; ++s) add();
    const auto before = zone_coverage(sensors, layout.zones(), 1.0);
    add();
    const auto after = zone_coverage(sensors, layout.zones(), 1.0);
    for (const auto& [id, f] : after) coverage_bad += f < before.at(id);
  }

  int cov_bad = 0;
  long steps = 0;
  for (FusionAlgorithm a : {FusionAlgorithm::kKf, FusionAlgorithm::kEkf, FusionAlgorithm::kUkf}) {
    FusionConfig c;
    c.algo = a;
    Vec2 pos{3.0, 40.0}, vel{0.5, -2.0};
    TrackState t = spawn_track(1, make_position_measurement(0, pos, 1.0), c);
    for (int k = 0; k < 100000; ++k, ++steps) {
      const double dt = rng.uniform(0.01, 0.2);
      pos = {pos.x + vel.x * dt, pos.y + vel.y * dt};
      if (std::hypot(pos.x, pos.y) < 10.0 || std::hypot(pos.x, pos.y) > 150.0) {
        vel = {-vel.x, -vel.y};
      }
      t = predict(t, dt, c);
      const double r = std::hypot(pos.x, pos.y);
      const double az = rad_to_deg(std::atan2(pos.x, pos.y));
      Measurement m;
      switch (rng.below(3)) {
        case 0:
          m.kind = MeasurementKind::kRadar;
          m.z << r + 0.3 * rng.normal(), az + 0.5 * rng.normal(), rng.normal();
          m.R.diagonal() << 0.09, 0.25, 0.09;
          break;
        case 1:
          m.kind = MeasurementKind::kCamera;
          m.z << az + 0.5 * rng.normal(), r * (1 + 0.05 * rng.normal()), 0.0;
          m.R.diagonal() << 0.25, std::pow(0.05 * r, 2), 0.0;
          break;
        default:
          m = make_position_measurement(0, {pos.x + rng.normal(), pos.y + rng.normal()}, 1.0);
      }
      try {
        t = update(t, m, c);
      } catch (const Error&) {
        ++cov_bad;
        continue;
      }
      const bool sym = (t.P - t.P.transpose()).cwiseAbs().maxCoeff() <= 1e-9;
      const Eigen::SelfAdjointEigenSolver<StateCov> es(t.P);
      cov_bad += !sym || es.eigenvalues().minCoeff() < -1e-9;
    }
  }

  int rss_bad = 0;
  SafetyParams p;
  p.rho = 0.0;
  rss_bad += rss_longitudinal(0, 0, p) != 0.0;
  p.b_min_brake = p.b_max_brake;
  for (double v : {1.0, 10.0, 35.0}) rss_bad += std::abs(rss_longitudinal(v, v, p)) > 1e-12;
  rss_bad += rss_longitudinal(0.0, 40.0, SafetyParams{}) != 0.0;

  std::ostringstream os;
  os << "round-trip mismatches " << roundtrip_bad << "/10000, coverage decreases " << coverage_bad
     << " over 100 cases, covariance violations " << cov_bad << "/" << steps << " steps, RSS identity failures "
     << rss_bad;
  return {roundtrip_bad == 0 && coverage_bad == 0 && cov_bad == 0 && rss_bad == 0, os.str()};
}

struct Criterion {
  std::function<Outcome()> run;
  double limit_s;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Acceptance criteria"};
  int only = 0;
  cli.add_option("--criterion", only, "Run a single criterion (1-9)")->check(CLI::Range(1, 9));
  CLI11_PARSE(cli, argc, argv);

  const Criterion criteria[] = {
      {data_fidelity, 1},         {filter_correctness, 5}, {exhaustive_oracle, 300},
      {ablation_ordering, 7200},  {degenerate_metrics, 30}, {latency_direction, 300},
      {determinism, 600},         {step_laws, 60},          {micro_invariants, 120},
  };

  int failures = 0;
  for (int n = 1; n <= 9; ++n) {
    if (only && n != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[n - 1].run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > criteria[n - 1].limit_s) {
      o.pass = false;
      o.detail += "; over the " + format_double(criteria[n - 1].limit_s) + " s runtime limit";
    }
    failures += !o.pass;
    std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << "  ("
              << fmt(secs, 2) << " s)" << std::endl;
  }
  return failures ? 1 : 0;
}
