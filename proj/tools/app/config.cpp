#include "app/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"

#include "percarch/error.hpp"
#include "percarch/parallel.hpp"
#include "percarch/tables.hpp"

namespace percarch::app {

using nlohmann::ordered_json;

namespace {

// Walks one JSON object, remembering which keys were consumed so leftovers
// can be reported with a suggestion.
class ObjectReader {
 public:
  ObjectReader(const ordered_json& obj, std::string path, std::vector<std::string>& problems)
      : obj_(obj), path_(std::move(path)), problems_(problems) {
    if (!obj_.is_object()) problems_.push_back(path_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    known_.push_back(key);
    if (!obj_.is_object() || !obj_.contains(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      problems_.push_back(where(key) + ": wrong type");
    }
  }

  // Passes the raw node to `fn` if present.
  void with(const char* key, const std::function<void(const ordered_json&, const std::string&)>& fn) {
    known_.push_back(key);
    if (obj_.is_object() && obj_.contains(key)) fn(obj_.at(key), where(key));
  }

  void finish() {
    if (!obj_.is_object()) return;
    for (const auto& [key, value] : obj_.items()) {
      if (std::find(known_.begin(), known_.end(), key) != known_.end()) continue;
      std::string msg = where(key) + ": unknown key";
      std::string best;
      std::size_t best_d = std::string::npos;
      for (const std::string& k : known_) {
        const std::size_t d = edit_distance(key, k);
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      if (best_d <= std::max<std::size_t>(2, key.size() / 3)) msg += " (did you mean '" + best + "'?)";
      problems_.push_back(msg);
    }
  }

 private:
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const ordered_json& obj_;
  std::string path_;
  std::vector<std::string>& problems_;
  std::vector<std::string> known_;
};

// Runs a validate() that throws, folding its message into `problems`.
template <typename F>
void collect(std::vector<std::string>& problems, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    std::istringstream lines(e.what());
    std::string line;
    bool first = true;
    while (std::getline(lines, line)) {
      if (first) {
        first = false;
        if (line.find(':') == line.size() - 1) continue;  // header line of a list
      }
      const auto pos = line.find_first_not_of(" -");
      if (pos != std::string::npos) problems.push_back(line.substr(pos));
    }
  }
}

void read_noise(ObjectReader& r, SensorNoise& n) {
  r.get("range_m", n.range_m);
  r.get("azimuth_deg", n.azimuth_deg);
  r.get("range_rate_mps", n.range_rate_mps);
  r.get("range_fraction", n.range_fraction);
}

void read_sensor(const ordered_json& node, const std::string& path, SensorSpec& spec,
                 std::vector<std::string>& problems) {
  ObjectReader r(node, path, problems);
  r.get("hfov_deg", spec.hfov_deg);
  r.get("vfov_deg", spec.vfov_deg);
  r.get("max_range_m", spec.max_range_m);
  r.get("rate_hz", spec.rate_hz);
  r.with("noise", [&](const ordered_json& n, const std::string& p) {
    ObjectReader nr(n, p, problems);
    read_noise(nr, spec.noise);
    nr.finish();
  });
  r.finish();
}

std::string trim_lower(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c != ' ') out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

// 1-based line and column of a byte offset.
std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

int RunConfig::resolved_threads() const { return threads > 0 ? threads : hardware_threads(); }

VehicleModel RunConfig::vehicle() const { return vehicle_inline ? *vehicle_inline : vehicle_by_key(vehicle_key); }

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  auto number = [&](std::string_view s) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      throw Error(ErrorCode::kParse, "bad seed '" + std::string(s) + "'");
    }
    return v;
  };
  std::vector<std::uint64_t> out;
  if (const auto dots = text.find(".."); dots != std::string_view::npos) {
    const std::uint64_t lo = number(text.substr(0, dots));
    const std::uint64_t hi = number(text.substr(dots + 2));
    if (hi < lo) throw Error(ErrorCode::kParse, "empty seed range '" + std::string(text) + "'");
    for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
    return out;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto part = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    out.push_back(number(part));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<SearchMode> parse_mode_list(std::string_view text) {
  std::vector<SearchMode> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto part = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    out.push_back(search_mode_from_string(part));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

RunConfig parse_config(std::string_view text) {
  ordered_json root;
  try {
    root = ordered_json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    throw Error(ErrorCode::kParse,
                "config parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                    e.what());
  }

  RunConfig cfg;
  std::vector<std::string> problems;
  ObjectReader top(root, "", problems);

  bool have_seed = false;
  top.with("seed", [&](const ordered_json& n, const std::string& p) {
    if (!n.is_number_unsigned()) {
      problems.push_back(p + ": must be a non-negative integer");
      return;
    }
    cfg.seed = n.get<std::uint64_t>();
    have_seed = true;
  });
  bool have_cycle_seed = false;
  top.with("cycle_seed", [&](const ordered_json& n, const std::string& p) {
    if (!n.is_number_unsigned()) {
      problems.push_back(p + ": must be a non-negative integer");
      return;
    }
    cfg.cycle_seed = n.get<std::uint64_t>();
    have_cycle_seed = true;
  });

  top.with("vehicle", [&](const ordered_json& n, const std::string& p) {
    if (n.is_string()) {
      cfg.vehicle_key = n.get<std::string>();
      try {
        vehicle_by_key(cfg.vehicle_key);
      } catch (const Error&) {
        problems.push_back(p + ": unknown vehicle '" + cfg.vehicle_key + "'");
      }
      return;
    }
    VehicleModel m;
    ObjectReader r(n, p, problems);
    r.get("name", m.name);
    r.get("length", m.dims.length);
    r.get("width", m.dims.width);
    r.get("height", m.dims.height);
    r.get("wheelbase", m.dims.wheelbase);
    r.finish();
    if (m.name.empty()) m.name = "custom";
    cfg.vehicle_inline = m;
  });

  top.with("algorithm", [&](const ordered_json& n, const std::string& p) {
    try {
      cfg.optimizer.algorithm = algorithm_from_string(n.get<std::string>());
    } catch (const std::exception& e) {
      problems.push_back(p + ": " + e.what());
    }
  });
  top.with("mode", [&](const ordered_json& n, const std::string& p) {
    try {
      cfg.mode = search_mode_from_string(n.get<std::string>());
    } catch (const std::exception& e) {
      problems.push_back(p + ": " + e.what());
    }
  });
  top.with("detectors", [&](const ordered_json& n, const std::string& p) {
    if (!n.is_array()) {
      problems.push_back(p + ": expected a list");
      return;
    }
    for (const auto& v : n) {
      try {
        const int d = detector_index(v.get<std::string>());
        if (std::find(cfg.detectors.begin(), cfg.detectors.end(), d) == cfg.detectors.end()) cfg.detectors.push_back(d);
      } catch (const std::exception& e) {
        problems.push_back(p + ": " + e.what());
      }
    }
    std::sort(cfg.detectors.begin(), cfg.detectors.end());
  });
  top.with("fusions", [&](const ordered_json& n, const std::string& p) {
    if (!n.is_array()) {
      problems.push_back(p + ": expected a list");
      return;
    }
    for (const auto& v : n) {
      try {
        const FusionAlgorithm f = fusion_from_string(v.get<std::string>());
        if (std::find(cfg.fusions.begin(), cfg.fusions.end(), f) == cfg.fusions.end()) cfg.fusions.push_back(f);
      } catch (const std::exception& e) {
        problems.push_back(p + ": " + e.what());
      }
    }
    std::sort(cfg.fusions.begin(), cfg.fusions.end());
  });
  top.get("threads", cfg.threads);
  top.get("output", cfg.output_dir);
  top.with("latency", [&](const ordered_json& n, const std::string& p) {
    const std::string v = n.is_string() ? trim_lower(n.get<std::string>()) : "";
    if (v == "gpu") {
      cfg.evaluation.sensing.latency = LatencyColumn::kGpu;
    } else if (v == "cpu") {
      cfg.evaluation.sensing.latency = LatencyColumn::kCpu;
    } else {
      problems.push_back(p + ": expected \"gpu\" or \"cpu\"");
    }
  });

  top.with("cycles", [&](const ordered_json& n, const std::string& p) {
    ObjectReader r(n, p, problems);
    r.get("duration", cfg.cycles.duration);
    r.get("dt", cfg.cycles.dt);
    r.get("per_feature", cfg.cycles.cycles_per_feature);
    r.get("lane_width", cfg.cycles.lane_width);
    r.finish();
  });

  top.with("optimizer", [&](const ordered_json& n, const std::string& p) {
    ObjectReader r(n, p, problems);
    OptimizerConfig& o = cfg.optimizer;
    r.get("population", o.population);
    r.get("max_iterations", o.max_iterations);
    r.get("term_window", o.term_window);
    r.get("term_threshold", o.term_threshold);
    r.get("ga_crossover", o.ga_crossover);
    r.get("ga_mutation", o.ga_mutation);
    r.get("de_cr", o.de_cr);
    r.get("de_f", o.de_f);
    r.get("fa_beta0", o.fa_beta0);
    r.get("fa_gamma", o.fa_gamma);
    r.get("fa_alpha", o.fa_alpha);
    r.get("fa_alpha_decay", o.fa_alpha_decay);
    r.finish();
  });

  top.with("fusion", [&](const ordered_json& n, const std::string& p) {
    ObjectReader r(n, p, problems);
    FusionConfig& f = cfg.evaluation.fusion;
    r.get("q", f.q);
    r.get("gate", f.gate);
    r.get("confirm_m", f.confirm_m);
    r.get("confirm_n", f.confirm_n);
    r.get("delete_after", f.delete_after);
    r.get("init_velocity_variance", f.init_velocity_variance);
    r.get("ukf_alpha", f.ukf_alpha);
    r.get("ukf_beta", f.ukf_beta);
    r.get("ukf_kappa", f.ukf_kappa);
    r.get("merge_duplicates", f.merge_duplicates);
    r.finish();
  });

  top.with("sensing", [&](const ordered_json& n, const std::string& p) {
    ObjectReader r(n, p, problems);
    SensingConfig& s = cfg.evaluation.sensing;
    r.get("radar_detection", s.radar_detection);
    r.get("camera_clutter_scale", s.camera_clutter_scale);
    r.get("radar_clutter", s.radar_clutter);
    r.get("lane_spurious", s.lane_spurious);
    r.get("occlusion", s.occlusion);
    r.get("ideal", s.ideal);
    r.finish();
  });
  top.with("camera", [&](const ordered_json& n, const std::string& p) {
    read_sensor(n, p, cfg.evaluation.camera, problems);
  });
  top.with("radar", [&](const ordered_json& n, const std::string& p) {
    read_sensor(n, p, cfg.evaluation.radar, problems);
  });

  top.with("norms", [&](const ordered_json& n, const std::string& p) {
    ObjectReader r(n, p, problems);
    MetricNorms& m = cfg.evaluation.norms;
    r.get("lon_error", m.lon_error);
    r.get("lat_error", m.lat_error);
    r.get("velocity_threshold", m.velocity_threshold);
    r.get("vicinity", m.vicinity);
    r.get("dwell", m.dwell);
    r.get("match_gate", m.match_gate);
    r.finish();
  });
  top.with("safety", [&](const ordered_json& n, const std::string& p) {
    ObjectReader r(n, p, problems);
    SafetyParams& s = cfg.evaluation.safety;
    r.get("rho", s.rho);
    r.get("a_max_accel", s.a_max_accel);
    r.get("b_min_brake", s.b_min_brake);
    r.get("b_max_brake", s.b_max_brake);
    r.get("lateral_base", s.lateral_base);
    r.get("lateral_per_speed", s.lateral_per_speed);
    r.finish();
  });
  top.with("weights", [&](const ordered_json& n, const std::string& p) {
    ObjectReader r(n, p, problems);
    MetricVector raw{};
    for (int m = 0; m < kMetricCount; ++m) r.get(std::string(metric_name(m)).c_str(), raw[m]);
    r.finish();
    collect(problems, [&] { cfg.evaluation.weights = CostWeights::normalized(raw); });
  });
  top.get("cache", cfg.evaluation.cache);

  top.with("ablation", [&](const ordered_json& n, const std::string& p) {
    ObjectReader r(n, p, problems);
    r.with("modes", [&](const ordered_json& m, const std::string& mp) {
      cfg.ablation_modes.clear();
      if (!m.is_array()) {
        problems.push_back(mp + ": expected a list");
        return;
      }
      for (const auto& v : m) {
        try {
          cfg.ablation_modes.push_back(search_mode_from_string(v.get<std::string>()));
        } catch (const std::exception& e) {
          problems.push_back(mp + ": " + e.what());
        }
      }
    });
    r.with("seeds", [&](const ordered_json& s, const std::string& sp) {
      try {
        cfg.ablation_seeds = s.is_string() ? parse_seed_list(s.get<std::string>())
                                           : s.get<std::vector<std::uint64_t>>();
      } catch (const std::exception& e) {
        problems.push_back(sp + ": " + e.what());
      }
    });
    r.finish();
  });
  top.finish();

  if (!have_seed) problems.push_back("seed: required (runs never draw implicit entropy)");
  if (!have_cycle_seed) cfg.cycle_seed = cfg.seed;
  if (cfg.threads < 0) problems.push_back("threads must be non-negative");
  if (cfg.ablation_modes.empty()) problems.push_back("ablation.modes must not be empty");
  if (cfg.ablation_seeds.empty()) problems.push_back("ablation.seeds must not be empty");
  if (!(cfg.cycles.duration > 0)) problems.push_back("cycles.duration must be positive");
  if (!(cfg.cycles.dt > 0)) problems.push_back("cycles.dt must be positive");
  if (cfg.cycles.cycles_per_feature < 1) problems.push_back("cycles.per_feature must be at least 1");
  collect(problems, [&] { cfg.optimizer.validate(); });
  collect(problems, [&] { cfg.evaluation.fusion.validate(); });
  collect(problems, [&] { cfg.evaluation.norms.validate(); });
  collect(problems, [&] { cfg.evaluation.safety.validate(); });
  collect(problems, [&] { cfg.evaluation.camera.validate(); });
  collect(problems, [&] { cfg.evaluation.radar.validate(); });
  // A mode that pins a choice needs that choice to be a candidate.
  std::vector<SearchMode> used = cfg.ablation_modes;
  used.push_back(cfg.mode);
  for (SearchMode m : used) {
    const ModeBinding b = mode_binding(m);
    if (b.detector && !cfg.detectors.empty() &&
        std::find(cfg.detectors.begin(), cfg.detectors.end(), *b.detector) == cfg.detectors.end()) {
      problems.push_back("detectors: mode " + std::string(to_string(m)) + " needs " + detector(*b.detector).name);
    }
    if (b.fusion && !cfg.fusions.empty() &&
        std::find(cfg.fusions.begin(), cfg.fusions.end(), *b.fusion) == cfg.fusions.end()) {
      problems.push_back("fusions: mode " + std::string(to_string(m)) + " needs " + std::string(to_string(*b.fusion)));
    }
  }
  if (cfg.vehicle_inline) {
    collect(problems, [&] { build_vehicle(cfg.vehicle_inline->name, cfg.vehicle_inline->dims); });
  }

  if (!problems.empty()) {
    std::string msg = "invalid config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw Error(ErrorCode::kValidation, msg);
  }
  cfg.evaluation.seed = cfg.seed;
  cfg.evaluation.threads = cfg.resolved_threads();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfiguration, "cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const RunConfig& c) {
  ordered_json j;
  if (c.vehicle_inline) {
    j["vehicle"] = {{"name", c.vehicle_inline->name},
                    {"length", c.vehicle_inline->dims.length},
                    {"width", c.vehicle_inline->dims.width},
                    {"height", c.vehicle_inline->dims.height},
                    {"wheelbase", c.vehicle_inline->dims.wheelbase}};
  } else {
    j["vehicle"] = c.vehicle_key;
  }
  j["seed"] = c.seed;
  j["cycle_seed"] = c.cycle_seed;
  j["algorithm"] = std::string(to_string(c.optimizer.algorithm));
  j["mode"] = std::string(to_string(c.mode));
  if (!c.detectors.empty()) {
    ordered_json d = ordered_json::array();
    for (int i : c.detectors) d.push_back(detector_slug(i));
    j["detectors"] = std::move(d);
  }
  if (!c.fusions.empty()) {
    ordered_json f = ordered_json::array();
    for (FusionAlgorithm a : c.fusions) f.push_back(std::string(to_string(a)));
    j["fusions"] = std::move(f);
  }
  j["threads"] = c.threads;
  j["output"] = c.output_dir;
  j["latency"] = c.evaluation.sensing.latency == LatencyColumn::kGpu ? "gpu" : "cpu";
  j["cycles"] = {{"duration", c.cycles.duration},
                 {"dt", c.cycles.dt},
                 {"per_feature", c.cycles.cycles_per_feature},
                 {"lane_width", c.cycles.lane_width}};
  const OptimizerConfig& o = c.optimizer;
  j["optimizer"] = {{"population", o.population},       {"max_iterations", o.max_iterations},
                    {"term_window", o.term_window},     {"term_threshold", o.term_threshold},
                    {"ga_crossover", o.ga_crossover},   {"ga_mutation", o.ga_mutation},
                    {"de_cr", o.de_cr},                 {"de_f", o.de_f},
                    {"fa_beta0", o.fa_beta0},           {"fa_gamma", o.fa_gamma},
                    {"fa_alpha", o.fa_alpha},           {"fa_alpha_decay", o.fa_alpha_decay}};
  const FusionConfig& f = c.evaluation.fusion;
  j["fusion"] = {{"q", f.q},
                 {"gate", f.gate},
                 {"confirm_m", f.confirm_m},
                 {"confirm_n", f.confirm_n},
                 {"delete_after", f.delete_after},
                 {"init_velocity_variance", f.init_velocity_variance},
                 {"ukf_alpha", f.ukf_alpha},
                 {"ukf_beta", f.ukf_beta},
                 {"ukf_kappa", f.ukf_kappa},
                 {"merge_duplicates", f.merge_duplicates}};
  const SensingConfig& s = c.evaluation.sensing;
  j["sensing"] = {{"radar_detection", s.radar_detection},
                  {"camera_clutter_scale", s.camera_clutter_scale},
                  {"radar_clutter", s.radar_clutter},
                  {"lane_spurious", s.lane_spurious},
                  {"occlusion", s.occlusion},
                  {"ideal", s.ideal}};
  auto sensor = [](const SensorSpec& sp) {
    return ordered_json{{"hfov_deg", sp.hfov_deg},
                        {"vfov_deg", sp.vfov_deg},
                        {"max_range_m", sp.max_range_m},
                        {"rate_hz", sp.rate_hz},
                        {"noise",
                         {{"range_m", sp.noise.range_m},
                          {"azimuth_deg", sp.noise.azimuth_deg},
                          {"range_rate_mps", sp.noise.range_rate_mps},
                          {"range_fraction", sp.noise.range_fraction}}}};
  };
  j["camera"] = sensor(c.evaluation.camera);
  j["radar"] = sensor(c.evaluation.radar);
  const MetricNorms& n = c.evaluation.norms;
  j["norms"] = {{"lon_error", n.lon_error},   {"lat_error", n.lat_error},
                {"velocity_threshold", n.velocity_threshold},
                {"vicinity", n.vicinity},     {"dwell", n.dwell},
                {"match_gate", n.match_gate}};
  const SafetyParams& sf = c.evaluation.safety;
  j["safety"] = {{"rho", sf.rho},
                 {"a_max_accel", sf.a_max_accel},
                 {"b_min_brake", sf.b_min_brake},
                 {"b_max_brake", sf.b_max_brake},
                 {"lateral_base", sf.lateral_base},
                 {"lateral_per_speed", sf.lateral_per_speed}};
  if (c.evaluation.weights) {
    ordered_json w;
    for (int m = 0; m < kMetricCount; ++m) w[std::string(metric_name(m))] = c.evaluation.weights->w[m];
    j["weights"] = std::move(w);
  }
  j["cache"] = c.evaluation.cache;
  ordered_json modes = ordered_json::array();
  for (SearchMode m : c.ablation_modes) modes.push_back(std::string(to_string(m)));
  j["ablation"] = {{"modes", modes}, {"seeds", c.ablation_seeds}};
  return j.dump(2) + "\n";
}

}  // namespace percarch::app
