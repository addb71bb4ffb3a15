#include "percarch/tables.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "percarch/error.hpp"
#include "percarch/format.hpp"

namespace percarch {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidDimensions: return "invalid-dimensions";
    case ErrorCode::kOutOfBounds: return "out-of-bounds";
    case ErrorCode::kPlacementForbidden: return "placement-forbidden";
    case ErrorCode::kEncodingDomain: return "encoding-domain";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kTimeDomain: return "time-domain";
    case ErrorCode::kCovarianceIntegrity: return "covariance-integrity";
    case ErrorCode::kNumericalSingularity: return "numerical-singularity";
    case ErrorCode::kDegenerateGeometry: return "degenerate-geometry";
    case ErrorCode::kConfiguration: return "configuration";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kIntegrity: return "integrity";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

namespace {

constexpr std::string_view kDetectorCsv =
    "name,latency_gpu_ms,latency_cpu_ms,map_pct\n"
    "R-CNN,48956.18,66090.83,73.86\n"
    "Fast R-CNN,1834.71,2365.86,76.81\n"
    "Faster R-CNN,176.99,286.72,79.63\n"
    "SSD,53.25,70.32,70.58\n"
    "YOLOv3,24.03,32.92,71.86\n";

constexpr std::string_view kVehicleCsv =
    "key,name,length,width,height,wheelbase\n"
    "bmw_minicooper,BMW Minicooper,3.835,1.727,1.414,2.495\n"
    "audi_tt,Audi TT,4.177,1.832,1.353,2.505\n";

constexpr std::uint64_t kDetectorDigest = 0xfbcb9d43b3df43d4ULL;
constexpr std::uint64_t kVehicleDigest = 0x35f4b6feceadb143ULL;

std::vector<std::vector<std::string>> parse_csv_rows(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t c = 0;
    while (true) {
      std::size_t comma = line.find(',', c);
      cells.emplace_back(line.substr(c, comma == std::string_view::npos ? line.size() - c
                                                                        : comma - c));
      if (comma == std::string_view::npos) break;
      c = comma + 1;
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

double parse_number(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kParse, "not a number: '" + s + "'");
  }
  return v;
}

std::string slugify(std::string_view name) {
  std::string out;
  for (char ch : name) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    } else if (ch == ' ' || ch == '_') {
      out.push_back('_');
    }
  }
  return out;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string fmt_value(double v) { return format_double(v); }

}  // namespace

std::string_view embedded_detector_csv() { return kDetectorCsv; }
std::string_view embedded_vehicle_csv() { return kVehicleCsv; }

const std::array<DetectorProfile, kDetectorCount>& load_detector_table() {
  static const std::array<DetectorProfile, kDetectorCount> table = [] {
    auto rows = parse_csv_rows(kDetectorCsv);
    std::array<DetectorProfile, kDetectorCount> t;
    for (int i = 0; i < kDetectorCount; ++i) {
      const auto& r = rows.at(i + 1);
      t[i] = {r.at(0), parse_number(r.at(1)), parse_number(r.at(2)), parse_number(r.at(3))};
    }
    return t;
  }();
  return table;
}

const DetectorProfile& detector(int index) {
  if (index < 0 || index >= kDetectorCount) {
    throw Error(ErrorCode::kOutOfBounds, "detector index " + std::to_string(index));
  }
  return load_detector_table()[index];
}

int detector_index(std::string_view name) {
  const auto& table = load_detector_table();
  const std::string slug = slugify(name);
  for (int i = 0; i < kDetectorCount; ++i) {
    if (table[i].name == name || slugify(table[i].name) == slug) return i;
  }
  throw Error(ErrorCode::kParse, "unknown detector '" + std::string(name) + "'");
}

std::string detector_slug(int index) { return slugify(detector(index).name); }

std::string_view to_string(FusionAlgorithm algo) {
  switch (algo) {
    case FusionAlgorithm::kKf: return "KF";
    case FusionAlgorithm::kEkf: return "EKF";
    case FusionAlgorithm::kUkf: return "UKF";
  }
  return "?";
}

FusionAlgorithm fusion_from_string(std::string_view name) {
  const std::string slug = slugify(name);
  for (int i = 0; i < kFusionCount; ++i) {
    const auto algo = static_cast<FusionAlgorithm>(i);
    if (slugify(to_string(algo)) == slug) return algo;
  }
  throw Error(ErrorCode::kParse, "unknown fusion algorithm '" + std::string(name) + "'");
}

const std::vector<VehicleEntry>& load_vehicle_table() {
  static const std::vector<VehicleEntry> table = [] {
    std::vector<VehicleEntry> t;
    auto rows = parse_csv_rows(kVehicleCsv);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      t.push_back({r.at(0),
                   {r.at(1),
                    {parse_number(r.at(2)), parse_number(r.at(3)), parse_number(r.at(4)),
                     parse_number(r.at(5))}}});
    }
    return t;
  }();
  return table;
}

const VehicleModel& vehicle_by_key(std::string_view key) {
  for (const auto& e : load_vehicle_table()) {
    if (e.key == key || slugify(e.model.name) == slugify(key)) return e.model;
  }
  throw Error(ErrorCode::kConfiguration, "unknown vehicle '" + std::string(key) + "'");
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool TableVerification::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const TableCheck& c) { return c.ok; });
}

TableVerification verify_tables(const std::string& data_dir) {
  TableVerification out;
  auto check_value = [&](std::string name, double expected, double actual) {
    out.checks.push_back({std::move(name), fmt_value(expected), fmt_value(actual), expected == actual});
  };

  struct DetectorRef {
    const char* name;
    double gpu, cpu, map;
  };
  constexpr DetectorRef kDetectorRef[] = {
      {"R-CNN", 48956.18, 66090.83, 73.86},     {"Fast R-CNN", 1834.71, 2365.86, 76.81},
      {"Faster R-CNN", 176.99, 286.72, 79.63}, {"SSD", 53.25, 70.32, 70.58},
      {"YOLOv3", 24.03, 32.92, 71.86},
  };
  const auto& det = load_detector_table();
  for (int i = 0; i < kDetectorCount; ++i) {
    const auto& ref = kDetectorRef[i];
    out.checks.push_back({std::string(ref.name) + ".name", ref.name, det[i].name,
                          det[i].name == ref.name});
    check_value(std::string(ref.name) + ".latency_gpu_ms", ref.gpu, det[i].latency_gpu_ms);
    check_value(std::string(ref.name) + ".latency_cpu_ms", ref.cpu, det[i].latency_cpu_ms);
    check_value(std::string(ref.name) + ".map_pct", ref.map, det[i].map_pct);
  }

  struct VehicleRef {
    const char* key;
    double l, w, h, wb;
  };
  constexpr VehicleRef kVehicleRef[] = {
      {"bmw_minicooper", 3.835, 1.727, 1.414, 2.495},
      {"audi_tt", 4.177, 1.832, 1.353, 2.505},
  };
  for (const auto& ref : kVehicleRef) {
    const VehicleDims& d = vehicle_by_key(ref.key).dims;
    check_value(std::string(ref.key) + ".length", ref.l, d.length);
    check_value(std::string(ref.key) + ".width", ref.w, d.width);
    check_value(std::string(ref.key) + ".height", ref.h, d.height);
    check_value(std::string(ref.key) + ".wheelbase", ref.wb, d.wheelbase);
  }

  out.checks.push_back({"detectors.digest", hex64(kDetectorDigest), hex64(fnv1a64(kDetectorCsv)),
                        fnv1a64(kDetectorCsv) == kDetectorDigest});
  out.checks.push_back({"vehicles.digest", hex64(kVehicleDigest), hex64(fnv1a64(kVehicleCsv)),
                        fnv1a64(kVehicleCsv) == kVehicleDigest});

  if (!data_dir.empty()) {
    auto compare_file = [&](const std::string& file, std::string_view embedded) {
      std::ifstream in(data_dir + "/" + file, std::ios::binary);
      std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      const bool ok = in.is_open();
      out.checks.push_back({file + ".on_disk", hex64(fnv1a64(embedded)),
                            ok ? hex64(fnv1a64(content)) : std::string("missing"),
                            ok && content == embedded});
    };
    compare_file("detectors.csv", kDetectorCsv);
    compare_file("vehicles.csv", kVehicleCsv);
  }
  return out;
}

}  // namespace percarch
