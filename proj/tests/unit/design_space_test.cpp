#include "percarch/design_space.hpp"

#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "percarch/error.hpp"
#include "support.hpp"

namespace percarch {
namespace {

SearchBounds audi_bounds() { return SearchBounds::from_layout(testing::audi_layout()); }

DesignGenome lower_genome(const SearchBounds& b) {
  DesignGenome g;
  for (int s = 0; s < kSensorSlots; ++s) {
    SensorGene& sg = g.sensors[s];
    sg.active = false;
    sg.kind = slot_kind(s);
    sg.region_id = b.regions.front().id;
    sg.grid_i = sg.grid_j = 0;
    sg.roll_deg = b.roll.lower;
    sg.pitch_deg = b.pitch.lower;
    sg.yaw_deg = b.yaw.lower;
  }
  g.detector_index = b.detectors.front();
  g.fusion = b.fusions.front();
  return g;
}

DesignGenome upper_genome(const SearchBounds& b) {
  DesignGenome g;
  for (int s = 0; s < kSensorSlots; ++s) {
    SensorGene& sg = g.sensors[s];
    sg.active = true;
    sg.kind = slot_kind(s);
    sg.region_id = b.regions.back().id;
    sg.grid_i = b.regions.back().max_i;
    sg.grid_j = b.regions.back().max_j;
    sg.roll_deg = b.roll.upper;
    sg.pitch_deg = b.pitch.upper;
    sg.yaw_deg = b.yaw.upper;
  }
  g.detector_index = b.detectors.back();
  g.fusion = b.fusions.back();
  return g;
}

TEST(DesignSpace, Dimension) { EXPECT_EQ(kGenomeDim, 58); }

TEST(DesignSpace, DefaultAngleLimits) {
  const SearchBounds b = audi_bounds();
  EXPECT_EQ(b.roll.lower, -5);
  EXPECT_EQ(b.roll.upper, 5);
  EXPECT_EQ(b.pitch.lower, -15);
  EXPECT_EQ(b.pitch.upper, 15);
  EXPECT_EQ(b.yaw.lower, -60);
  EXPECT_EQ(b.yaw.upper, 60);
  for (const auto& r : b.regions) EXPECT_TRUE(r.id != 'F' && r.id != 'G');
}

TEST(DesignSpace, LowerBoundsEncodeToZeros) {
  const SearchBounds b = audi_bounds();
  const auto v = encode(lower_genome(b), b);
  ASSERT_EQ(v.size(), 58u);
  for (double x : v) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(decode(v, b), lower_genome(b));
}

TEST(DesignSpace, UpperBoundsEncodeToOnes) {
  const SearchBounds b = audi_bounds();
  for (double x : encode(upper_genome(b), b)) EXPECT_EQ(x, 1.0);
}

TEST(DesignSpace, RoundTripRandom) {
  const SearchBounds b = audi_bounds();
  Rng rng(7);
  for (int k = 0; k < 100; ++k) {
    const DesignGenome g = random_genome(rng, b);
    EXPECT_EQ(decode(encode(g, b), b), g);
  }
}

TEST(DesignSpace, ClippingAndSnapping) {
  const SearchBounds b = audi_bounds();
  std::vector<double> v(kGenomeDim, 1.7);
  EXPECT_EQ(decode(v, b), upper_genome(b));
  std::fill(v.begin(), v.end(), -3.0);
  EXPECT_EQ(decode(v, b), lower_genome(b));
}

TEST(DesignSpace, EncodeDecodeIsIdempotentProjection) {
  const SearchBounds b = audi_bounds();
  Rng rng(3);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> v(kGenomeDim);
    for (double& x : v) x = rng.uniform(-0.2, 1.2);
    const DesignGenome g = decode(v, b);
    EXPECT_NO_THROW(validate_genome(g, b));
    const auto once = encode(g, b);
    EXPECT_EQ(encode(decode(once, b), b), once);
  }
}

TEST(DesignSpace, WrongDimensionIsShapeError) {
  const SearchBounds b = audi_bounds();
  std::vector<double> v(57, 0.0);
  try {
    decode(v, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShape);
  }
}

TEST(DesignSpace, EncodeRejectsOutOfBounds) {
  const SearchBounds b = audi_bounds();
  DesignGenome g = lower_genome(b);
  g.sensors[0].yaw_deg = 61;
  try {
    encode(g, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEncodingDomain);
  }
  g = lower_genome(b);
  g.sensors[2].region_id = 'F';
  EXPECT_THROW(encode(g, b), Error);
}

TEST(DesignSpace, ModeBindingsOverrideDecode) {
  const SearchBounds b = audi_bounds();
  std::vector<double> v(kGenomeDim, 0.5);
  v[kGeneDetector] = 0.0;
  v[kGeneFusion] = 0.0;
  EXPECT_EQ(decode(v, b, SearchMode::kVespa).detector_index, kYolov3);
  EXPECT_EQ(decode(v, b, SearchMode::kVespa).fusion, FusionAlgorithm::kEkf);
  EXPECT_EQ(decode(v, b, SearchMode::kPof).detector_index, kYolov3);
  EXPECT_EQ(decode(v, b, SearchMode::kPof).fusion, FusionAlgorithm::kKf);
  EXPECT_EQ(decode(v, b, SearchMode::kPod).detector_index, kRcnn);
  EXPECT_EQ(decode(v, b, SearchMode::kPod).fusion, FusionAlgorithm::kEkf);
  EXPECT_EQ(decode(v, b, SearchMode::kPasta).detector_index, kRcnn);
  for (SearchMode m : {SearchMode::kPo, SearchMode::kOp}) {
    EXPECT_EQ(decode(v, b, m).detector_index, kYolov3);
    EXPECT_EQ(decode(v, b, m).fusion, FusionAlgorithm::kEkf);
  }
}

TEST(DesignSpace, ModeFixedGenesInvariant) {
  const SearchBounds b = audi_bounds();
  Rng rng(21);
  for (int k = 0; k < 300; ++k) {
    std::vector<double> v(kGenomeDim);
    for (double& x : v) x = rng.uniform();
    EXPECT_EQ(decode(v, b, SearchMode::kPod).fusion, FusionAlgorithm::kEkf);
    EXPECT_EQ(decode(v, b, SearchMode::kPof).detector_index, kYolov3);
    const DesignGenome ve = decode(v, b, SearchMode::kVespa);
    EXPECT_EQ(ve.detector_index, kYolov3);
    EXPECT_EQ(ve.fusion, FusionAlgorithm::kEkf);
  }
}

TEST(DesignSpace, SlotPolicies) {
  SearchBounds b = audi_bounds();
  b.slots.fill(SlotPolicy::kForcedOff);
  b.slots[0] = SlotPolicy::kForcedOn;
  std::vector<double> v(kGenomeDim, 0.0);
  EXPECT_TRUE(decode(v, b).sensors[0].active);
  std::fill(v.begin(), v.end(), 1.0);
  const DesignGenome g = decode(v, b);
  EXPECT_EQ(g.active_count(), 1);
}

TEST(DesignSpace, RandomGenomeDeterministic) {
  const SearchBounds b = audi_bounds();
  Rng a(99), c(99);
  EXPECT_EQ(random_genome(a, b), random_genome(c, b));
}

TEST(DesignSpace, RandomGenomePodFusion) {
  const SearchBounds b = audi_bounds();
  Rng rng(4);
  for (int k = 0; k < 500; ++k) EXPECT_EQ(random_genome(rng, b, SearchMode::kPod).fusion, FusionAlgorithm::kEkf);
}

TEST(DesignSpace, RandomGenomeRegionFrequency) {
  const SearchBounds b = audi_bounds();
  Rng rng(12);
  std::map<char, int> counts;
  const int n = 10000;
  for (int k = 0; k < n; ++k) ++counts[random_genome(rng, b).sensors[k % kSensorSlots].region_id];
  const double expected = static_cast<double>(n) / b.regions.size();
  ASSERT_EQ(counts.size(), b.regions.size());
  for (const auto& [id, c] : counts) {
    EXPECT_GT(c, expected / 5) << id;
    EXPECT_LT(c, expected * 5) << id;
  }
}

TEST(DesignSpace, CardinalityDegenerate) {
  SearchBounds b;
  b.regions = {{'A', 0, 0}};
  b.roll = b.pitch = b.yaw = {0, 0, 1};
  b.detectors = {kYolov3};
  b.fusions = {FusionAlgorithm::kEkf};
  const CardinalityReport r = cardinality(b, 1);
  EXPECT_EQ(r.per_sensor, 1);
  EXPECT_EQ(r.ordered_slots, 1);
  EXPECT_EQ(r.combinations, 1);
}

TEST(DesignSpace, CardinalityProductRule) {
  SearchBounds b;
  b.regions = {{'A', 1, 0}};
  b.roll = b.pitch = {0, 0, 1};
  b.yaw = {-1, 1, 1};
  const CardinalityReport r = cardinality(b, 1);
  EXPECT_EQ(r.ordered_slots, 90);
  EXPECT_EQ(r.combinations, 90);
  // Two sensors: ordered 6^2 and unordered C(6,2) times 15 choices.
  EXPECT_EQ(cardinality(b, 2).ordered_slots, 36 * 15);
  EXPECT_EQ(cardinality(b, 2).combinations, 15 * 15);
}

TEST(DesignSpace, CardinalityAudiOrderOfMagnitude) {
  const CardinalityReport r = cardinality(audi_bounds(), 4);
  const double log_ref = std::log10(1.24e26);
  const double log_comb = std::log10(r.combinations.convert_to<double>());
  EXPECT_LT(std::abs(log_comb - log_ref), 10.0) << r.combinations;
  EXPECT_GT(r.ordered_slots, r.combinations);
}

TEST(DesignSpace, GenomeDistance) {
  std::vector<double> z(kGenomeDim, 0.0), o(kGenomeDim, 1.0);
  EXPECT_EQ(genome_distance(z, z), 0.0);
  EXPECT_NEAR(genome_distance(z, o), std::sqrt(58.0), 1e-12);
  Rng rng(8);
  for (int k = 0; k < 50; ++k) {
    std::vector<double> a(kGenomeDim), c(kGenomeDim);
    for (int i = 0; i < kGenomeDim; ++i) {
      a[i] = rng.uniform();
      c[i] = rng.uniform();
    }
    EXPECT_EQ(genome_distance(a, c), genome_distance(c, a));
  }
  std::vector<double> short_vec(3, 0.0);
  EXPECT_THROW(genome_distance(z, short_vec), Error);
}

TEST(DesignSpace, LayoutHashIgnoresInactiveAndChoices) {
  const SearchBounds b = audi_bounds();
  DesignGenome g = industry_default_genome(b);
  const auto h = sensor_layout_hash(g);
  DesignGenome g2 = g;
  g2.detector_index = kRcnn;
  g2.fusion = FusionAlgorithm::kUkf;
  EXPECT_EQ(sensor_layout_hash(g2), h);
  g2.sensors[0].yaw_deg += 1;
  EXPECT_NE(sensor_layout_hash(g2), h);
  DesignGenome g3 = lower_genome(b);
  DesignGenome g4 = lower_genome(b);
  g4.sensors[1].yaw_deg = 10;  // inactive slot
  EXPECT_EQ(sensor_layout_hash(g3), sensor_layout_hash(g4));
}

TEST(DesignSpace, IndustryDefault) {
  const VehicleLayout layout = testing::audi_layout();
  const SearchBounds b = SearchBounds::from_layout(layout);
  const DesignGenome g = industry_default_genome(b);
  EXPECT_EQ(g.active_count(), 8);
  EXPECT_EQ(g.detector_index, kYolov3);
  EXPECT_EQ(g.fusion, FusionAlgorithm::kEkf);
  for (int s = 0; s < kSensorSlots; ++s) {
    const char r = g.sensors[s].region_id;
    if (s < kCameraSlots) {
      EXPECT_TRUE(r == 'D' || r == 'E') << s;
    } else {
      EXPECT_TRUE(r == 'A' || r == 'J') << s;
    }
    EXPECT_EQ(g.sensors[s].yaw_deg, 0);
  }
  const auto placed = place_sensors(g, layout, SensorSpec::default_camera(), SensorSpec::default_radar());
  EXPECT_EQ(placed.size(), 8u);
}

}  // namespace
}  // namespace percarch
