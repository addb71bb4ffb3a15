#include "percarch/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "percarch/error.hpp"
#include "support.hpp"

namespace percarch {
namespace {

CycleSpec straight_spec(double heading) {
  CycleSpec s;
  s.id = 0;
  s.feature = Feature::kAcc;
  s.duration = 10.0;
  s.dt = 0.05;
  const Vec2 dir{std::cos(heading), std::sin(heading)};
  s.ego_waypoints = {{0, 0, 10.0}, {dir.x * 500, dir.y * 500, 10.0}};
  s.lane = {3.5, {{1e9, true, true}}};
  ActorScript a;
  a.actor_id = 1;
  a.s0 = 10.0;
  a.v0 = 10.0;
  s.actors = {a};
  return s;
}

class ScenarioSuite : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { cycles_ = new std::vector<DriveCycle>(testing::short_cycles(60.0)); }
  static void TearDownTestSuite() {
    delete cycles_;
    cycles_ = nullptr;
  }
  static std::vector<DriveCycle>* cycles_;
};
std::vector<DriveCycle>* ScenarioSuite::cycles_ = nullptr;

TEST_F(ScenarioSuite, TwentyCyclesFivePerFeature) {
  ASSERT_EQ(cycles_->size(), 20u);
  std::map<Feature, int> n;
  std::map<Feature, int> bad_weather;
  for (const auto& c : *cycles_) {
    ++n[c.feature()];
    if (c.weather() < 1.0) ++bad_weather[c.feature()];
  }
  for (Feature f : kAllFeatures) {
    EXPECT_EQ(n[f], 5);
    EXPECT_EQ(bad_weather[f], 2);
  }
}

TEST_F(ScenarioSuite, FirstAccCycleHasLeadAt30m) {
  const DriveCycle& c = cycles_->front();
  ASSERT_EQ(c.feature(), Feature::kAcc);
  const GroundTruthFrame f = c.frame_at(0.0);
  const auto lead = std::find_if(f.actors.begin(), f.actors.end(),
                                 [](const ActorTruth& a) { return std::abs(a.position.x) < 0.5; });
  ASSERT_NE(lead, f.actors.end());
  EXPECT_NEAR(lead->position.y, 30.0, 1e-9);
  EXPECT_NEAR(lead->position.x, 0.0, 1e-9);
}

TEST_F(ScenarioSuite, EveryCyclePassesScreening) {
  CycleParams p;
  const VehicleModel& m = vehicle_by_key("audi_tt");
  p.ego_length = m.dims.length;
  p.ego_width = m.dims.width;
  for (const auto& c : *cycles_) {
    const CycleCheck check = check_cycle(c, p);
    EXPECT_TRUE(check.ok()) << c.id() << ": " << (check.ok() ? "" : check.problems.front());
  }
}

TEST_F(ScenarioSuite, ActorMotionIsContinuous) {
  for (const auto& c : *cycles_) {
    const double dt = c.dt();
    for (const ActorScript& s : c.spec().actors) {
      Vec2 prev = c.actor_world_position(s, 0.0);
      for (int k = 1; k < c.step_count(); ++k) {
        const Vec2 p = c.actor_world_position(s, c.step_time(k));
        // 40 m/s and 10 m/s^2 bound every scripted speed and acceleration.
        EXPECT_LE((p - prev).norm(), (40.0 + 10.0 * dt) * dt) << c.id() << "/" << s.actor_id;
        prev = p;
      }
    }
  }
}

TEST_F(ScenarioSuite, EgoFrameIsIsometry) {
  for (const auto& c : *cycles_) {
    for (double t : {0.0, 13.3, 41.0}) {
      const GroundTruthFrame f = c.frame_at(t);
      const auto& sc = c.spec().actors;
      for (std::size_t i = 0; i < sc.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
          const double world = (c.actor_world_position(sc[i], t) - c.actor_world_position(sc[j], t)).norm();
          const double ego = (f.actors[i].position - f.actors[j].position).norm();
          EXPECT_NEAR(world, ego, 1e-9);
        }
      }
    }
  }
}

TEST_F(ScenarioSuite, SameSeedSameCycles) {
  const auto again = testing::short_cycles(60.0);
  ASSERT_EQ(again.size(), cycles_->size());
  for (std::size_t i = 0; i < again.size(); ++i) {
    EXPECT_EQ(again[i].spec().actors, (*cycles_)[i].spec().actors);
    EXPECT_EQ(again[i].weather(), (*cycles_)[i].weather());
  }
}

TEST_F(ScenarioSuite, HeldOutCyclesAreDisjoint) {
  CycleParams p;
  Rng rng(1234);
  const auto test = test_cycles(p, rng);
  ASSERT_EQ(test.size(), 20u);
  std::map<Feature, int> n;
  for (const auto& c : test) {
    ++n[c.feature()];
    EXPECT_GE(c.id(), 100);
  }
  for (Feature f : kAllFeatures) EXPECT_EQ(n[f], 5);
  for (const auto& a : test) {
    for (const auto& b : *cycles_) {
      for (const auto& sa : a.spec().actors) {
        for (const auto& sb : b.spec().actors) EXPECT_FALSE(sa == sb);
      }
    }
  }
  Rng rng2(1234);
  const auto again = test_cycles(p, rng2);
  for (std::size_t i = 0; i < test.size(); ++i) EXPECT_EQ(test[i].spec().actors, again[i].spec().actors);
}

TEST(Scenario, FrameAtStartIsFirstWaypoint) {
  const DriveCycle c(straight_spec(0.3));
  const GroundTruthFrame f = c.frame_at(0.0);
  EXPECT_NEAR(f.ego_position.x, 0.0, 1e-12);
  EXPECT_NEAR(f.ego_position.y, 0.0, 1e-12);
  EXPECT_NEAR(f.ego_speed, 10.0, 1e-12);
}

TEST(Scenario, ActorAheadWhileHeadingNorth) {
  const DriveCycle c(straight_spec(kPi / 2));
  const GroundTruthFrame f = c.frame_at(2.0);
  ASSERT_EQ(f.actors.size(), 1u);
  EXPECT_NEAR(f.actors[0].position.x, 0.0, 1e-9);
  EXPECT_NEAR(f.actors[0].position.y, 10.0, 1e-9);
  EXPECT_NEAR(f.actors[0].velocity.y, 0.0, 1e-9);
  EXPECT_NEAR(f.actors[0].ground_velocity.y, 10.0, 1e-9);
}

TEST(Scenario, CoLocatedActorIsAtOrigin) {
  CycleSpec s = straight_spec(-1.0);
  s.actors[0].s0 = 0.0;
  const DriveCycle c(s);
  const GroundTruthFrame f = c.frame_at(5.0);
  EXPECT_NEAR(f.actors[0].position.x, 0.0, 1e-9);
  EXPECT_NEAR(f.actors[0].position.y, 0.0, 1e-9);
}

TEST(Scenario, TimeDomain) {
  const DriveCycle c(straight_spec(0.0));
  EXPECT_NO_THROW(c.frame_at(10.0));
  try {
    c.frame_at(10.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTimeDomain);
  }
  EXPECT_THROW(c.frame_at(-0.1), Error);
}

TEST(Scenario, InvalidSpecRejected) {
  CycleSpec s = straight_spec(0.0);
  s.weather = 0.0;
  EXPECT_THROW(DriveCycle{s}, Error);
  s = straight_spec(0.0);
  s.actors.clear();  // ACC needs an actor
  EXPECT_THROW(DriveCycle{s}, Error);
}

TEST(Scenario, ScriptPhasesAndManeuvers) {
  ActorScript a;
  a.s0 = 5.0;
  a.v0 = 10.0;
  a.phases = {{2.0, -2.0}};
  a.maneuvers = {{1.0, 3.5, 1.0}};
  const FrenetState at3 = evaluate_script(a, 3.0);
  EXPECT_NEAR(at3.v, 6.0, 1e-12);
  EXPECT_NEAR(at3.s, 5.0 + 10.0 * 2.0 - 0.5 * 2.0 * 4.0 + 6.0, 1e-12);
  EXPECT_NEAR(at3.d, 2.0, 1e-12);
  EXPECT_NEAR(evaluate_script(a, 10.0).d, 3.5, 1e-12);
  // Braking never reverses the vehicle.
  a.phases = {{20.0, -5.0}};
  EXPECT_GE(evaluate_script(a, 10.0).v, 0.0);
  EXPECT_NEAR(evaluate_script(a, 10.0).s, 5.0 + 10.0, 1e-9);
}

TEST(Scenario, LaneMarkingsFollowSegments) {
  CycleSpec s = straight_spec(0.0);
  s.lane.segments = {{50.0, true, false}, {1e9, false, true}};
  const DriveCycle c(s);
  EXPECT_TRUE(c.frame_at(1.0).lane.left_present);
  EXPECT_FALSE(c.frame_at(1.0).lane.right_present);
  EXPECT_FALSE(c.frame_at(8.0).lane.left_present);
  EXPECT_TRUE(c.frame_at(8.0).lane.right_present);
}

TEST(Scenario, GroundTruthTraceRows) {
  const DriveCycle c(straight_spec(0.0));
  const auto rows = ground_truth_trace(c);
  EXPECT_EQ(static_cast<int>(rows.size()), c.step_count());
  EXPECT_NEAR(rows.front().y, 10.0, 1e-9);
}

}  // namespace
}  // namespace percarch
