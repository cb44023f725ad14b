#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "movingout/errors.hpp"

using namespace movingout;
using fixtures::act;
using fixtures::make_item;
using fixtures::make_state;

TEST(PhysicsStep, FreeMotionAlongHeading) {
  const WorldState s = make_state({0.5, 0.5}, {0.2, 0.2});
  const WorldState n = step(s, {act(0.02), act(0.0)});
  EXPECT_DOUBLE_EQ(n.agents[0].position.x, 0.52);
  EXPECT_DOUBLE_EQ(n.agents[0].position.y, 0.5);
}

TEST(PhysicsStep, ZeroActionIsIdentity) {
  WorldState s = make_state({0.5, 0.5}, {0.2, 0.2}, {make_item({0.8, 0.8}, SizeClass::kSmall)});
  s.agents[0].facing = unit_from_angle(1.0);
  ActionCommand keep;
  keep.heading = s.agents[0].facing;
  EXPECT_EQ(step(s, {keep, act(0.0)}), s);
}

TEST(PhysicsStep, WallClampAndFriction) {
  const WorldState s = make_state({0.03, 0.5}, {0.5, 0.5});
  const WorldState n = step(s, {act(-0.05), act(0.0)});
  EXPECT_NEAR(n.agents[0].position.x, kAgentRadius, 1e-12);
  EXPECT_DOUBLE_EQ(n.agents[0].position.y, 0.5);
  EXPECT_FALSE(wall_contact(s, 0));
  EXPECT_TRUE(wall_contact(n, 0));
  // Touching the wall: the next step moves at half speed.
  const WorldState m = step(n, {act(0.02), act(0.0)});
  EXPECT_NEAR(m.agents[0].position.x, kAgentRadius + 0.01, 1e-12);
}

TEST(PhysicsStep, MoveIsClampedToMaximum) {
  const WorldState s = make_state({0.5, 0.5}, {0.2, 0.2});
  const WorldState n = step(s, {act(1.0), act(0.0)});
  EXPECT_NEAR(n.agents[0].position.x, 0.53, 1e-12);
}

TEST(PhysicsStep, TurnRateLimitsHeadingChange) {
  const WorldState s = make_state({0.5, 0.5}, {0.2, 0.2});
  const WorldState n = step(s, {act(0.0, std::numbers::pi), act(0.0)});
  EXPECT_NEAR(std::abs(n.agents[0].heading()), 2.0 * std::numbers::pi * 0.1, 1e-12);
}

TEST(PhysicsStep, InvalidHeadingThrows) {
  const WorldState s = make_state({0.5, 0.5}, {0.2, 0.2});
  ActionCommand bad;
  bad.heading = {1.0, 0.1};
  try {
    step(s, {bad, act(0.0)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidAction);
  }
  bad.heading = {std::nan(""), 0.0};
  EXPECT_THROW(step(s, {bad, act(0.0)}), Error);
}

TEST(CheckCollisions, SeparatedAgentsReportNothing) {
  EXPECT_TRUE(check_collisions(make_state({0.4, 0.5}, {0.5, 0.5})).empty());
}

TEST(CheckCollisions, AgentIntoLeftBoundary) {
  const CollisionReport r = check_collisions(make_state({0.01, 0.5}, {0.5, 0.5}));
  ASSERT_EQ(r.entries.size(), 1u);
  EXPECT_EQ(r.entries[0].kind, CollisionKind::kAgentWall);
  EXPECT_NEAR(r.entries[0].depth, 0.015, 1e-12);
}

TEST(CheckCollisions, SquareItemAgainstWall) {
  ItemBody sq = make_item({0.04, 0.5}, SizeClass::kLarge, {ShapeKind::kPolygon, 4});
  sq.footprint_radius = 0.05 * std::sqrt(2.0);
  sq.facing = unit_from_angle(std::numbers::pi / 4);
  const CollisionReport r = check_collisions(make_state({0.5, 0.2}, {0.5, 0.8}, {sq}));
  ASSERT_EQ(r.entries.size(), 1u);
  EXPECT_EQ(r.entries[0].kind, CollisionKind::kItemWall);
  EXPECT_NEAR(r.entries[0].depth, 0.01, 1e-12);
}

TEST(ResolveGrasp, NoToggleIsIdentity) {
  const WorldState s = make_state({0.5, 0.5}, {0.2, 0.2}, {make_item({0.56, 0.5}, SizeClass::kSmall)});
  EXPECT_EQ(resolve_grasp(s, 0, false), s);
}

TEST(ResolveGrasp, AttachesWithinRadius) {
  // Boundary 0.01 away from the agent surface.
  const double x = 0.5 + kAgentRadius + 0.01 + nominal_footprint(SizeClass::kSmall);
  const WorldState s = make_state({0.5, 0.5}, {0.2, 0.2}, {make_item({x, 0.5}, SizeClass::kSmall)});
  const WorldState n = resolve_grasp(s, 0, true);
  ASSERT_TRUE(n.agents[0].hold.has_value());
  EXPECT_EQ(*n.agents[0].hold, 0);
  // Grip point lies on the item boundary.
  const Vec2 g = grip_offset(n, 0);
  EXPECT_NEAR(norm(g), nominal_footprint(SizeClass::kSmall), 1e-6);
}

TEST(ResolveGrasp, OutOfRangeIsNoop) {
  const WorldState s = make_state({0.5, 0.5}, {0.2, 0.2}, {make_item({0.7, 0.5}, SizeClass::kSmall)});
  EXPECT_EQ(resolve_grasp(s, 0, true), s);
}

TEST(ResolveGrasp, NearestThenLowestIndex) {
  const double r = nominal_footprint(SizeClass::kSmall);
  const double d = kAgentRadius + 0.02 + r;
  const WorldState s = make_state({0.5, 0.5}, {0.2, 0.2},
                                  {make_item({0.5 + d, 0.5}, SizeClass::kSmall), make_item({0.5 - d, 0.5}, SizeClass::kSmall),
                                   make_item({0.5, 0.5 + d - 0.01}, SizeClass::kSmall)});
  EXPECT_EQ(*resolve_grasp(s, 0, true).agents[0].hold, 2);
  WorldState tie = s;
  tie.items.pop_back();
  EXPECT_EQ(*resolve_grasp(tie, 0, true).agents[0].hold, 0);
}

TEST(ResolveGrasp, ReleaseKeepsOtherHolder) {
  WorldState s = make_state({0.4, 0.5}, {0.6, 0.5}, {make_item({0.5, 0.5}, SizeClass::kLarge)});
  s.agents[0].hold = 0;
  s.agents[1].hold = 0;
  const WorldState n = resolve_grasp(s, 0, true);
  EXPECT_FALSE(n.agents[0].hold.has_value());
  EXPECT_EQ(n.agents[1].hold, 0);
}

namespace {

// Large item at the center held from both sides, agents touching its boundary.
WorldState duo_fixture(double mass = 1.0) {
  const double r = nominal_footprint(SizeClass::kLarge);
  WorldState s = make_state({0.5 - r - kAgentRadius, 0.5}, {0.5 + r + kAgentRadius, 0.5},
                            {make_item({0.5, 0.5}, SizeClass::kLarge, {ShapeKind::kCircle, 0}, mass)});
  s.agents[0].hold = 0;
  s.agents[1].hold = 0;
  return s;
}

}  // namespace

TEST(CarryUpdate, DuoEqualDisplacementTranslates) {
  WorldState up = duo_fixture();
  up.agents[0].facing = unit_from_angle(std::numbers::pi / 2);
  up.agents[1].facing = up.agents[0].facing;
  ActionCommand a;
  a.move = 0.02;
  a.heading = up.agents[0].facing;
  const WorldState m = step(up, {a, a});
  const double expected = 0.02 * PhysicsParams{}.duo_speed.large;
  EXPECT_NEAR(m.items[0].position.y - 0.5, expected * up.agents[0].facing.y, 1e-12);
  EXPECT_NEAR(m.items[0].position.x, 0.5, 1e-12);
  EXPECT_NEAR(m.items[0].angle(), 0.0, 1e-12);
}

TEST(CarryUpdate, MassSlowsDuoCarry) {
  WorldState light = duo_fixture(1.0);
  WorldState heavy = duo_fixture(4.0);
  const JointAction a{act(0.02), act(0.02)};
  const double dl = step(light, a).items[0].position.x - 0.5;
  const double dh = step(heavy, a).items[0].position.x - 0.5;
  EXPECT_NEAR(dh, dl * 0.5, 1e-12);
}

TEST(CarryUpdate, OppositeTangentialGripsRotateInPlace) {
  WorldState s = duo_fixture();
  const Vec2 up = unit_from_angle(std::numbers::pi / 2);
  s.agents[0].facing = up;
  s.agents[1].facing = -up;
  ActionCommand a0;
  a0.move = 0.02;
  a0.heading = up;
  ActionCommand a1 = a0;
  a1.heading = -up;
  const WorldState n = step(s, {a0, a1});
  // Two-point rigid fit: the rotation is the angle between the segment joining
  // the grips before and after the displacement.
  const double f = PhysicsParams{}.duo_speed.large;
  const double r = nominal_footprint(SizeClass::kLarge);
  const Vec2 before{2 * r, 0.0};
  const Vec2 after{2 * r, -2 * 0.02 * f};
  const double theta = std::atan2(cross(before, after), dot(before, after));
  EXPECT_NEAR(n.items[0].position.x, 0.5, 1e-12);
  EXPECT_NEAR(n.items[0].position.y, 0.5, 1e-12);
  EXPECT_NEAR(n.items[0].angle(), theta, 1e-12);
}

TEST(CarryUpdate, SoloLargeItemDoesNotTranslate) {
  const double r = nominal_footprint(SizeClass::kLarge);
  WorldState s = make_state({0.5 - r - kAgentRadius, 0.5}, {0.2, 0.2}, {make_item({0.5, 0.5}, SizeClass::kLarge)});
  s.agents[0].hold = 0;
  const WorldState n = step(s, {act(0.03), act(0.0)});
  EXPECT_EQ(n.items[0], s.items[0]);
  EXPECT_EQ(n.agents[0].position, s.agents[0].position);
  const WorldState back = step(s, {act(-0.03), act(0.0)});
  EXPECT_EQ(back.items[0], s.items[0]);
}

TEST(CarryUpdate, SoloSmallAndMediumFollowHolder) {
  for (SizeClass size : {SizeClass::kSmall, SizeClass::kMedium}) {
    const double r = nominal_footprint(size);
    WorldState s = make_state({0.3, 0.5}, {0.2, 0.2}, {make_item({0.3 + r + kAgentRadius, 0.5}, size)});
    s.agents[0].hold = 0;
    const WorldState n = step(s, {act(0.02), act(0.0)});
    const PhysicsParams p;
    const double expected = 0.02 * p.solo_speed[size] * mass_factor(s.items[0], p);
    EXPECT_NEAR(n.items[0].position.x - s.items[0].position.x, expected, 1e-12);
    EXPECT_NEAR(n.agents[0].position.x - 0.3, expected, 1e-12);
  }
}

TEST(CarryUpdate, CarriedItemStopsAtWall) {
  const double r = nominal_footprint(SizeClass::kSmall);
  WorldState s = make_state({0.9, 0.5}, {0.2, 0.2}, {make_item({0.9 + r + kAgentRadius, 0.5}, SizeClass::kSmall)},
                            {Rect{{0.965, 0.0}, {1.0, 1.0}}});
  s.agents[0].hold = 0;
  WorldState n = s;
  for (int i = 0; i < 10; ++i) n = step(n, {act(0.03), act(0.0)});
  EXPECT_LE(n.items[0].position.x + r, 0.965 + 1e-9);
  EXPECT_TRUE(check_collisions(n).empty());
}

// ---- properties ----

TEST(PhysicsProperties, DeterministicAcrossRuns) {
  const MapSpec map = builtin_map(8);
  for (int run = 0; run < 2; ++run) {
    std::mt19937_64 rng_a(17);
    std::mt19937_64 rng_b(17);
    WorldState a = initial_state(map);
    WorldState b = initial_state(map);
    for (int t = 0; t < 500; ++t) {
      a = step(a, {fixtures::random_action(rng_a), fixtures::random_action(rng_a)});
      b = step(b, {fixtures::random_action(rng_b), fixtures::random_action(rng_b)});
      ASSERT_EQ(a, b) << "t=" << t;
    }
  }
}

TEST(PhysicsProperties, FuzzContainmentAndCardinality) {
  std::mt19937_64 rng(2024);
  int total = 0;
  for (int id = 1; id <= kBuiltinMapCount; ++id) {
    WorldState s = initial_state(builtin_map(id));
    for (int t = 0; t < 850; ++t, ++total) {
      s = step(s, {fixtures::random_action(rng, 0.1), fixtures::random_action(rng, 0.1)});
      for (const AgentBody& a : s.agents) {
        ASSERT_TRUE(a.position.x >= 0.0 && a.position.x <= 1.0 && a.position.y >= 0.0 && a.position.y <= 1.0);
      }
      for (std::size_t i = 0; i < s.items.size(); ++i) {
        const ItemBody& it = s.items[i];
        ASSERT_TRUE(it.position.x >= 0.0 && it.position.x <= 1.0 && it.position.y >= 0.0 && it.position.y <= 1.0);
        ASSERT_LE(s.holders(static_cast<int>(i)).size(), 2u);
        ASSERT_NEAR(norm(it.facing), 1.0, 1e-9);
      }
      ASSERT_LE(check_collisions(s, 1e-6).max_depth(), 1e-6) << "map " << id << " t=" << t;
    }
  }
  EXPECT_GE(total, 10000);
}

TEST(PhysicsProperties, ForbiddenMotionKeepsPriorPose) {
  // A carried item already touching a wall cannot advance into it.
  const double r = nominal_footprint(SizeClass::kSmall);
  WorldState s = make_state({0.5, 0.5}, {0.2, 0.2}, {make_item({0.5 + r + kAgentRadius, 0.5}, SizeClass::kSmall)},
                            {Rect{{0.5 + 2 * r + kAgentRadius, 0.0}, {1.0, 1.0}}});
  s.agents[0].hold = 0;
  const WorldState n = step(s, {act(0.03), act(0.0)});
  EXPECT_EQ(n.items[0], s.items[0]);
  EXPECT_EQ(n.agents[0].position, s.agents[0].position);
}

TEST(PhysicsProperties, SpeedNonIncreasingInSizeAndMass) {
  double last = std::numeric_limits<double>::infinity();
  for (SizeClass size : {SizeClass::kSmall, SizeClass::kMedium, SizeClass::kLarge}) {
    for (double m : {0.5, 1.0, 2.0, 4.0}) {
      const double r = nominal_footprint(size);
      WorldState s = make_state({0.3, 0.5}, {0.2, 0.2},
                                {make_item({0.3 + r + kAgentRadius, 0.5}, size, {ShapeKind::kCircle, 0}, m)});
      s.agents[0].hold = 0;
      const double d = step(s, {act(0.03), act(0.0)}).items[0].position.x - s.items[0].position.x;
      EXPECT_LE(d, last + 1e-15);
      last = d;
    }
  }
  EXPECT_EQ(last, 0.0);
}
