#pragma once

#include <string>

#include "movingout/maps.hpp"
#include "movingout/trajectory.hpp"

namespace fixtures {

using namespace movingout;

/// Open arena with one wall block in the middle and a small item.
inline MapSpec walled_map() {
  MapSpec m;
  m.id = 98;
  m.name = "walled";
  m.walls = {{{0.45, 0.45}, {0.55, 0.55}}};
  m.goals = {{{0.85, 0.85}, {0.98, 0.98}}};
  ItemSpec it;
  it.size = SizeClass::kSmall;
  it.mass = nominal_mass(SizeClass::kSmall);
  it.footprint_radius = nominal_footprint(SizeClass::kSmall);
  it.spawn = {{0.8, 0.2}, 0.0};
  m.items = {it};
  m.agent_spawns = {Pose{{0.1, 0.2}, 0.0}, Pose{{0.7, 0.1}, 0.0}};
  return m;
}

/// Hand-written trajectory: `ego_at(t)` and `partner_at(t)` give the agent
/// positions, actions are zero apart from a partner tag.
template <typename EgoFn, typename PartnerFn>
Trajectory scripted_stream(const std::string& id, const MapSpec& map, int length, EgoFn ego_at, PartnerFn partner_at,
                           double partner_tag) {
  Trajectory t;
  t.header.id = id;
  t.header.map = map;
  t.header.horizon = length;
  const WorldState s0 = initial_state(map);
  for (int i = 0; i <= length; ++i) {
    TrajectoryStep st;
    st.t = i;
    st.state = s0;
    st.state.agents[0].position = ego_at(i);
    st.state.agents[1].position = partner_at(i);
    if (i < length) {
      JointAction a{};
      a[1].move = partner_tag;
      st.action = a;
    }
    t.steps.push_back(st);
  }
  return t;
}

struct RecombineFixture {
  MapSpec map = walled_map();
  Trajectory tau;
  Trajectory other;
};

inline RecombineFixture recombine_fixture() {
  RecombineFixture f;
  f.tau = scripted_stream(
      "tau", f.map, 50, [](int t) { return Vec2{0.1 + 0.01 * t, 0.2}; }, [](int t) { return Vec2{0.7, 0.1 + 0.01 * t}; },
      0.01);
  // Ego shares a cell with tau only at t = 10 and t = 40; the partner cuts
  // through the wall block in between.
  f.other = scripted_stream(
      "other", f.map, 50,
      [](int t) { return Vec2{0.1 + 0.01 * t, t == 10 || t == 40 ? 0.2 : 0.4}; },
      [](int t) { return t >= 20 && t <= 25 ? Vec2{0.5, 0.5} : Vec2{0.3, 0.8}; }, -0.01);
  return f;
}

}  // namespace fixtures
