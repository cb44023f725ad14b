#pragma once

#include <memory>
#include <random>
#include <vector>

#include "movingout/env.hpp"
#include "movingout/maps.hpp"
#include "movingout/physics.hpp"
#include "movingout/trajectory.hpp"

namespace fixtures {

using namespace movingout;

inline ItemBody make_item(Vec2 pos, SizeClass size, ItemShape shape = {ShapeKind::kCircle, 0}, double mass = -1.0) {
  ItemBody it;
  it.position = pos;
  it.size = size;
  it.shape = shape;
  it.mass = mass > 0.0 ? mass : nominal_mass(size);
  it.footprint_radius = nominal_footprint(size);
  return it;
}

inline WorldState make_state(Vec2 a0, Vec2 a1, std::vector<ItemBody> items = {}, std::vector<Rect> walls = {},
                             std::vector<Rect> goals = {}) {
  WorldState s;
  s.agents[0].position = a0;
  s.agents[1].position = a1;
  s.items = std::move(items);
  s.arena = std::make_shared<const Arena>(Arena{std::move(walls), std::move(goals)});
  return s;
}

inline ActionCommand act(double move, double angle = 0.0, bool grasp = false) {
  ActionCommand a;
  a.move = move;
  a.heading = angle == 0.0 ? Vec2{1.0, 0.0} : unit_from_angle(angle);
  a.grasp = grasp;
  return a;
}

inline ActionCommand random_action(std::mt19937_64& rng, double grasp_p = 0.05) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  std::bernoulli_distribution g(grasp_p);
  ActionCommand a;
  a.move = 0.03 * u(rng);
  a.heading = unit_from_angle(ang(rng));
  a.grasp = g(rng);
  return a;
}

/// Episode driven by uniformly random actions, recorded step by step.
inline Trajectory fuzz_trajectory(int map_id, std::uint64_t seed, int horizon = 300, bool randomize = false) {
  EpisodeConfig cfg;
  cfg.map = builtin_map(map_id);
  cfg.seed = seed;
  cfg.horizon = horizon;
  cfg.randomize_attributes = randomize;
  const EpisodeConfig played{resolved_map(cfg), seed, horizon};
  Episode ep(played);
  Trajectory traj = begin_trajectory(played, ep.reset().state, "fuzz-" + std::to_string(map_id) + "-" + std::to_string(seed));
  std::mt19937_64 rng(seed * 7919 + static_cast<std::uint64_t>(map_id));
  bool done = ep.done();
  while (!done) {
    const JointAction a{random_action(rng, 0.1), random_action(rng, 0.1)};
    const StepOutcome& out = ep.step(a[0], a[1]);
    record_step(traj, a, out);
    done = out.done;
  }
  return traj;
}

/// States in order; actions default to zero.
inline Trajectory trajectory_of(std::vector<WorldState> states, std::vector<JointAction> actions = {}) {
  Trajectory t;
  for (std::size_t i = 0; i < states.size(); ++i) {
    TrajectoryStep s;
    s.t = static_cast<int>(i);
    s.state = states[i];
    if (i + 1 < states.size()) s.action = i < actions.size() ? actions[i] : JointAction{};
    t.steps.push_back(std::move(s));
  }
  return t;
}

}  // namespace fixtures
