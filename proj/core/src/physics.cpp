#include "movingout/physics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "movingout/errors.hpp"

namespace movingout {

const char* to_string(SizeClass s) {
  switch (s) {
    case SizeClass::kSmall: return "small";
    case SizeClass::kMedium: return "medium";
    case SizeClass::kLarge: return "large";
  }
  return "?";
}

const char* to_string(ShapeKind s) {
  switch (s) {
    case ShapeKind::kCircle: return "circle";
    case ShapeKind::kPolygon: return "polygon";
    case ShapeKind::kStar: return "star";
  }
  return "?";
}

const char* to_string(CollisionKind k) {
  switch (k) {
    case CollisionKind::kAgentWall: return "agent-wall";
    case CollisionKind::kAgentAgent: return "agent-agent";
    case CollisionKind::kItemWall: return "item-wall";
    case CollisionKind::kItemItem: return "item-item";
    case CollisionKind::kAgentItem: return "agent-item";
  }
  return "?";
}

SizeClass size_class_from_string(const std::string& s) {
  if (s == "small") return SizeClass::kSmall;
  if (s == "medium" || s == "middle") return SizeClass::kMedium;
  if (s == "large") return SizeClass::kLarge;
  throw std::invalid_argument("unknown size class '" + s + "'");
}

ShapeKind shape_kind_from_string(const std::string& s) {
  if (s == "circle") return ShapeKind::kCircle;
  if (s == "polygon") return ShapeKind::kPolygon;
  if (s == "star") return ShapeKind::kStar;
  throw std::invalid_argument("unknown shape '" + s + "'");
}

double SizeFactors::operator[](SizeClass s) const {
  switch (s) {
    case SizeClass::kSmall: return small;
    case SizeClass::kMedium: return medium;
    case SizeClass::kLarge: return large;
  }
  return 0.0;
}

void PhysicsParams::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (dt != 0.1) throw std::invalid_argument("dt must be 0.1");
  if (!(base_speed > 0.0) || !(turn_rate_max > 0.0)) throw std::invalid_argument("speeds must be positive");
  for (const SizeFactors& f : {solo_speed, duo_speed}) {
    if (!unit(f.small) || !unit(f.medium) || !unit(f.large)) {
      throw std::invalid_argument("size speed factors must lie in [0,1]");
    }
  }
  if (!unit(wall_friction_factor) || !unit(mass_speed_exponent)) {
    throw std::invalid_argument("friction and mass exponent must lie in [0,1]");
  }
  if (!(grab_radius > 0.0) || !(reference_mass > 0.0)) throw std::invalid_argument("grab radius and mass must be positive");
}

const Arena& WorldState::geometry() const {
  static const Arena kEmpty{};
  return arena ? *arena : kEmpty;
}

std::vector<int> WorldState::holders(int item) const {
  std::vector<int> out;
  for (int k = 0; k < kAgentCount; ++k) {
    if (agents[k].hold == item) out.push_back(k);
  }
  return out;
}

bool operator==(const WorldState& a, const WorldState& b) {
  return a.agents == b.agents && a.items == b.items && a.geometry() == b.geometry();
}

Collider item_collider(const ItemBody& item) {
  switch (item.shape.kind) {
    case ShapeKind::kCircle:
      return Circle{item.position, item.footprint_radius};
    case ShapeKind::kPolygon:
    case ShapeKind::kStar:
      // Stars collide through their convex hull: the polygon of outer points.
      return regular_polygon(item.position, item.footprint_radius, std::max(3, item.shape.vertices), item.facing);
  }
  return Circle{item.position, item.footprint_radius};
}

Circle agent_collider(const AgentBody& agent) { return Circle{agent.position, kAgentRadius}; }

std::vector<Rect> blocking_rects(const Arena& arena) {
  std::vector<Rect> rects = arena.walls;
  rects.push_back({{-1.0, -1.0}, {0.0, 2.0}});
  rects.push_back({{1.0, -1.0}, {2.0, 2.0}});
  rects.push_back({{-1.0, -1.0}, {2.0, 0.0}});
  rects.push_back({{-1.0, 1.0}, {2.0, 2.0}});
  return rects;
}

double mass_factor(const ItemBody& item, const PhysicsParams& params) {
  return std::min(1.0, std::pow(params.reference_mass / item.mass, params.mass_speed_exponent));
}

double grasp_gap(const AgentBody& agent, const ItemBody& item) {
  return signed_distance(item_collider(item), agent.position) - kAgentRadius;
}

Vec2 grip_offset(const WorldState& state, int agent) {
  const AgentBody& a = state.agents.at(static_cast<std::size_t>(agent));
  if (!a.hold) return {};
  const ItemBody& item = state.items.at(static_cast<std::size_t>(*a.hold));
  const Vec2 world = closest_boundary_point(item_collider(item), a.position);
  return rotate_inverse(world - item.position, item.facing);
}

bool item_in_goal(const ItemBody& item, const Arena& arena) {
  const Collider shape = item_collider(item);
  return std::any_of(arena.goals.begin(), arena.goals.end(),
                     [&](const Rect& g) { return collider_inside_rect(shape, g); });
}

namespace {

std::vector<Collider> wall_colliders(const Arena& arena) {
  std::vector<Collider> out;
  for (const Rect& r : blocking_rects(arena)) out.emplace_back(to_polygon(r));
  return out;
}

bool wall_contact_impl(const Circle& agent, const std::vector<Collider>& walls, double tol) {
  return std::any_of(walls.begin(), walls.end(),
                     [&](const Collider& w) { return penetration(Collider{agent}, w).depth >= -tol; });
}

}  // namespace

bool wall_contact(const WorldState& state, int agent, const PhysicsParams& params) {
  return wall_contact_impl(agent_collider(state.agents.at(static_cast<std::size_t>(agent))),
                           wall_colliders(state.geometry()), params.contact_tolerance);
}

double CollisionReport::max_depth() const {
  double d = 0.0;
  for (const auto& e : entries) d = std::max(d, e.depth);
  return d;
}

CollisionReport check_collisions(const WorldState& state, double tolerance) {
  CollisionReport report;
  const auto walls = wall_colliders(state.geometry());
  std::vector<Collider> items;
  items.reserve(state.items.size());
  for (const auto& it : state.items) items.push_back(item_collider(it));

  for (int k = 0; k < kAgentCount; ++k) {
    const Collider a{agent_collider(state.agents[k])};
    for (std::size_t w = 0; w < walls.size(); ++w) {
      const double d = penetration(a, walls[w]).depth;
      if (d > tolerance) report.entries.push_back({CollisionKind::kAgentWall, k, static_cast<int>(w), d});
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (state.agents[k].hold == static_cast<int>(i)) continue;
      const double d = penetration(a, items[i]).depth;
      if (d > tolerance) report.entries.push_back({CollisionKind::kAgentItem, k, static_cast<int>(i), d});
    }
  }
  {
    const double d = penetration(agent_collider(state.agents[0]), agent_collider(state.agents[1])).depth;
    if (d > tolerance) report.entries.push_back({CollisionKind::kAgentAgent, 0, 1, d});
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t w = 0; w < walls.size(); ++w) {
      const double d = penetration(items[i], walls[w]).depth;
      if (d > tolerance) report.entries.push_back({CollisionKind::kItemWall, static_cast<int>(i), static_cast<int>(w), d});
    }
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      const double d = penetration(items[i], items[j]).depth;
      if (d > tolerance) report.entries.push_back({CollisionKind::kItemItem, static_cast<int>(i), static_cast<int>(j), d});
    }
  }
  return report;
}

void validate_action(const ActionCommand& action) {
  if (!std::isfinite(action.move)) throw Error(ErrorKind::kInvalidAction, "move distance is not finite");
  if (!std::isfinite(action.heading.x) || !std::isfinite(action.heading.y)) {
    throw Error(ErrorKind::kInvalidAction, "heading components are not finite");
  }
  const double n = norm(action.heading);
  if (std::abs(n - 1.0) > 1e-3) {
    throw Error(ErrorKind::kInvalidAction, "heading norm " + std::to_string(n) + " is not unit");
  }
}

WorldState resolve_grasp(const WorldState& state, int agent, bool toggle, const PhysicsParams& params) {
  if (!toggle) return state;
  WorldState out = state;
  AgentBody& a = out.agents.at(static_cast<std::size_t>(agent));
  if (a.hold) {
    a.hold.reset();
    return out;
  }
  int best = -1;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < state.items.size(); ++i) {
    if (state.holders(static_cast<int>(i)).size() >= 2) continue;
    const double gap = grasp_gap(a, state.items[i]);
    if (gap <= params.grab_radius && gap < best_gap) {
      best_gap = gap;
      best = static_cast<int>(i);
    }
  }
  if (best >= 0) a.hold = best;
  return out;
}

WorldState carry_update(const WorldState& before, const WorldState& integrated, const PhysicsParams& params) {
  WorldState out = integrated;
  for (std::size_t i = 0; i < before.items.size(); ++i) {
    const auto holders = before.holders(static_cast<int>(i));
    if (holders.empty()) continue;
    const ItemBody& item = before.items[i];
    if (holders.size() == 1) {
      const int k = holders.front();
      const Vec2 start = before.agents[k].position;
      const double factor = params.solo_speed[item.size] * mass_factor(item, params);
      if (factor == 0.0) {
        // A lone holder cannot translate this item; the holder stays pinned.
        out.agents[k].position = start;
        continue;
      }
      const Vec2 delta = (integrated.agents[k].position - start) * factor;
      out.items[i].position = item.position + delta;
      out.agents[k].position = start + delta;
      continue;
    }

    // Two holders: least-squares rigid motion mapping the grip points onto
    // their commanded positions.
    const double factor = params.duo_speed[item.size] * mass_factor(item, params);
    const Collider shape = item_collider(item);
    std::array<Vec2, 2> from{};
    std::array<Vec2, 2> to{};
    for (std::size_t h = 0; h < 2; ++h) {
      const int k = holders[h];
      from[h] = closest_boundary_point(shape, before.agents[k].position);
      to[h] = from[h] + (integrated.agents[k].position - before.agents[k].position) * factor;
    }
    const Vec2 from_c = (from[0] + from[1]) * 0.5;
    const Vec2 to_c = (to[0] + to[1]) * 0.5;
    double s_dot = 0.0;
    double s_cross = 0.0;
    for (std::size_t h = 0; h < 2; ++h) {
      s_dot += dot(from[h] - from_c, to[h] - to_c);
      s_cross += cross(from[h] - from_c, to[h] - to_c);
    }
    Vec2 rot{1.0, 0.0};
    if (s_cross != 0.0 || s_dot < 0.0) rot = normalized(Vec2{s_dot, s_cross});

    ItemBody& moved = out.items[i];
    moved.position = to_c + rotate(item.position - from_c, rot);
    if (rot != Vec2{1.0, 0.0}) moved.facing = normalized(rotate(item.facing, rot));
    for (int k : holders) out.agents[k].position = to_c + rotate(before.agents[k].position - from_c, rot);
  }
  return out;
}

namespace {

/// A rigidly moving group: a carried item with its holders, or a free agent.
struct Unit {
  int item = -1;
  std::vector<int> agents;
};

struct Resolver {
  const WorldState& before;
  WorldState& state;
  const PhysicsParams& params;
  std::vector<Collider> walls;
  std::vector<Unit> units;
  std::vector<StepContact>& contacts;

  std::vector<Collider> unit_shapes(const Unit& u) const {
    std::vector<Collider> out;
    if (u.item >= 0) out.push_back(item_collider(state.items[static_cast<std::size_t>(u.item)]));
    for (int k : u.agents) out.emplace_back(agent_collider(state.agents[k]));
    return out;
  }

  struct Deepest {
    Contact contact;
    StepContact what{CollisionKind::kAgentWall, 0, 0};
  };

  Deepest deepest_contact(std::size_t ui) const {
    const Unit& u = units[ui];
    const auto shapes = unit_shapes(u);
    Deepest best;
    best.contact.depth = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < shapes.size(); ++s) {
      const bool is_item = u.item >= 0 && s == 0;
      const int self = is_item ? u.item : u.agents[u.item >= 0 ? s - 1 : s];
      auto consider = [&](const Collider& obstacle, CollisionKind kind, int other) {
        const Contact c = penetration(shapes[s], obstacle);
        if (c.depth > best.contact.depth) best = {c, {kind, self, other}};
      };
      for (std::size_t w = 0; w < walls.size(); ++w) {
        consider(walls[w], is_item ? CollisionKind::kItemWall : CollisionKind::kAgentWall, static_cast<int>(w));
      }
      for (std::size_t i = 0; i < state.items.size(); ++i) {
        if (static_cast<int>(i) == u.item) continue;
        consider(item_collider(state.items[i]), is_item ? CollisionKind::kItemItem : CollisionKind::kAgentItem,
                 static_cast<int>(i));
      }
      for (int k = 0; k < kAgentCount; ++k) {
        if (std::find(u.agents.begin(), u.agents.end(), k) != u.agents.end()) continue;
        consider(Collider{agent_collider(state.agents[k])},
                 is_item ? CollisionKind::kAgentItem : CollisionKind::kAgentAgent, k);
      }
    }
    return best;
  }

  void translate_unit(const Unit& u, Vec2 offset) {
    if (u.item >= 0) state.items[static_cast<std::size_t>(u.item)].position += offset;
    for (int k : u.agents) state.agents[k].position += offset;
  }

  bool at_start(const Unit& u) const {
    if (u.item >= 0 && !(state.items[u.item] == before.items[u.item])) return false;
    return std::all_of(u.agents.begin(), u.agents.end(),
                       [&](int k) { return state.agents[k].position == before.agents[k].position; });
  }

  void revert(const Unit& u) {
    if (u.item >= 0) state.items[static_cast<std::size_t>(u.item)] = before.items[static_cast<std::size_t>(u.item)];
    for (int k : u.agents) state.agents[k].position = before.agents[k].position;
  }

  void run() {
    constexpr int kProjectionIterations = 8;
    const double tol = params.penetration_tolerance;
    for (std::size_t ui = 0; ui < units.size(); ++ui) {
      if (at_start(units[ui])) continue;
      bool resolved = false;
      for (int iter = 0; iter < kProjectionIterations; ++iter) {
        const Deepest d = deepest_contact(ui);
        if (d.contact.depth <= tol) {
          resolved = true;
          break;
        }
        contacts.push_back(d.what);
        translate_unit(units[ui], d.contact.normal * d.contact.depth);
      }
      if (!resolved && deepest_contact(ui).contact.depth > tol) revert(units[ui]);
    }
    // Reverting one group can re-create overlap with another that already
    // moved; keep reverting until the configuration is consistent. The all-
    // reverted configuration is the valid starting state, so this terminates.
    for (std::size_t pass = 0; pass <= units.size(); ++pass) {
      bool changed = false;
      for (std::size_t ui = 0; ui < units.size(); ++ui) {
        if (at_start(units[ui])) continue;
        if (deepest_contact(ui).contact.depth > tol) {
          revert(units[ui]);
          changed = true;
        }
      }
      if (!changed) break;
    }
  }
};

Vec2 turn_toward(Vec2 facing, Vec2 target, double max_turn) {
  const double delta = std::atan2(cross(facing, target), dot(facing, target));
  if (std::abs(delta) <= max_turn) return target;
  return normalized(rotate(facing, unit_from_angle(delta > 0.0 ? max_turn : -max_turn)));
}

}  // namespace

StepResult step_detailed(const WorldState& state, const JointAction& action, const PhysicsParams& params) {
  for (const auto& a : action) validate_action(a);

  WorldState before = state;
  for (int k = 0; k < kAgentCount; ++k) before = resolve_grasp(before, k, action[k].grasp, params);

  const auto walls = wall_colliders(state.geometry());
  for (int k = 0; k < kAgentCount; ++k) {
    const Vec2 h = action[k].heading;
    const double n = norm(h);
    const Vec2 target = n == 1.0 ? h : h / n;
    if (!(target == before.agents[k].facing)) {
      before.agents[k].facing = turn_toward(before.agents[k].facing, target, params.max_turn());
    }
  }

  WorldState integrated = before;
  for (int k = 0; k < kAgentCount; ++k) {
    const double move = std::clamp(action[k].move, -params.max_move(), params.max_move());
    if (move == 0.0) continue;
    const double friction =
        wall_contact_impl(agent_collider(state.agents[k]), walls, params.contact_tolerance) ? params.wall_friction_factor : 1.0;
    integrated.agents[k].position += before.agents[k].facing * (move * friction);
  }

  StepResult result{carry_update(before, integrated, params), {}};

  Resolver resolver{before, result.state, params, walls, {}, result.contacts};
  for (std::size_t i = 0; i < state.items.size(); ++i) {
    auto h = before.holders(static_cast<int>(i));
    if (!h.empty()) resolver.units.push_back({static_cast<int>(i), std::move(h)});
  }
  for (int k = 0; k < kAgentCount; ++k) {
    if (!before.agents[k].hold) resolver.units.push_back({-1, {k}});
  }
  resolver.run();
  return result;
}

WorldState step(const WorldState& state, const JointAction& action, const PhysicsParams& params) {
  return step_detailed(state, action, params).state;
}

}  // namespace movingout
