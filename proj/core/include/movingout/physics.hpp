#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "movingout/geometry.hpp"

namespace movingout {

inline constexpr double kAgentRadius = 0.025;
inline constexpr int kAgentCount = 2;

enum class SizeClass : std::uint8_t { kSmall = 0, kMedium = 1, kLarge = 2 };
enum class ShapeKind : std::uint8_t { kCircle = 0, kPolygon = 1, kStar = 2 };

const char* to_string(SizeClass s);
const char* to_string(ShapeKind s);
SizeClass size_class_from_string(const std::string& s);
ShapeKind shape_kind_from_string(const std::string& s);

struct ItemShape {
  ShapeKind kind = ShapeKind::kCircle;
  /// Corner count for polygons, point count for stars; unused for circles.
  int vertices = 0;
  friend bool operator==(const ItemShape&, const ItemShape&) = default;
};

struct ItemBody {
  Vec2 position;
  /// Orientation as a unit (cos, sin) pair.
  Vec2 facing{1.0, 0.0};
  ItemShape shape;
  SizeClass size = SizeClass::kSmall;
  double mass = 1.0;
  double footprint_radius = 0.03;

  double angle() const { return angle_of(facing); }
  friend bool operator==(const ItemBody&, const ItemBody&) = default;
};

struct AgentBody {
  Vec2 position;
  Vec2 facing{1.0, 0.0};
  /// Index of the held item, if any.
  std::optional<int> hold;

  double heading() const { return angle_of(facing); }
  friend bool operator==(const AgentBody&, const AgentBody&) = default;
};

/// Static geometry shared by every state of an episode.
struct Arena {
  std::vector<Rect> walls;
  std::vector<Rect> goals;
  friend bool operator==(const Arena&, const Arena&) = default;
};

/// Full physical snapshot. Value type; the arena is shared and immutable.
struct WorldState {
  std::array<AgentBody, kAgentCount> agents;
  std::vector<ItemBody> items;
  std::shared_ptr<const Arena> arena;

  const Arena& geometry() const;
  /// Agents currently attached to `item`, in agent order.
  std::vector<int> holders(int item) const;
};

/// Bitwise comparison of bodies and arena contents.
bool operator==(const WorldState& a, const WorldState& b);

struct ActionCommand {
  /// Signed travel distance along the heading for this step.
  double move = 0.0;
  /// Target heading as a unit (cos, sin) pair.
  Vec2 heading{1.0, 0.0};
  bool grasp = false;
  friend bool operator==(const ActionCommand&, const ActionCommand&) = default;
};

using JointAction = std::array<ActionCommand, kAgentCount>;

struct SizeFactors {
  double small = 1.0;
  double medium = 1.0;
  double large = 1.0;
  double operator[](SizeClass s) const;
};

struct PhysicsParams {
  double dt = 0.1;
  double base_speed = 0.3;
  double turn_rate_max = 2.0 * std::numbers::pi;
  SizeFactors solo_speed{1.0, 0.4, 0.0};
  SizeFactors duo_speed{1.0, 0.9, 0.8};
  double mass_speed_exponent = 0.5;
  /// Mass of a nominal small item; heavier items slow down.
  double reference_mass = 1.0;
  double wall_friction_factor = 0.5;
  double grab_radius = 0.05;
  /// Overlap below this depth counts as resolved contact.
  double penetration_tolerance = 1e-9;
  /// Separation below this distance counts as touching a wall.
  double contact_tolerance = 1e-6;

  double max_move() const { return base_speed * dt; }
  double max_turn() const { return turn_rate_max * dt; }
  /// Throws std::invalid_argument when a parameter is out of range.
  void validate() const;
};

/// Collision shape of an item in world coordinates.
Collider item_collider(const ItemBody& item);
Circle agent_collider(const AgentBody& agent);

/// Wall rectangles plus the four slabs bounding the unit arena.
std::vector<Rect> blocking_rects(const Arena& arena);

double mass_factor(const ItemBody& item, const PhysicsParams& params);

/// Gap between an agent's surface and an item's boundary (negative on overlap).
double grasp_gap(const AgentBody& agent, const ItemBody& item);

/// Point on the held item's boundary nearest the holder, in the item frame.
Vec2 grip_offset(const WorldState& state, int agent);

bool item_in_goal(const ItemBody& item, const Arena& arena);

/// True when the agent is touching a wall or the arena boundary; such an agent
/// moves at the wall friction factor on the next step.
bool wall_contact(const WorldState& state, int agent, const PhysicsParams& params = {});

enum class CollisionKind : std::uint8_t { kAgentWall, kAgentAgent, kItemWall, kItemItem, kAgentItem };
const char* to_string(CollisionKind k);

struct CollisionEntry {
  CollisionKind kind;
  int first;
  /// Wall index (boundary slabs follow the map walls), agent or item index.
  int second;
  double depth;
};

struct CollisionReport {
  std::vector<CollisionEntry> entries;
  bool empty() const { return entries.empty(); }
  double max_depth() const;
};

/// Lists every overlap deeper than `tolerance`. An agent and the item it holds
/// are not reported against each other.
CollisionReport check_collisions(const WorldState& state, double tolerance = 1e-9);

/// Toggle grasp for one agent: release when holding, otherwise attach to the
/// nearest item within grab radius (ties: lowest index). Out of range is a no-op.
WorldState resolve_grasp(const WorldState& state, int agent, bool toggle, const PhysicsParams& params = {});

/// Moves held items along with their holders. `before` is the state at the
/// start of the step and `integrated` has agents already moved by their own
/// commands; holders are re-attached to the moved item rigidly.
WorldState carry_update(const WorldState& before, const WorldState& integrated, const PhysicsParams& params = {});

struct StepContact {
  CollisionKind kind;
  int first;
  int second;
};

struct StepResult {
  WorldState state;
  /// Bodies that were projected out of contact or blocked this step.
  std::vector<StepContact> contacts;
};

/// Advances the world by one fixed step. Throws InvalidAction on malformed headings.
WorldState step(const WorldState& state, const JointAction& action, const PhysicsParams& params = {});
StepResult step_detailed(const WorldState& state, const JointAction& action, const PhysicsParams& params = {});

void validate_action(const ActionCommand& action);

}  // namespace movingout
