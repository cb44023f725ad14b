#include <numbers>

#include "movingout/errors.hpp"
#include "movingout/maps.hpp"

namespace movingout {

namespace {

constexpr double kPi = std::numbers::pi;

Rect rect(double x0, double y0, double x1, double y1) { return {{x0, y0}, {x1, y1}}; }

ItemSpec item(SizeClass size, ItemShape shape, double x, double y, double angle = 0.0) {
  ItemSpec s;
  s.shape = shape;
  s.size = size;
  s.mass = nominal_mass(size);
  s.footprint_radius = nominal_footprint(size);
  s.spawn = {{x, y}, angle};
  s.randomization = default_attribute_ranges();
  return s;
}

const ItemShape kCircle{ShapeKind::kCircle, 0};
const ItemShape kSquare{ShapeKind::kPolygon, 4};
const ItemShape kPentagon{ShapeKind::kPolygon, 5};
const ItemShape kHexagon{ShapeKind::kPolygon, 6};
const ItemShape kStar{ShapeKind::kStar, 5};

constexpr SizeClass S = SizeClass::kSmall;
constexpr SizeClass M = SizeClass::kMedium;
constexpr SizeClass L = SizeClass::kLarge;

MapSpec make(int id, const char* name, MapCategory cat) {
  MapSpec m;
  m.id = id;
  m.name = name;
  m.category = cat;
  return m;
}

// Coordinates: arena is [0,1]^2 with y pointing up. Agent 0 is the pink
// agent, agent 1 the blue one.
MapSpec build(int id) {
  switch (id) {
    case 1: {
      MapSpec m = make(1, "Hand Off", MapCategory::kCoordination);
      // A divider with one corridor too narrow for two agents to pass.
      m.walls = {rect(0.45, 0.0, 0.55, 0.455), rect(0.45, 0.545, 0.55, 1.0)};
      m.goals = {rect(0.04, 0.3, 0.26, 0.7)};
      m.items = {item(S, kCircle, 0.82, 0.25), item(S, kSquare, 0.85, 0.5, kPi / 4), item(S, kStar, 0.82, 0.75)};
      m.agent_spawns = {Pose{{0.35, 0.5}, 0.0}, Pose{{0.68, 0.5}, 0.0}};
      m.notes = "3 small items behind a single 0.09-wide corridor; goal on the pink side.";
      return m;
    }
    case 2: {
      MapSpec m = make(2, "Pass Or Split", MapCategory::kCoordination);
      // Four lanes: two narrow outer lanes, two wide inner lanes.
      m.walls = {rect(0.35, 0.12, 0.65, 0.17), rect(0.35, 0.47, 0.65, 0.53), rect(0.35, 0.83, 0.65, 0.88)};
      m.goals = {rect(0.04, 0.25, 0.22, 0.75)};
      m.items = {item(L, kHexagon, 0.83, 0.5), item(S, kCircle, 0.86, 0.1), item(S, kPentagon, 0.86, 0.9)};
      m.agent_spawns = {Pose{{0.72, 0.3}, 0.0}, Pose{{0.72, 0.7}, 0.0}};
      m.notes = "1 large and 2 small items; lanes of width 0.12, 0.30, 0.30, 0.12.";
      return m;
    }
    case 3: {
      MapSpec m = make(3, "Efficient Routes", MapCategory::kCoordination);
      m.walls = {rect(0.38, 0.38, 0.62, 0.62), rect(0.32, 0.78, 0.37, 1.0), rect(0.0, 0.62, 0.14, 0.66),
                 rect(0.75, 0.15, 0.8, 0.45)};
      m.goals = {rect(0.04, 0.72, 0.28, 0.96)};
      m.items = {item(S, kCircle, 0.88, 0.3), item(S, kPentagon, 0.7, 0.82), item(S, kStar, 0.5, 0.2),
                 item(S, kSquare, 0.88, 0.62, kPi / 4)};
      m.agent_spawns = {Pose{{0.2, 0.3}, 0.0}, Pose{{0.6, 0.88}, kPi}};
      m.notes = "4 small items; several routes around a central block.";
      return m;
    }
    case 4: {
      MapSpec m = make(4, "Priority Pick", MapCategory::kCoordination);
      m.walls = {rect(0.45, 0.0, 0.5, 0.3), rect(0.45, 0.7, 0.5, 1.0)};
      m.goals = {rect(0.76, 0.3, 0.96, 0.7)};
      m.items = {item(S, kCircle, 0.6, 0.5), item(M, kSquare, 0.15, 0.5, kPi / 4), item(S, kStar, 0.3, 0.15),
                 item(S, kHexagon, 0.3, 0.85)};
      m.agent_spawns = {Pose{{0.3, 0.38}, 0.0}, Pose{{0.3, 0.62}, 0.0}};
      m.notes = "1 medium and 3 small items; one small item already near the goal.";
      return m;
    }
    case 5: {
      MapSpec m = make(5, "Corner Decision", MapCategory::kAwareness);
      m.walls = {rect(0.45, 0.7, 0.55, 1.0), rect(0.45, 0.0, 0.55, 0.3)};
      m.goals = {rect(0.74, 0.74, 0.96, 0.96), rect(0.04, 0.04, 0.26, 0.26)};
      m.items = {item(L, kCircle, 0.5, 0.5), item(M, kPentagon, 0.25, 0.7), item(S, kSquare, 0.75, 0.3, kPi / 4)};
      m.agent_spawns = {Pose{{0.33, 0.45}, 0.0}, Pose{{0.67, 0.55}, kPi}};
      m.notes = "1 large, 1 medium, 1 small item; goals in the upper-right and lower-left corners.";
      return m;
    }
    case 6: {
      MapSpec m = make(6, "Distance Priority", MapCategory::kAwareness);
      m.walls = {rect(0.1, 0.6, 0.36, 0.64), rect(0.64, 0.6, 0.9, 0.64)};
      m.goals = {rect(0.3, 0.04, 0.7, 0.22)};
      m.items = {item(M, kSquare, 0.5, 0.42, kPi / 4), item(M, kCircle, 0.5, 0.85), item(S, kStar, 0.12, 0.45),
                 item(S, kHexagon, 0.88, 0.45)};
      m.agent_spawns = {Pose{{0.3, 0.3}, kPi / 2}, Pose{{0.7, 0.3}, kPi / 2}};
      m.notes = "2 medium items (near and far) and 2 small items.";
      return m;
    }
    case 7: {
      MapSpec m = make(7, "Top Bottom Priority", MapCategory::kAwareness);
      m.walls = {rect(0.45, 0.32, 0.55, 0.68)};
      m.goals = {rect(0.04, 0.35, 0.24, 0.65)};
      m.items = {item(L, kHexagon, 0.78, 0.8), item(M, kCircle, 0.78, 0.2)};
      m.agent_spawns = {Pose{{0.3, 0.5}, 0.0}, Pose{{0.68, 0.5}, kPi}};
      m.notes = "1 large item at the top and 1 medium item at the bottom.";
      return m;
    }
    case 8: {
      MapSpec m = make(8, "Adaptive Assist", MapCategory::kAwareness);
      m.walls = {rect(0.55, 0.46, 0.9, 0.54)};
      m.goals = {rect(0.04, 0.3, 0.24, 0.7)};
      m.items = {item(L, kCircle, 0.72, 0.74), item(M, kSquare, 0.72, 0.26, kPi / 4), item(S, kStar, 0.3, 0.85),
                 item(S, kPentagon, 0.3, 0.15)};
      m.agent_spawns = {Pose{{0.45, 0.4}, 0.0}, Pose{{0.45, 0.6}, 0.0}};
      m.notes = "1 large, 1 medium and 2 small items.";
      return m;
    }
    case 9: {
      MapSpec m = make(9, "Left Right", MapCategory::kActionConsistency);
      m.walls = {rect(0.46, 0.0, 0.54, 0.1), rect(0.46, 0.9, 0.54, 1.0)};
      m.goals = {rect(0.04, 0.2, 0.26, 0.8), rect(0.74, 0.2, 0.96, 0.8)};
      m.items = {item(L, kSquare, 0.5, 0.28, kPi / 4), item(L, kCircle, 0.5, 0.72)};
      m.agent_spawns = {Pose{{0.35, 0.5}, 0.0}, Pose{{0.65, 0.5}, kPi}};
      m.notes = "2 large items between a left and a right goal region.";
      return m;
    }
    case 10: {
      MapSpec m = make(10, "Single Rotation", MapCategory::kActionConsistency);
      // L-shaped passage: along the bottom, then up the right side.
      m.walls = {rect(0.0, 0.42, 0.58, 1.0)};
      m.goals = {rect(0.7, 0.74, 0.96, 0.96)};
      m.items = {item(L, kPentagon, 0.22, 0.2)};
      m.agent_spawns = {Pose{{0.06, 0.1}, 0.0}, Pose{{0.38, 0.22}, kPi}};
      m.notes = "1 large item carried through one turn.";
      return m;
    }
    case 11: {
      MapSpec m = make(11, "Four Corners", MapCategory::kActionConsistency);
      m.walls = {rect(0.47, 0.0, 0.53, 0.16), rect(0.47, 0.84, 0.53, 1.0), rect(0.0, 0.47, 0.16, 0.53),
                 rect(0.84, 0.47, 1.0, 0.53)};
      m.goals = {rect(0.3, 0.3, 0.7, 0.7)};
      m.items = {item(L, kCircle, 0.16, 0.16), item(L, kSquare, 0.84, 0.16, kPi / 4), item(L, kHexagon, 0.16, 0.84),
                 item(L, kStar, 0.84, 0.84)};
      m.agent_spawns = {Pose{{0.3, 0.22}, 0.0}, Pose{{0.7, 0.78}, kPi}};
      m.notes = "4 large items, one per corner; central goal.";
      return m;
    }
    case 12: {
      MapSpec m = make(12, "Sequential Rotations", MapCategory::kActionConsistency);
      // Zig-zag passage with two switchbacks.
      m.walls = {rect(0.0, 0.3, 0.68, 0.36), rect(0.32, 0.64, 1.0, 0.7)};
      m.goals = {rect(0.04, 0.76, 0.3, 0.96)};
      m.items = {item(L, kSquare, 0.2, 0.15, kPi / 4)};
      m.agent_spawns = {Pose{{0.06, 0.06}, 0.0}, Pose{{0.4, 0.15}, kPi}};
      m.notes = "1 large item carried through a sequence of turns.";
      return m;
    }
    default:
      throw Error(ErrorKind::kMapValidation, "unknown built-in map id " + std::to_string(id));
  }
}

}  // namespace

MapSpec builtin_map(int id) {
  MapSpec m = build(id);
  validate_map(m);
  return m;
}

std::vector<MapSpec> builtin_maps() {
  std::vector<MapSpec> out;
  for (int id = 1; id <= kBuiltinMapCount; ++id) out.push_back(builtin_map(id));
  return out;
}

}  // namespace movingout
