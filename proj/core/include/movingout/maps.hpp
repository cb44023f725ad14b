#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "movingout/physics.hpp"

namespace movingout {

inline constexpr const char* kMapSchema = "movingout-map/1";
inline constexpr int kBuiltinMapCount = 12;

enum class MapCategory : std::uint8_t { kCoordination, kAwareness, kActionConsistency };
const char* to_string(MapCategory c);
MapCategory map_category_from_string(const std::string& s);

struct Pose {
  Vec2 position;
  double angle = 0.0;
  friend bool operator==(const Pose&, const Pose&) = default;
};

/// Ranges an item's physical attributes are drawn from. Scales are sampled on
/// `levels` geometric steps between the bounds, so a finite set of distinct
/// objects exists per item.
struct AttributeRanges {
  double mass_scale_min = 0.5;
  double mass_scale_max = 2.0;
  double footprint_scale_min = 0.8;
  double footprint_scale_max = 1.25;
  int levels = 5;
  std::vector<ItemShape> shapes;
  friend bool operator==(const AttributeRanges&, const AttributeRanges&) = default;
};

AttributeRanges default_attribute_ranges();

struct ItemSpec {
  ItemShape shape;
  SizeClass size = SizeClass::kSmall;
  double mass = 1.0;
  double footprint_radius = 0.028;
  Pose spawn;
  std::optional<AttributeRanges> randomization;
  friend bool operator==(const ItemSpec&, const ItemSpec&) = default;
};

/// Identity of an object for train/test disjointness: shape, size class, mass
/// and footprint. Two items with equal keys are the same object.
std::string attribute_key(const ItemSpec& item);

struct MapSpec {
  int id = 0;
  std::string name;
  MapCategory category = MapCategory::kCoordination;
  std::vector<Rect> walls;
  std::vector<Rect> goals;
  std::vector<ItemSpec> items;
  std::array<Pose, kAgentCount> agent_spawns{};
  std::string notes;
  friend bool operator==(const MapSpec&, const MapSpec&) = default;

  std::shared_ptr<const Arena> arena() const;
};

/// Nominal footprint radius and mass for each size class.
double nominal_footprint(SizeClass s);
double nominal_mass(SizeClass s);

/// Throws MapValidation naming the violated invariant.
void validate_map(const MapSpec& map);

/// Built-in catalog, ids 1..12.
MapSpec builtin_map(int id);
std::vector<MapSpec> builtin_maps();

/// Loads a built-in map by id ("1".."12") or a map spec file by path.
MapSpec load_map(const std::string& id_or_path);
MapSpec load_map(int id);
MapSpec load_map_file(const std::filesystem::path& path);

std::string map_to_json(const MapSpec& map, int indent = 2);
MapSpec map_from_json(const std::string& text);
void save_map_file(const MapSpec& map, const std::filesystem::path& path);

/// 64-bit FNV-1a over the compact JSON form; identifies geometry in logs.
std::uint64_t map_hash(const MapSpec& map);

/// Initial physical state described by the map.
WorldState initial_state(const MapSpec& map);

/// Every attribute combination the item's ranges can produce, in a fixed order.
std::vector<ItemSpec> attribute_variants(const ItemSpec& item);

struct RandomizeOptions {
  /// Attribute keys that must not be produced (e.g. the test pool).
  std::set<std::string> exclude;
  int max_draws = 1000;
};

/// Resamples every item that declares ranges. Deterministic in `seed`; item
/// order and spawn positions are kept; sampled layouts stay collision-free.
/// Throws ExhaustedSampling when an item cannot be drawn within max_draws.
MapSpec randomize(const MapSpec& map, std::uint64_t seed, const RandomizeOptions& options = {});

}  // namespace movingout
