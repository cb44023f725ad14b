#include "movingout/maps.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "json_util.hpp"

namespace movingout {

using detail::json;

const char* to_string(MapCategory c) {
  switch (c) {
    case MapCategory::kCoordination: return "coordination";
    case MapCategory::kAwareness: return "awareness";
    case MapCategory::kActionConsistency: return "action-consistency";
  }
  return "?";
}

MapCategory map_category_from_string(const std::string& s) {
  if (s == "coordination") return MapCategory::kCoordination;
  if (s == "awareness") return MapCategory::kAwareness;
  if (s == "action-consistency") return MapCategory::kActionConsistency;
  throw Error(ErrorKind::kMapValidation, "unknown category '" + s + "'");
}

double nominal_footprint(SizeClass s) {
  switch (s) {
    case SizeClass::kSmall: return 0.028;
    case SizeClass::kMedium: return 0.045;
    case SizeClass::kLarge: return 0.072;
  }
  return 0.0;
}

double nominal_mass(SizeClass s) {
  switch (s) {
    case SizeClass::kSmall: return 1.0;
    case SizeClass::kMedium: return 1.5;
    case SizeClass::kLarge: return 2.0;
  }
  return 0.0;
}

AttributeRanges default_attribute_ranges() {
  AttributeRanges r;
  r.shapes = {{ShapeKind::kCircle, 0},
              {ShapeKind::kPolygon, 4},
              {ShapeKind::kPolygon, 5},
              {ShapeKind::kPolygon, 6},
              {ShapeKind::kStar, 5}};
  return r;
}

std::string attribute_key(const ItemSpec& item) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s%d/%s/m%.6g/r%.6g", to_string(item.shape.kind), item.shape.vertices,
                to_string(item.size), item.mass, item.footprint_radius);
  return buf;
}

std::shared_ptr<const Arena> MapSpec::arena() const {
  return std::make_shared<const Arena>(Arena{walls, goals});
}

namespace {

[[noreturn]] void invalid(const MapSpec& map, const std::string& what) {
  throw Error(ErrorKind::kMapValidation, "map " + std::to_string(map.id) + " (" + map.name + "): " + what);
}

bool rect_in_arena(const Rect& r) {
  return r.min.x >= 0.0 && r.min.y >= 0.0 && r.max.x <= 1.0 && r.max.y <= 1.0 && r.min.x < r.max.x &&
         r.min.y < r.max.y;
}

ItemBody body_from_spec(const ItemSpec& s) {
  ItemBody b;
  b.position = s.spawn.position;
  b.facing = unit_from_angle(s.spawn.angle);
  b.shape = s.shape;
  b.size = s.size;
  b.mass = s.mass;
  b.footprint_radius = s.footprint_radius;
  return b;
}

double footprint_area(const ItemSpec& s) { return std::numbers::pi * s.footprint_radius * s.footprint_radius; }

}  // namespace

WorldState initial_state(const MapSpec& map) {
  WorldState s;
  s.arena = map.arena();
  for (int k = 0; k < kAgentCount; ++k) {
    s.agents[k].position = map.agent_spawns[k].position;
    s.agents[k].facing = unit_from_angle(map.agent_spawns[k].angle);
  }
  s.items.reserve(map.items.size());
  for (const auto& it : map.items) s.items.push_back(body_from_spec(it));
  return s;
}

void validate_map(const MapSpec& map) {
  if (map.id < 1) invalid(map, "id must be positive");
  for (const Rect& w : map.walls) {
    if (!rect_in_arena(w)) invalid(map, "wall outside the arena or degenerate");
  }
  if (!map.items.empty() && map.goals.empty()) invalid(map, "items present but no goal region");
  double goal_area = 0.0;
  for (const Rect& g : map.goals) {
    if (!rect_in_arena(g)) invalid(map, "goal region outside the arena or degenerate");
    goal_area += g.area();
  }
  double item_area = 0.0;
  for (const auto& it : map.items) {
    if (!(it.mass > 0.0) || !std::isfinite(it.mass)) invalid(map, "item mass must be positive");
    if (!(it.footprint_radius > 0.0)) invalid(map, "item footprint must be positive");
    if (it.shape.kind != ShapeKind::kCircle && it.shape.vertices < 3) invalid(map, "polygon needs at least 3 vertices");
    item_area += footprint_area(it);
  }
  if (goal_area < item_area) {
    invalid(map, "goal region area " + std::to_string(goal_area) + " smaller than total item footprint " +
                     std::to_string(item_area));
  }
  for (const auto& a : map.items) {
    for (const auto& b : map.items) {
      if (a.size < b.size && !(a.footprint_radius < b.footprint_radius)) {
        invalid(map, "footprint radii do not follow size-class ordering");
      }
    }
  }
  const WorldState s = initial_state(map);
  for (const auto& p : map.agent_spawns) {
    if (!(p.position.x >= 0.0 && p.position.x <= 1.0 && p.position.y >= 0.0 && p.position.y <= 1.0)) {
      invalid(map, "agent spawn outside the arena");
    }
  }
  const CollisionReport report = check_collisions(s);
  if (!report.empty()) {
    const auto& e = report.entries.front();
    invalid(map, std::string("spawn poses overlap (") + to_string(e.kind) + " " + std::to_string(e.first) + "/" +
                     std::to_string(e.second) + ")");
  }
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json shape_to_json(const ItemShape& s) { return {{"shape", to_string(s.kind)}, {"vertices", s.vertices}}; }

ItemShape shape_from_json(const json& j) {
  ItemShape s;
  s.kind = shape_kind_from_string(j.at("shape").get<std::string>());
  s.vertices = j.value("vertices", 0);
  return s;
}

json pose_to_json(const Pose& p) { return {{"position", detail::to_json(p.position)}, {"angle", p.angle}}; }

Pose pose_from_json(const json& j) { return {detail::vec2_from_json(j.at("position")), j.value("angle", 0.0)}; }

json ranges_to_json(const AttributeRanges& r) {
  json shapes = json::array();
  for (const auto& s : r.shapes) shapes.push_back(shape_to_json(s));
  return {{"mass_scale", {r.mass_scale_min, r.mass_scale_max}},
          {"footprint_scale", {r.footprint_scale_min, r.footprint_scale_max}},
          {"levels", r.levels},
          {"shapes", shapes}};
}

AttributeRanges ranges_from_json(const json& j) {
  AttributeRanges r;
  r.mass_scale_min = j.at("mass_scale").at(0).get<double>();
  r.mass_scale_max = j.at("mass_scale").at(1).get<double>();
  r.footprint_scale_min = j.at("footprint_scale").at(0).get<double>();
  r.footprint_scale_max = j.at("footprint_scale").at(1).get<double>();
  r.levels = j.value("levels", 5);
  r.shapes.clear();
  for (const auto& s : j.at("shapes")) r.shapes.push_back(shape_from_json(s));
  return r;
}

json map_json(const MapSpec& map) {
  json walls = json::array();
  for (const auto& w : map.walls) walls.push_back(detail::to_json(w));
  json goals = json::array();
  for (const auto& g : map.goals) goals.push_back(detail::to_json(g));
  json items = json::array();
  for (const auto& it : map.items) {
    json j = shape_to_json(it.shape);
    j["size"] = to_string(it.size);
    j["mass"] = it.mass;
    j["footprint_radius"] = it.footprint_radius;
    j["spawn"] = pose_to_json(it.spawn);
    if (it.randomization) j["randomization"] = ranges_to_json(*it.randomization);
    items.push_back(std::move(j));
  }
  json spawns = json::array();
  for (const auto& p : map.agent_spawns) spawns.push_back(pose_to_json(p));
  json out = {{"schema", kMapSchema},
              {"id", map.id},
              {"name", map.name},
              {"category", to_string(map.category)},
              {"walls", walls},
              {"goal_regions", goals},
              {"items", items},
              {"agent_spawns", spawns}};
  if (!map.notes.empty()) out["notes"] = map.notes;
  return out;
}

}  // namespace

std::string map_to_json(const MapSpec& map, int indent) { return map_json(map).dump(indent); }

MapSpec map_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kMapValidation, std::string("map spec is not valid JSON: ") + e.what());
  }
  const std::string schema = j.value("schema", "");
  if (schema != kMapSchema) {
    throw Error(ErrorKind::kSchemaVersion, "expected schema '" + std::string(kMapSchema) + "', got '" + schema + "'");
  }
  MapSpec map;
  try {
    map.id = j.at("id").get<int>();
    map.name = j.value("name", "");
    map.category = map_category_from_string(j.value("category", "coordination"));
    for (const auto& w : j.at("walls")) map.walls.push_back(detail::rect_from_json(w));
    for (const auto& g : j.at("goal_regions")) map.goals.push_back(detail::rect_from_json(g));
    for (const auto& it : j.at("items")) {
      ItemSpec s;
      s.shape = shape_from_json(it);
      s.size = size_class_from_string(it.at("size").get<std::string>());
      s.mass = it.at("mass").get<double>();
      s.footprint_radius = it.at("footprint_radius").get<double>();
      s.spawn = pose_from_json(it.at("spawn"));
      if (it.contains("randomization")) s.randomization = ranges_from_json(it.at("randomization"));
      map.items.push_back(std::move(s));
    }
    const auto& spawns = j.at("agent_spawns");
    if (spawns.size() != kAgentCount) throw std::invalid_argument("exactly two agent spawns required");
    for (int k = 0; k < kAgentCount; ++k) map.agent_spawns[k] = pose_from_json(spawns.at(k));
    map.notes = j.value("notes", "");
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorKind::kMapValidation, std::string("malformed map spec: ") + e.what());
  }
  validate_map(map);
  return map;
}

MapSpec load_map_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIO, "cannot open map file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return map_from_json(ss.str());
}

void save_map_file(const MapSpec& map, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIO, "cannot write map file " + path.string());
  out << map_to_json(map) << '\n';
}

MapSpec load_map(int id) { return builtin_map(id); }

MapSpec load_map(const std::string& id_or_path) {
  const bool numeric = !id_or_path.empty() && std::all_of(id_or_path.begin(), id_or_path.end(),
                                                          [](unsigned char c) { return std::isdigit(c); });
  if (numeric) return builtin_map(std::stoi(id_or_path));
  if (!std::filesystem::exists(id_or_path)) {
    throw Error(ErrorKind::kMapValidation, "no built-in map or file named '" + id_or_path + "'");
  }
  return load_map_file(id_or_path);
}

std::uint64_t map_hash(const MapSpec& map) {
  const std::string text = map_to_json(map, -1);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Randomization

namespace {

double level_scale(double lo, double hi, int level, int levels) {
  if (levels <= 1) return 1.0;
  return lo * std::pow(hi / lo, static_cast<double>(level) / (levels - 1));
}

bool spawn_clear(const MapSpec& map) {
  return check_collisions(initial_state(map)).empty();
}

}  // namespace

std::vector<ItemSpec> attribute_variants(const ItemSpec& item) {
  if (!item.randomization) return {item};
  const AttributeRanges& r = *item.randomization;
  const int levels = std::max(1, r.levels);
  std::vector<ItemShape> shapes = r.shapes.empty() ? std::vector<ItemShape>{item.shape} : r.shapes;
  std::vector<ItemSpec> out;
  for (const ItemShape& shape : shapes) {
    for (int m = 0; m < levels; ++m) {
      for (int f = 0; f < levels; ++f) {
        ItemSpec v = item;
        v.shape = shape;
        v.mass = item.mass * level_scale(r.mass_scale_min, r.mass_scale_max, m, r.levels);
        v.footprint_radius = item.footprint_radius * level_scale(r.footprint_scale_min, r.footprint_scale_max, f, r.levels);
        out.push_back(std::move(v));
      }
    }
  }
  return out;
}

MapSpec randomize(const MapSpec& map, std::uint64_t seed, const RandomizeOptions& options) {
  const bool any = std::any_of(map.items.begin(), map.items.end(), [](const ItemSpec& s) { return s.randomization; });
  if (!any) throw Error(ErrorKind::kMapValidation, "map " + std::to_string(map.id) + " declares no randomization ranges");

  std::mt19937_64 rng(seed);
  MapSpec out = map;
  for (std::size_t i = 0; i < map.items.size(); ++i) {
    const ItemSpec& base = map.items[i];
    if (!base.randomization) continue;
    const AttributeRanges& r = *base.randomization;
    std::uniform_int_distribution<int> level(0, std::max(0, r.levels - 1));
    std::uniform_int_distribution<std::size_t> shape_pick(0, r.shapes.empty() ? 0 : r.shapes.size() - 1);
    bool accepted = false;
    for (int draw = 0; draw < options.max_draws; ++draw) {
      ItemSpec candidate = base;
      if (!r.shapes.empty()) candidate.shape = r.shapes[shape_pick(rng)];
      candidate.mass = base.mass * level_scale(r.mass_scale_min, r.mass_scale_max, level(rng), r.levels);
      candidate.footprint_radius =
          base.footprint_radius * level_scale(r.footprint_scale_min, r.footprint_scale_max, level(rng), r.levels);
      if (options.exclude.count(attribute_key(candidate))) continue;
      const ItemSpec previous = out.items[i];
      out.items[i] = candidate;
      if (spawn_clear(out)) {
        accepted = true;
        break;
      }
      out.items[i] = previous;
    }
    if (!accepted) {
      throw Error(ErrorKind::kExhaustedSampling, "item " + std::to_string(i) + " of map " + std::to_string(map.id) +
                                                     ": no admissible attributes in " +
                                                     std::to_string(options.max_draws) + " draws");
    }
  }
  return out;
}

}  // namespace movingout
