#include "movingout/policies.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json_util.hpp"
#include "movingout/errors.hpp"
#include "navigation.hpp"

namespace movingout {

using detail::json;

const char* to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::kScriptedGreedy: return "scripted-greedy";
    case PolicyKind::kScriptedHelper: return "scripted-helper";
    case PolicyKind::kBcMlp: return "bc-mlp";
  }
  return "?";
}

PolicyKind policy_kind_from_string(const std::string& s) {
  for (PolicyKind k : {PolicyKind::kScriptedGreedy, PolicyKind::kScriptedHelper, PolicyKind::kBcMlp}) {
    if (s == to_string(k)) return k;
  }
  throw Error(ErrorKind::kUsage, "unknown policy kind '" + s + "'");
}

void validate_policy_spec(const PolicySpec& spec) {
  if (!(spec.noise >= 0.0) || !std::isfinite(spec.noise)) throw Error(ErrorKind::kUsage, "noise scale must be >= 0");
  if (spec.kind == PolicyKind::kBcMlp) {
    if (spec.net.empty()) throw Error(ErrorKind::kUsage, "bc-mlp policy needs a model file");
    if (!std::filesystem::exists(spec.net)) throw Error(ErrorKind::kUsage, "model file not found: " + spec.net.string());
  }
}

std::string policy_spec_to_json(const PolicySpec& spec, int indent) {
  json j;
  j["schema"] = kPolicySchema;
  j["kind"] = to_string(spec.kind);
  j["noise"] = spec.noise;
  if (!spec.net.empty()) j["net"] = spec.net.generic_string();
  return j.dump(indent);
}

PolicySpec policy_spec_from_json(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParseError, std::string("policy spec: ") + e.what());
  }
  if (j.value("schema", std::string{}) != kPolicySchema) {
    throw Error(ErrorKind::kSchemaVersion, "expected policy schema " + std::string(kPolicySchema));
  }
  PolicySpec spec;
  spec.kind = policy_kind_from_string(j.at("kind").get<std::string>());
  spec.noise = j.value("noise", 0.0);
  if (j.contains("net")) {
    std::filesystem::path p = j.at("net").get<std::string>();
    spec.net = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  }
  validate_policy_spec(spec);
  return spec;
}

PolicySpec load_policy_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIO, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return policy_spec_from_json(ss.str(), path.parent_path());
}

PolicySpec parse_policy_arg(const std::string& arg) {
  const std::filesystem::path p(arg);
  if (p.extension() == ".json") return load_policy_spec(p);
  PolicySpec spec;
  if (p.extension() == ".bin") {
    spec.kind = PolicyKind::kBcMlp;
    spec.net = p;
    validate_policy_spec(spec);
    return spec;
  }
  const auto colon = arg.find(':');
  spec.kind = policy_kind_from_string(arg.substr(0, colon));
  if (colon != std::string::npos) {
    try {
      spec.noise = std::stod(arg.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(ErrorKind::kUsage, "bad noise in '" + arg + "'");
    }
  }
  if (spec.kind == PolicyKind::kBcMlp) throw Error(ErrorKind::kUsage, "bc-mlp needs a model file");
  validate_policy_spec(spec);
  return spec;
}

ActionCommand act(const Policy& policy, std::span<const double> obs, Rng* rng) { return policy.act(obs, rng); }

PolicyPtr make_policy(const PolicySpec& spec, const MapSpec& map) {
  validate_policy_spec(spec);
  if (spec.kind == PolicyKind::kBcMlp) return BcPolicy::load(spec.net);
  return std::make_shared<ScriptedPolicy>(spec, map);
}

std::pair<PolicyPtr, PolicyPtr> scripted_expert_pair(const MapSpec& map, double noise) {
  return {std::make_shared<ScriptedPolicy>(PolicySpec{PolicyKind::kScriptedHelper, noise, {}}, map),
          std::make_shared<ScriptedPolicy>(PolicySpec{PolicyKind::kScriptedGreedy, noise, {}}, map)};
}

ActionCommand predict_partner_action(const Policy& policy, std::span<const double> obs_self) {
  const Observation swapped = swap_perspective(obs_self);
  return policy.act(swapped, nullptr);
}

// ---------------------------------------------------------------------------
// Scripted experts

namespace {

constexpr double kMaxMove = 0.03;
constexpr double kMaxTurn = 2.0 * std::numbers::pi * 0.1;
constexpr double kAgentClearance = kAgentRadius + 0.003;
constexpr double kApproachMargin = 0.008;
constexpr double kClaimTie = 0.06;
constexpr int kRingSpots = 24;
constexpr double kSpotTolerance = 0.015;
constexpr double kInf = std::numeric_limits<double>::infinity();

bool heavy(const ItemBody& it) { return it.size != SizeClass::kSmall; }

ActionCommand idle(const AgentBody& a) { return {0.0, a.facing, false}; }

ActionCommand release(const AgentBody& a) { return {0.0, a.facing, true}; }

/// Head along +-dir, whichever needs less turning; travel only once the turn
/// completes within this step.
ActionCommand travel(const AgentBody& a, Vec2 dir, double distance) {
  if (norm(dir) < 1e-9) return idle(a);
  dir = normalized(dir);
  const bool backward = dot(dir, a.facing) < 0.0;
  const Vec2 h = backward ? -dir : dir;
  const double turn = std::abs(wrap_angle(angle_of(h) - angle_of(a.facing)));
  ActionCommand c{0.0, h, false};
  if (turn <= kMaxTurn + 1e-9) c.move = (backward ? -1.0 : 1.0) * std::min(kMaxMove, distance);
  return c;
}

double inner_distance(const Rect& r, Vec2 p) {
  return std::min({p.x - r.min.x, r.max.x - p.x, p.y - r.min.y, r.max.y - p.y});
}

struct ItemNav {
  OccupancyGrid grid;
  DistanceField field;
};

}  // namespace

struct ScriptedPolicy::Static {
  std::shared_ptr<const Arena> arena;
  DistanceField goal;
  OccupancyGrid walls;
};

ScriptedPolicy::ScriptedPolicy(PolicySpec spec, MapSpec map) : spec_(std::move(spec)), map_(std::move(map)) {
  validate_policy_spec(spec_);
  if (spec_.kind == PolicyKind::kBcMlp) throw Error(ErrorKind::kUsage, "not a scripted policy kind");
  min_width_ = observation_width(map_.items.size());
  auto st = std::make_shared<Static>();
  st->arena = map_.arena();
  st->goal = DistanceField::build(*st->arena);
  st->walls = OccupancyGrid::from_arena(*st->arena, kAgentClearance);
  static_ = std::move(st);
}

ActionCommand ScriptedPolicy::act(std::span<const double> obs, Rng* rng) const {
  const std::size_t geometry = observation_width(map_.items.size(), {true}, static_->arena.get());
  if (obs.size() != min_width_ && obs.size() != geometry) {
    throw Error(ErrorKind::kLayoutMismatch, "observation width " + std::to_string(obs.size()) + ", expected " +
                                                std::to_string(min_width_));
  }
  ActionCommand a = decide(ego_state(obs, map_));
  if (rng && spec_.noise > 0.0) {
    std::normal_distribution<double> n(0.0, spec_.noise);
    a.heading = rotate(a.heading, unit_from_angle(n(*rng)));
    a.heading = normalized(a.heading);
  }
  return a;
}

namespace {

/// Per-decision planning context over one ego-ordered world.
class Planner {
 public:
  Planner(const WorldState& s, const DistanceField& goal, const OccupancyGrid& walls, bool helper)
      : s_(s), arena_(s.geometry()), goal_(goal), helper_(helper) {
    for (int k = 0; k < kAgentCount; ++k) reach_[k] = nav::field_to(walls, s.agents[k].position);
    std::vector<nav::Disc> discs;
    for (const ItemBody& it : s.items) discs.push_back({it.position, it.footprint_radius});
    crowd_ = nav::inflated_grid(arena_, kAgentClearance, discs);
    const std::size_t n = s.items.size();
    delivered_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      delivered_[i] = item_in_goal(s.items[i], arena_);
      for (int k = 0; k < kAgentCount; ++k) dist_[k].push_back(nav::field_value(reach_[k], s.items[i].position));
    }
  }

  ActionCommand decide() {
    const AgentBody& me = s_.agents[0];
    if (me.hold) return holding(*me.hold);
    return seeking();
  }

 private:
  const ItemBody& item(int i) const { return s_.items[static_cast<std::size_t>(i)]; }
  int count() const { return static_cast<int>(s_.items.size()); }
  double goal_value(Vec2 p) const { return goal_.at(p); }

  bool free_item(int i) const { return !delivered_[i] && s_.holders(i).empty(); }

  /// Lone holder of an undelivered medium/large item, or -1.
  int lone_heavy(int agent) const {
    const auto& h = s_.agents[agent].hold;
    if (!h || delivered_[*h] || !heavy(item(*h))) return -1;
    return s_.holders(*h).size() == 1 ? *h : -1;
  }

  /// Whether `agent` beats the other agent for item i.
  bool claims(int agent, int i) const {
    const int other = 1 - agent;
    const double da = dist_[agent][i];
    const double db = dist_[other][i];
    if (std::abs(da - db) > kClaimTie) return da < db;
    const double ga = goal_value(s_.agents[agent].position);
    const double gb = goal_value(s_.agents[other].position);
    if (ga != gb) return ga < gb;
    const Vec2 pa = s_.agents[agent].position;
    const Vec2 pb = s_.agents[other].position;
    return pa.x != pb.x ? pa.x < pb.x : pa.y < pb.y;
  }

  template <class Pred>
  int closest(int agent, Pred ok) const {
    int best = -1;
    for (int i = 0; i < count(); ++i) {
      if (!ok(i)) continue;
      if (best < 0 || dist_[agent][i] < dist_[agent][best]) best = i;
    }
    return best;
  }

  /// Field over translations of item h moved rigidly together with its
  /// holders, so the carriers' bodies are part of the footprint.
  std::optional<ItemNav> assembly_nav(int h, std::span<const Vec2> holder_offsets) const {
    const ItemBody& x = item(h);
    struct Body {
      Collider shape;
      Vec2 offset;
      double radius;
    };
    std::vector<Body> bodies;
    Collider shape = item_collider(x);
    translate(shape, -x.position);
    bodies.push_back({std::move(shape), {}, x.footprint_radius});
    for (const Vec2& o : holder_offsets) bodies.push_back({Circle{{}, kAgentRadius}, o, kAgentRadius});
    const std::vector<Rect> rects = blocking_rects(arena_);
    std::vector<Collider> rect_shapes;
    for (const Rect& r : rects) rect_shapes.push_back(to_polygon(r));

    auto collides = [&](Vec2 p) {
      for (const Body& b : bodies) {
        const Vec2 c = p + b.offset;
        Collider moved;
        bool built = false;
        auto shape_at = [&]() -> const Collider& {
          if (!built) {
            moved = b.shape;
            translate(moved, c);
            built = true;
          }
          return moved;
        };
        for (std::size_t w = 0; w < rects.size(); ++w) {
          const Vec2 q{std::clamp(c.x, rects[w].min.x, rects[w].max.x), std::clamp(c.y, rects[w].min.y, rects[w].max.y)};
          if (norm(c - q) >= b.radius) continue;
          if (penetration(shape_at(), rect_shapes[w]).depth > 0.0) return true;
        }
        for (int j = 0; j < count(); ++j) {
          if (j == h || norm(c - item(j).position) >= b.radius + item(j).footprint_radius) continue;
          if (penetration(shape_at(), item_collider(item(j))).depth > 0.0) return true;
        }
      }
      return false;
    };

    OccupancyGrid grid = OccupancyGrid::from_arena(arena_);
    std::vector<Cell> inside;
    std::vector<Cell> deep;
    for (int y = 0; y < kGridSize; ++y) {
      for (int xx = 0; xx < kGridSize; ++xx) {
        const Cell c{xx, y};
        const Vec2 p = cell_center(c);
        const bool blocked = collides(p);
        grid.set_blocked(c, blocked);
        if (blocked) continue;
        Collider at = bodies.front().shape;
        translate(at, p);
        for (const Rect& g : arena_.goals) {
          if (!collider_inside_rect(at, g)) continue;
          inside.push_back(c);
          const Rect core{g.min + Vec2{0.02, 0.02}, g.max - Vec2{0.02, 0.02}};
          if (core.width() > 0.0 && core.height() > 0.0 && collider_inside_rect(at, core)) deep.push_back(c);
          break;
        }
      }
    }
    DistanceField f = DistanceField::from_sources(grid, deep.empty() ? std::span<const Cell>(inside) : deep);
    if (!std::isfinite(nav::field_value(f, x.position, 1))) return std::nullopt;
    return ItemNav{std::move(grid), std::move(f)};
  }

  /// Field guiding item i to a goal, widening clearance until its cell connects.
  std::optional<ItemNav> item_nav(int i) const {
    const ItemBody& x = item(i);
    const double r = x.footprint_radius;
    std::vector<nav::Disc> others;
    for (int j = 0; j < count(); ++j) {
      if (j != i) others.push_back({item(j).position, item(j).footprint_radius});
    }
    for (double clearance : {r + 0.005, 0.6 * r, 0.0}) {
      OccupancyGrid grid = nav::inflated_grid(arena_, clearance, others);
      std::vector<Cell> deep;
      const std::vector<Cell> cells = goal_cells(arena_, grid);
      for (const Cell& c : cells) {
        for (const Rect& g : arena_.goals) {
          if (g.contains(cell_center(c)) && inner_distance(g, cell_center(c)) >= r) {
            deep.push_back(c);
            break;
          }
        }
      }
      DistanceField f = DistanceField::from_sources(grid, deep.empty() ? std::span<const Cell>(cells) : deep);
      if (std::isfinite(nav::field_value(f, x.position, 1))) return ItemNav{std::move(grid), std::move(f)};
    }
    return std::nullopt;
  }

  /// Direction item i should travel toward the goal.
  Vec2 item_direction(int i) const {
    const auto nav = item_nav(i);
    if (nav) {
      const nav::Steer st = nav::steer(nav->field, nav->grid, item(i).position);
      if (st.reachable && norm(st.direction) > 0.0) return st.direction;
    }
    Vec2 best{1.0, 0.0};
    double best_d = kInf;
    for (const Rect& g : arena_.goals) {
      const Vec2 d = g.center() - item(i).position;
      if (norm(d) < best_d) {
        best_d = norm(d);
        best = d;
      }
    }
    return normalized(best);
  }

  bool spot_clear(Vec2 p, int target) const {
    if (p.x < kAgentRadius || p.y < kAgentRadius || p.x > 1.0 - kAgentRadius || p.y > 1.0 - kAgentRadius) return false;
    const Circle body{p, kAgentRadius};
    for (const Rect& w : arena_.walls) {
      if (penetration(Collider{body}, Collider{to_polygon(w)}).depth > 0.0) return false;
    }
    for (int j = 0; j < count(); ++j) {
      const double slack = j == target ? 0.0 : 0.005;
      if (penetration(Collider{Circle{p, kAgentRadius + slack}}, item_collider(item(j))).depth > 0.0) return false;
    }
    return true;
  }

  /// Grasp spot for `agent` around item i. Prefers the side facing away from
  /// `away` (a unit direction), or the side opposite `avoid` when given.
  std::optional<Vec2> approach_point(int agent, int i, Vec2 away, std::optional<Vec2> avoid) const {
    const ItemBody& x = item(i);
    const double ring = x.footprint_radius + kAgentRadius + kApproachMargin;
    const DistanceField own = nav::field_to(crowd_, s_.agents[agent].position);
    std::vector<std::pair<double, Vec2>> spots;
    for (int k = 0; k < kRingSpots; ++k) {
      const Vec2 u = unit_from_angle(2.0 * std::numbers::pi * k / kRingSpots);
      const Vec2 p = x.position + u * ring;
      if (!spot_clear(p, i)) continue;
      const double path = nav::field_value(own, p);
      if (!std::isfinite(path)) continue;
      double cost = path;
      if (avoid) {
        const Vec2 to_avoid = *avoid - x.position;
        if (norm(*avoid - p) < 2.0 * kAgentRadius + 0.01) continue;
        if (norm(to_avoid) > 1e-9) cost += 0.5 * (1.0 + dot(u, normalized(to_avoid)));
      } else {
        cost += (heavy(x) ? 0.25 : 1.0) * (1.0 + dot(u, away));
      }
      spots.emplace_back(cost, p);
    }
    if (spots.empty()) return std::nullopt;
    std::stable_sort(spots.begin(), spots.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return spots.front().second;
  }

  /// Whether shifting this agent, plus the carried item and its holders, by
  /// `offset` keeps every moved body clear of walls and other bodies.
  bool clear_after(Vec2 offset, std::optional<int> carried) const {
    std::array<bool, kAgentCount> moved{true, false};
    if (carried) {
      for (int k : s_.holders(*carried)) moved[k] = true;
    }
    std::vector<Collider> bodies;
    for (int k = 0; k < kAgentCount; ++k) {
      if (!moved[k]) continue;
      const Vec2 p = s_.agents[k].position + offset;
      if (p.x < kAgentRadius || p.y < kAgentRadius || p.x > 1.0 - kAgentRadius || p.y > 1.0 - kAgentRadius) {
        return false;
      }
      bodies.push_back(Circle{p, kAgentRadius});
    }
    if (carried) {
      Collider c = item_collider(item(*carried));
      translate(c, offset);
      bodies.push_back(std::move(c));
    }
    std::vector<Collider> obstacles;
    for (const Rect& w : blocking_rects(arena_)) obstacles.push_back(to_polygon(w));
    for (int j = 0; j < count(); ++j) {
      if (!carried || j != *carried) obstacles.push_back(item_collider(item(j)));
    }
    for (int k = 0; k < kAgentCount; ++k) {
      if (!moved[k]) obstacles.push_back(Circle{s_.agents[k].position, kAgentRadius});
    }
    for (const Collider& b : bodies) {
      for (const Collider& o : obstacles) {
        if (penetration(b, o).depth > 1e-6) return false;
      }
    }
    return true;
  }

  struct StepChoice {
    Vec2 direction;
    bool progress = false;
  };

  /// Best collision-free step of length `step` for the point `from` on
  /// `field`, preferring `aim` among equally good cells.
  std::optional<StepChoice> choose_step(const DistanceField& field, Vec2 from, Vec2 aim, double step,
                                        std::optional<int> carried) const {
    std::vector<Vec2> dirs{aim};
    for (int k = 0; k < 16; ++k) dirs.push_back(rotate(aim, unit_from_angle(2.0 * std::numbers::pi * k / 16.0)));
    const double here = nav::field_value(field, from);
    std::optional<StepChoice> best;
    double best_score = kInf;
    for (const Vec2& d : dirs) {
      if (!clear_after(d * step, carried)) continue;
      const double score = nav::field_value(field, from + d * step) - 0.01 * dot(d, aim);
      if (score < best_score) {
        best_score = score;
        best = StepChoice{d, score < here - 1e-9};
      }
    }
    return best;
  }

  ActionCommand go_to(Vec2 target, double stop = 0.0) const {
    const AgentBody& me = s_.agents[0];
    const Vec2 d = target - me.position;
    const double dist = norm(d);
    if (dist <= stop + 1e-4) return idle(me);
    if (dist <= 2.0 * kCellSize) return travel(me, d, dist - stop);
    const DistanceField f = nav::field_to(crowd_, target);
    const nav::Steer st = nav::steer(f, crowd_, me.position);
    const Vec2 aim = st.reachable && norm(st.direction) > 0.0 ? st.direction : normalized(d);
    const double step = std::min(kMaxMove, dist - stop);
    const auto choice = choose_step(f, me.position, aim, step, std::nullopt);
    return travel(me, choice ? choice->direction : aim, step);
  }

  int nearest_graspable() const {
    int best = -1;
    double best_gap = kInf;
    for (int i = 0; i < count(); ++i) {
      if (s_.holders(i).size() >= 2) continue;
      const double gap = grasp_gap(s_.agents[0], item(i));
      if (gap <= 0.05 && gap < best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    return best;
  }

  /// Walk to the grasp spot for item i and grab it.
  ActionCommand fetch(int i, std::optional<Vec2> avoid) const {
    const AgentBody& me = s_.agents[0];
    const ItemBody& x = item(i);
    const double gap = grasp_gap(me, x);
    const auto spot = approach_point(0, i, item_direction(i), avoid);
    // A handoff is taken from whichever side is free.
    const AgentBody& partner = s_.agents[1];
    const bool handoff = !heavy(x) && !partner.hold && grasp_gap(partner, x) <= kClaimTie;
    const bool placed = handoff || !spot || norm(*spot - me.position) <= (heavy(x) ? 0.03 : kSpotTolerance);
    if (gap <= 0.035 && placed && nearest_graspable() == i) return {0.0, me.facing, true};
    if (!spot) return go_to(x.position, x.footprint_radius + kAgentRadius + 0.005);
    return go_to(*spot);
  }

  ActionCommand holding(int h) const {
    const AgentBody& me = s_.agents[0];
    const AgentBody& partner = s_.agents[1];
    const ItemBody& x = item(h);
    if (delivered_[h]) return release(me);
    const bool joint = s_.holders(h).size() == 2;
    if (!joint) {
      const int theirs = lone_heavy(1);
      if (heavy(x) && theirs >= 0 && theirs != h && h > theirs) return release(me);
      if (x.size == SizeClass::kLarge) return idle(me);
      if (x.size == SizeClass::kSmall && !partner.hold && grasp_gap(partner, x) <= kClaimTie &&
          goal_value(partner.position) + 0.05 < goal_value(me.position)) {
        return release(me);
      }
    }
    std::vector<Vec2> offsets;
    for (int k : s_.holders(h)) offsets.push_back(s_.agents[k].position - x.position);
    auto nav = assembly_nav(h, offsets);
    if (!nav) nav = item_nav(h);
    if (!nav) return travel(me, item_direction(h), kMaxMove);
    const nav::Steer st = nav::steer(nav->field, nav->grid, x.position);
    const Vec2 aim = st.reachable && norm(st.direction) > 0.0 ? st.direction : item_direction(h);
    const auto choice = choose_step(nav->field, x.position, aim, kMaxMove, h);
    const bool aligned = norm(me.position - x.position) > 1e-9 && dot(normalized(me.position - x.position), -aim) >= 0.8;
    if (!joint && !aligned && (!choice || !choice->progress)) {
      // Gripped from the side and stuck; let go and grip from behind.
      return release(me);
    }
    return travel(me, choice ? choice->direction : aim, kMaxMove);
  }

  ActionCommand seeking() const {
    const AgentBody& me = s_.agents[0];
    const AgentBody& partner = s_.agents[1];

    const int assist = lone_heavy(1);
    if (assist >= 0) return fetch(assist, partner.position);

    auto open = [&](int i) { return free_item(i); };
    if (partner.hold) {
      const int carried = *partner.hold;
      if (helper_ && !delivered_[carried] && !heavy(item(carried))) {
        const int mine = closest(0, open);
        const bool ahead = goal_value(me.position) < goal_value(item(carried).position);
        if (ahead && (mine < 0 || dist_[0][carried] < dist_[0][mine])) return meet(carried);
      }
      const int mine = closest(0, open);
      return mine >= 0 ? fetch(mine, std::nullopt) : idle(me);
    }

    const int theirs = closest(1, [&](int i) { return open(i) && !claims(0, i); });
    int mine = closest(0, [&](int i) { return open(i) && claims(0, i) && i != theirs; });
    if (mine < 0) mine = closest(0, [&](int i) { return open(i) && i != theirs; });

    if (theirs >= 0 && heavy(item(theirs))) {
      int shared = -1;
      if (mine < 0 || !heavy(item(mine))) {
        shared = theirs;
      } else {
        auto key = [&](int i) { return std::min(dist_[0][i], dist_[1][i]); };
        shared = key(mine) < key(theirs) || (key(mine) == key(theirs) && mine < theirs) ? mine : theirs;
      }
      return fetch_shared(shared);
    }
    if (mine >= 0 && heavy(item(mine)) && theirs < 0) return fetch_shared(mine);
    if (mine >= 0) return fetch(mine, std::nullopt);
    return idle(me);
  }

  /// Both agents head for the same heavy item. The agent already further
  /// behind it (relative to its way to the goal) takes the rear spot and the
  /// other keeps clear of that spot.
  ActionCommand fetch_shared(int i) const {
    const Vec2 dir = item_direction(i);
    const Vec2 c = item(i).position;
    const double mine = dot(s_.agents[0].position - c, -dir);
    const double theirs = dot(s_.agents[1].position - c, -dir);
    const bool rear = std::abs(mine - theirs) > 1e-9 ? mine > theirs : claims(0, i);
    if (rear) return fetch(i, std::nullopt);
    const auto their_spot = approach_point(1, i, dir, std::nullopt);
    return fetch(i, their_spot ? their_spot : std::optional<Vec2>(s_.agents[1].position));
  }

  /// Wait on the path of an item the partner is bringing in, at the point
  /// of that path nearest to this agent.
  ActionCommand meet(int i) const {
    const AgentBody& me = s_.agents[0];
    const ItemBody& x = item(i);
    const auto nav = item_nav(i);
    if (!nav) return idle(me);
    Cell c = cell_of(x.position);
    if (!nav->field.reachable(c)) {
      const auto near = nav::nearest_free(nav->grid, x.position);
      if (!near || !nav->field.reachable(*near)) return idle(me);
      c = *near;
    }
    const int lead = 3;
    std::optional<Cell> best;
    double best_d = kInf;
    std::vector<Cell> path{c};
    while (auto next = nav->field.descend(path.back())) path.push_back(*next);
    for (std::size_t k = lead; k < path.size(); ++k) {
      const double d = nav::field_value(reach_[0], cell_center(path[k]));
      if (d < best_d) {
        best_d = d;
        best = path[k];
      }
    }
    if (!best) return idle(me);
    const Vec2 spot = cell_center(*best);
    if (norm(spot - me.position) <= 0.01) return idle(me);
    return go_to(spot);
  }

  const WorldState& s_;
  const Arena& arena_;
  const DistanceField& goal_;
  bool helper_;
  std::array<DistanceField, kAgentCount> reach_;
  std::array<std::vector<double>, kAgentCount> dist_;
  OccupancyGrid crowd_;
  std::vector<bool> delivered_;
};

}  // namespace

ActionCommand ScriptedPolicy::decide(const WorldState& ego) const {
  Planner planner(ego, static_->goal, static_->walls, spec_.kind == PolicyKind::kScriptedHelper);
  return planner.decide();
}

// ---------------------------------------------------------------------------
// Behaviour cloning

std::array<double, 4> bc_target(const ActionCommand& action, double max_move) {
  return {action.move / max_move, action.heading.x, action.heading.y, action.grasp ? 1.0 : 0.0};
}

BcPolicy::BcPolicy(nn::DenseNet net, std::vector<double> mean, std::vector<double> scale, int horizon)
    : net_(std::move(net)), mean_(std::move(mean)), scale_(std::move(scale)), horizon_(horizon) {
  spec_.kind = PolicyKind::kBcMlp;
  if (mean_.size() != scale_.size() || static_cast<int>(mean_.size()) != net_.input_size()) {
    throw Error(ErrorKind::kShapeMismatch, "normalisation does not match the network input");
  }
  if (horizon_ < 1 || net_.output_size() != 4 * horizon_) {
    throw Error(ErrorKind::kShapeMismatch, "network output must be 4 x horizon");
  }
}

nn::Vector BcPolicy::predict(std::span<const double> obs) const {
  if (obs.size() != mean_.size()) {
    throw Error(ErrorKind::kLayoutMismatch, "observation width " + std::to_string(obs.size()) + ", model expects " +
                                                std::to_string(mean_.size()));
  }
  nn::Matrix x(static_cast<Eigen::Index>(obs.size()), 1);
  for (std::size_t i = 0; i < obs.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = (obs[i] - mean_[i]) / scale_[i];
  return net_.forward(x).col(0);
}

ActionCommand BcPolicy::act(std::span<const double> obs, Rng*) const {
  const nn::Vector out = predict(obs);
  ActionCommand a;
  a.move = std::clamp(out(0), -1.0, 1.0) * kMaxMove;
  const Vec2 h{out(1), out(2)};
  a.heading = norm(h) >= 1e-3 ? normalized(h) : Vec2{obs[obs_layout::kSelf + 2], obs[obs_layout::kSelf + 3]};
  if (norm(a.heading) < 1e-3) a.heading = {1.0, 0.0};
  a.heading = normalized(a.heading);
  a.grasp = out(3) > 0.0;
  return a;
}

nn::Bundle BcPolicy::to_bundle() const {
  nn::Bundle b;
  b.put("kind", std::string(to_string(PolicyKind::kBcMlp)));
  b.put("policy", net_);
  b.put("input_mean", mean_);
  b.put("input_scale", scale_);
  b.put("horizon", std::vector<double>{static_cast<double>(horizon_)});
  return b;
}

std::shared_ptr<BcPolicy> BcPolicy::from_bundle(const nn::Bundle& b) {
  if (!b.contains("kind") || b.text("kind") != to_string(PolicyKind::kBcMlp)) {
    throw Error(ErrorKind::kSchemaVersion, "model file does not hold a bc-mlp policy");
  }
  const int horizon = b.contains("horizon") ? static_cast<int>(b.vec("horizon").at(0)) : 1;
  return std::make_shared<BcPolicy>(b.net("policy"), b.vec("input_mean"), b.vec("input_scale"), horizon);
}

std::shared_ptr<BcPolicy> BcPolicy::load(const std::filesystem::path& path) {
  auto p = from_bundle(nn::load_bundle(path));
  p->spec_.net = path;
  return p;
}

void BcPolicy::save(const std::filesystem::path& path) const { nn::save_bundle(to_bundle(), path); }

BcTrainResult train_bc(const nn::Dataset& data, const BcConfig& config) {
  if (data.size() == 0) throw Error(ErrorKind::kEmptyDataset, "no (observation, action) pairs");
  if (config.action_horizon < 1 || data.targets.rows() != 4 * config.action_horizon) {
    throw Error(ErrorKind::kShapeMismatch, "targets must have 4 x horizon rows");
  }
  if (data.targets.cols() != data.inputs.cols()) throw Error(ErrorKind::kShapeMismatch, "input/target count differ");
  const Eigen::Index w = data.inputs.rows();
  const nn::Vector mean = data.inputs.rowwise().mean();
  const nn::Vector var = (data.inputs.colwise() - mean).array().square().rowwise().mean();
  std::vector<double> mu(static_cast<std::size_t>(w));
  std::vector<double> scale(static_cast<std::size_t>(w));
  for (Eigen::Index i = 0; i < w; ++i) {
    mu[static_cast<std::size_t>(i)] = mean(i);
    const double sd = std::sqrt(var(i));
    scale[static_cast<std::size_t>(i)] = sd > 1e-6 ? sd : 1.0;
  }
  nn::Dataset norm_data;
  norm_data.inputs = data.inputs;
  for (Eigen::Index i = 0; i < w; ++i) {
    norm_data.inputs.row(i) = (norm_data.inputs.row(i).array() - mu[i]) / scale[static_cast<std::size_t>(i)];
  }
  norm_data.targets = data.targets;

  const int out = 4 * config.action_horizon;
  nn::DenseNet net({static_cast<int>(w), config.hidden, config.hidden, out},
                   {nn::Activation::kTanh, nn::Activation::kTanh, nn::Activation::kIdentity}, config.seed);
  nn::TrainConfig tc;
  tc.loss.kind = nn::LossKind::kComposite;
  for (int k = 0; k < config.action_horizon; ++k) tc.loss.logit_rows.push_back(4 * k + 3);
  tc.epochs = config.epochs;
  tc.batch_size = config.batch_size;
  tc.seed = config.seed;
  tc.adam.lr = config.learning_rate;
  nn::TrainResult tr = nn::train(net, norm_data, tc);
  BcTrainResult r;
  r.policy = std::make_shared<BcPolicy>(std::move(net), std::move(mu), std::move(scale), config.action_horizon);
  r.loss_curve = std::move(tr.loss_curve);
  return r;
}

}  // namespace movingout
