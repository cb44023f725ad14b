#include "movingout/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "movingout/errors.hpp"

namespace movingout {

using namespace obs_layout;

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::kGrasp: return "grasp";
    case EventKind::kRelease: return "release";
    case EventKind::kEnteredGoal: return "entered-goal";
    case EventKind::kLeftGoal: return "left-goal";
    case EventKind::kCollision: return "collision";
  }
  return "?";
}

EventKind event_kind_from_string(const std::string& s) {
  for (EventKind k : {EventKind::kGrasp, EventKind::kRelease, EventKind::kEnteredGoal, EventKind::kLeftGoal,
                      EventKind::kCollision}) {
    if (s == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown event kind '" + s + "'");
}

std::size_t observation_width(std::size_t item_count, const ObservationMode& mode, const Arena* arena) {
  std::size_t w = kItems + kItemBlock * item_count;
  if (mode.include_geometry && arena) w += 4 * (arena->walls.size() + arena->goals.size());
  return w;
}

namespace {

void push_agent(Observation& out, const AgentBody& a) {
  out.push_back(a.position.x);
  out.push_back(a.position.y);
  out.push_back(a.facing.x);
  out.push_back(a.facing.y);
  out.push_back(a.hold ? 1.0 : 0.0);
}

void push_corners(Observation& out, const Rect& r) {
  // Top-left then bottom-right, y pointing up.
  out.push_back(r.min.x);
  out.push_back(r.max.y);
  out.push_back(r.max.x);
  out.push_back(r.min.y);
}

}  // namespace

Observation encode_observation(const WorldState& state, int agent, const ObservationMode& mode) {
  Observation out;
  out.reserve(observation_width(state.items.size(), mode, &state.geometry()));
  push_agent(out, state.agents.at(static_cast<std::size_t>(agent)));
  push_agent(out, state.agents.at(static_cast<std::size_t>(1 - agent)));
  for (const ItemBody& it : state.items) {
    out.push_back(it.position.x);
    out.push_back(it.position.y);
    out.push_back(it.facing.x);
    out.push_back(it.facing.y);
    out.push_back(it.footprint_radius);
    for (int s = 0; s < 3; ++s) out.push_back(static_cast<int>(it.size) == s ? 1.0 : 0.0);
    for (int s = 0; s < 3; ++s) out.push_back(static_cast<int>(it.shape.kind) == s ? 1.0 : 0.0);
  }
  if (mode.include_geometry) {
    for (const Rect& w : state.geometry().walls) push_corners(out, w);
    for (const Rect& g : state.geometry().goals) push_corners(out, g);
  }
  return out;
}

std::vector<double> state_vector(const WorldState& state) { return encode_observation(state, 0); }

std::array<double, kActionWidth> encode_action(const ActionCommand& action) {
  return {action.move, action.heading.x, action.heading.y, action.grasp ? 1.0 : 0.0};
}

ActionCommand decode_action(std::span<const double> vec) {
  if (vec.size() < kActionWidth) {
    throw Error(ErrorKind::kDecodeError, "action vector needs 4 entries, got " + std::to_string(vec.size()));
  }
  const Vec2 h{vec[1], vec[2]};
  const double n = norm(h);
  if (!std::isfinite(n) || n < 1e-3) throw Error(ErrorKind::kDecodeError, "heading pair is degenerate");
  if (!std::isfinite(vec[0])) throw Error(ErrorKind::kDecodeError, "move distance is not finite");
  ActionCommand a;
  a.move = vec[0];
  a.heading = n == 1.0 ? h : h / n;
  a.grasp = vec[3] >= 0.5;
  return a;
}

WorldState state_from_vector(std::span<const double> vec, const std::array<int, kAgentCount>& holds,
                             const MapSpec& map) {
  const std::size_t expected = observation_width(map.items.size());
  if (vec.size() < expected) {
    throw Error(ErrorKind::kLayoutMismatch,
                "state vector width " + std::to_string(vec.size()) + ", expected " + std::to_string(expected));
  }
  WorldState s = initial_state(map);
  for (int k = 0; k < kAgentCount; ++k) {
    const std::size_t o = k * kAgentBlock;
    s.agents[k].position = {vec[o], vec[o + 1]};
    s.agents[k].facing = {vec[o + 2], vec[o + 3]};
    if (holds[k] >= 0) s.agents[k].hold = holds[k];
  }
  for (std::size_t i = 0; i < s.items.size(); ++i) {
    const std::size_t o = kItems + i * kItemBlock;
    s.items[i].position = {vec[o], vec[o + 1]};
    s.items[i].facing = {vec[o + 2], vec[o + 3]};
    s.items[i].footprint_radius = vec[o + 4];
  }
  return s;
}

namespace {

std::optional<int> nearest_item(const WorldState& s, int agent) {
  int best = -1;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.items.size(); ++i) {
    const double gap = grasp_gap(s.agents[agent], s.items[i]);
    if (gap < best_gap) {
      best_gap = gap;
      best = static_cast<int>(i);
    }
  }
  if (best < 0) return std::nullopt;
  return best;
}

}  // namespace

WorldState reconstruct_state(std::span<const double> obs0, std::span<const double> obs1, const MapSpec& map) {
  const std::size_t n = observation_width(map.items.size());
  if (obs0.size() < n || obs1.size() < n) throw Error(ErrorKind::kLayoutMismatch, "observation too short for map");
  std::vector<double> canonical(obs0.begin(), obs0.begin() + static_cast<std::ptrdiff_t>(n));
  // The partner block of obs1 is agent 0 and its self block is agent 1; both
  // views agree on everything, so obs0 alone carries the bodies.
  WorldState s = state_from_vector(canonical, {-1, -1}, map);
  std::array<bool, kAgentCount> holding{obs0[kSelf + 4] >= 0.5, obs1[kSelf + 4] >= 0.5};
  for (int k = 0; k < kAgentCount; ++k) {
    if (holding[k]) s.agents[k].hold = nearest_item(s, k);
  }
  return s;
}


WorldState ego_state(std::span<const double> obs, const MapSpec& map) {
  const std::size_t n = map.items.size();
  if (obs.size() < observation_width(n)) throw Error(ErrorKind::kLayoutMismatch, "observation too short for map");
  WorldState s;
  s.arena = map.arena();
  for (int k = 0; k < kAgentCount; ++k) {
    const std::size_t o = k * kAgentBlock;
    s.agents[k].position = {obs[o], obs[o + 1]};
    s.agents[k].facing = {obs[o + 2], obs[o + 3]};
  }
  s.items.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t o = kItems + i * kItemBlock;
    ItemBody& it = s.items[i];
    it.position = {obs[o], obs[o + 1]};
    it.facing = {obs[o + 2], obs[o + 3]};
    it.footprint_radius = obs[o + 4];
    int size = 0;
    int kind = 0;
    for (int c = 1; c < 3; ++c) {
      if (obs[o + 5 + c] > obs[o + 5 + size]) size = c;
      if (obs[o + 8 + c] > obs[o + 8 + kind]) kind = c;
    }
    it.size = static_cast<SizeClass>(size);
    it.shape.kind = static_cast<ShapeKind>(kind);
    const ItemSpec& spec = map.items[i];
    it.mass = spec.mass;
    if (spec.shape.kind == it.shape.kind) {
      it.shape.vertices = spec.shape.vertices;
    } else {
      it.shape.vertices = it.shape.kind == ShapeKind::kCircle ? 0 : (it.shape.kind == ShapeKind::kStar ? 5 : 6);
    }
  }
  for (int k = 0; k < kAgentCount; ++k) {
    if (obs[k * kAgentBlock + 4] >= 0.5) s.agents[k].hold = nearest_item(s, k);
  }
  return s;
}

Observation swap_perspective(std::span<const double> obs) {
  if (obs.size() < kItems) throw Error(ErrorKind::kLayoutMismatch, "observation shorter than the agent blocks");
  Observation out(obs.begin(), obs.end());
  std::swap_ranges(out.begin() + kSelf, out.begin() + kSelf + kAgentBlock, out.begin() + kPartner);
  return out;
}

bool all_delivered(const WorldState& state) {
  const Arena& arena = state.geometry();
  return std::all_of(state.items.begin(), state.items.end(),
                     [&](const ItemBody& it) { return item_in_goal(it, arena); });
}

MapSpec resolved_map(const EpisodeConfig& config) {
  return config.randomize_attributes ? randomize(config.map, config.seed) : config.map;
}

ResetResult reset(const EpisodeConfig& config) {
  const MapSpec map = resolved_map(config);
  validate_map(map);
  ResetResult r;
  r.state = initial_state(map);
  for (int k = 0; k < kAgentCount; ++k) r.observations[k] = encode_observation(r.state, k, config.observation);
  r.done = all_delivered(r.state);
  return r;
}

StepOutcome env_step(const EpisodeConfig& config, const WorldState& state, int t, const ActionCommand& a0,
                     const ActionCommand& a1) {
  StepResult sr = step_detailed(state, {a0, a1}, config.physics);
  StepOutcome out;
  out.state = std::move(sr.state);
  for (int k = 0; k < kAgentCount; ++k) {
    const auto& before = state.agents[k].hold;
    const auto& after = out.state.agents[k].hold;
    if (before != after) {
      if (before) out.events.push_back({EventKind::kRelease, k, *before});
      if (after) out.events.push_back({EventKind::kGrasp, k, *after});
    }
  }
  const Arena& arena = out.state.geometry();
  for (std::size_t i = 0; i < out.state.items.size(); ++i) {
    const bool was = item_in_goal(state.items[i], arena);
    const bool is = item_in_goal(out.state.items[i], arena);
    if (is && !was) out.events.push_back({EventKind::kEnteredGoal, static_cast<int>(i), -1});
    if (was && !is) out.events.push_back({EventKind::kLeftGoal, static_cast<int>(i), -1});
  }
  for (const StepContact& c : sr.contacts) {
    Event e{EventKind::kCollision, c.first, c.second, c.kind};
    if (std::find(out.events.begin(), out.events.end(), e) == out.events.end()) out.events.push_back(e);
  }
  for (int k = 0; k < kAgentCount; ++k) out.observations[k] = encode_observation(out.state, k, config.observation);
  const bool delivered = all_delivered(out.state);
  out.timeout = !delivered && t + 1 >= config.horizon;
  out.done = delivered || out.timeout;
  return out;
}

Episode::Episode(EpisodeConfig config) : config_(std::move(config)) {
  if (config_.horizon <= 0) throw std::invalid_argument("episode horizon must be positive");
  config_.map = resolved_map(config_);
  config_.randomize_attributes = false;
}

const ResetResult& Episode::reset() {
  reset_result_ = movingout::reset(config_);
  state_ = reset_result_.state;
  t_ = 0;
  done_ = reset_result_.done;
  timeout_ = false;
  return reset_result_;
}

const StepOutcome& Episode::step(const ActionCommand& a0, const ActionCommand& a1) {
  if (done_) throw std::logic_error("episode already finished");
  last_ = env_step(config_, state_, t_, a0, a1);
  state_ = last_.state;
  ++t_;
  done_ = last_.done;
  timeout_ = last_.timeout;
  return last_;
}

}  // namespace movingout
