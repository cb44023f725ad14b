#include "movingout/play/session.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "movingout/errors.hpp"

namespace movingout::play {

using nlohmann::json;

namespace {

[[noreturn]] void bad_request(const std::string& reason) { throw Error(ErrorKind::kBadRequest, reason); }

json parse_object(const std::string& message, const char* type) {
  json j;
  try {
    j = json::parse(message);
  } catch (const json::exception& e) {
    bad_request(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) bad_request("message must be a JSON object");
  if (!j.contains("type") || j["type"] != type) bad_request(std::string("expected a '") + type + "' message");
  return j;
}

double number(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (v.is_boolean()) return v.get<bool>() ? 1.0 : 0.0;
  if (!v.is_number()) bad_request(std::string("'") + key + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad_request(std::string("'") + key + "' must be finite");
  return d;
}

json rect_json(const Rect& r) { return json::array({r.min.x, r.min.y, r.max.x, r.max.y}); }

json action_json(const ActionCommand& a) { return json::array({a.move, a.heading.x, a.heading.y, a.grasp ? 1 : 0}); }

ActionCommand action_from_json(const json& j) {
  ActionCommand a;
  a.move = j.at(0).get<double>();
  a.heading = {j.at(1).get<double>(), j.at(2).get<double>()};
  a.grasp = j.at(3).get<int>() != 0;
  return a;
}

const char* end_reason(bool timeout) { return timeout ? "timeout" : "delivered"; }

}  // namespace

SessionRequest parse_hello(const std::string& message) {
  const json j = parse_object(message, "hello");
  SessionRequest r;
  try {
    if (!j.contains("map")) bad_request("hello needs a map");
    const json& m = j.at("map");
    if (m.is_number_integer()) {
      r.map = load_map(m.get<int>());
    } else if (m.is_string()) {
      r.map = load_map(m.get<std::string>());
    } else if (m.is_object()) {
      r.map = map_from_json(m.dump());
    } else {
      bad_request("map must be an id, a path or a map object");
    }
    validate_map(r.map);

    const std::string role = j.value("role", std::string("agent-i"));
    if (role == "agent-i") {
      r.human_agent = 0;
    } else if (role == "agent-j") {
      r.human_agent = 1;
    } else {
      bad_request("role must be agent-i or agent-j");
    }
    r.policy = parse_policy_arg(j.value("policy", std::string("scripted-helper")));
    r.mode = selection_mode_from_string(j.value("mode", std::string("raw")));
    if (j.contains("seed")) {
      if (!j["seed"].is_number_unsigned()) bad_request("seed must be a non-negative integer");
      r.seed = j["seed"].get<std::uint64_t>();
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kBadRequest) throw;
    bad_request(e.what());
  } catch (const json::exception& e) {
    bad_request(e.what());
  }
  return r;
}

ActionCommand parse_action(const std::string& message) {
  const json j = parse_object(message, "action");
  const std::array<double, 4> v{number(j, "move", 0.0), number(j, "cos", 1.0), number(j, "sin", 0.0),
                                number(j, "grasp", 0.0)};
  ActionCommand a;
  try {
    a = decode_action(v);
  } catch (const Error& e) {
    bad_request(e.what());
  }
  const double limit = PhysicsParams{}.max_move();
  a.move = std::clamp(a.move, -limit, limit);
  return a;
}

Session::Session(std::string id, SessionRequest request, const SessionOptions& options)
    : id_(std::move(id)), request_(std::move(request)), options_(options) {
  if (request_.mode == SelectionMode::kBassModel && !options_.model) {
    throw Error(ErrorKind::kBadRequest, "bass-model sessions need a dynamics model on the server");
  }
  config_.map = request_.map;
  config_.seed = request_.seed;
  config_.horizon = options_.max_ticks;
  try {
    policy_ = make_policy(request_.policy, config_.map);
  } catch (const Error& e) {
    throw Error(ErrorKind::kBadRequest, e.what());
  }
  const int agent = 1 - request_.human_agent;
  policy_rng_ = make_rng(request_.seed, static_cast<std::uint64_t>(agent) + 1);
  select_rng_ = make_rng(request_.seed, 100 + static_cast<std::uint64_t>(agent));
  episode_ = std::make_unique<Episode>(config_);
  const ResetResult& r = episode_->reset();
  traj_ = begin_trajectory(config_, r.state, id_);
  const std::string human = "human";
  traj_.header.policy_i = request_.human_agent == 0 ? human : policy_->name();
  traj_.header.policy_j = request_.human_agent == 1 ? human : policy_->name();
  if (request_.mode != SelectionMode::kRaw) field_ = std::make_shared<ProgressField>(r.state);
  done_ = r.done;
}

void Session::submit(const ActionCommand& action) { latched_ = action; }

void Session::tick() {
  if (done_) return;
  const int agent = 1 - request_.human_agent;
  const WorldState& state = episode_->state();
  ActionCommand own = policy_->act(episode_->observation(agent), &policy_rng_);
  if (request_.mode != SelectionMode::kRaw) {
    SelectionConfig sc;
    sc.n = options_.n_candidates;
    const LatentDynamics* model = request_.mode == SelectionMode::kBassModel ? options_.model.get() : nullptr;
    own = select_action(state, agent, *policy_, own, model, *field_, sc, select_rng_);
  }
  JointAction joint;
  ActionCommand idle;
  idle.heading = state.agents[static_cast<std::size_t>(request_.human_agent)].facing;
  joint[static_cast<std::size_t>(request_.human_agent)] = latched_.value_or(idle);
  joint[static_cast<std::size_t>(agent)] = own;
  latched_.reset();
  const StepOutcome& out = episode_->step(joint[0], joint[1]);
  record_step(traj_, joint, out);
  done_ = out.done;
  timeout_ = out.timeout;
}

MetricsReport Session::metrics() const {
  return evaluate_metrics(traj_, DistanceField::build(traj_.initial().geometry()));
}

std::string Session::state_message(bool with_geometry) const {
  const WorldState& s = episode_->state();
  json agents = json::array();
  for (const AgentBody& a : s.agents) {
    agents.push_back({{"x", a.position.x},
                      {"y", a.position.y},
                      {"cos", a.facing.x},
                      {"sin", a.facing.y},
                      {"hold", a.hold ? *a.hold : -1}});
  }
  json items = json::array();
  for (const ItemBody& it : s.items) {
    items.push_back({{"x", it.position.x},
                     {"y", it.position.y},
                     {"cos", it.facing.x},
                     {"sin", it.facing.y},
                     {"radius", it.footprint_radius},
                     {"size", to_string(it.size)},
                     {"shape", to_string(it.shape.kind)},
                     {"vertices", it.shape.vertices},
                     {"delivered", item_in_goal(it, s.geometry())}});
  }
  json j{{"type", "state"},
         {"session", id_},
         {"t", episode_->t()},
         {"max_ticks", options_.max_ticks},
         {"human", request_.human_agent == 0 ? "agent-i" : "agent-j"},
         {"agents", agents},
         {"items", items}};
  if (with_geometry) {
    json walls = json::array();
    for (const Rect& r : s.geometry().walls) walls.push_back(rect_json(r));
    json goals = json::array();
    for (const Rect& r : s.geometry().goals) goals.push_back(rect_json(r));
    j["walls"] = walls;
    j["goals"] = goals;
  }
  return j.dump();
}

std::string Session::end_message() const {
  json actions = json::array();
  for (std::size_t t = 0; t < traj_.length(); ++t) {
    const JointAction& a = *traj_.steps[t].action;
    actions.push_back(json::array({action_json(a[0]), action_json(a[1])}));
  }
  json log{{"map", json::parse(map_to_json(config_.map, -1))},
           {"seed", config_.seed},
           {"horizon", config_.horizon},
           {"actions", actions}};
  json j{{"type", "end"},
         {"session", id_},
         {"reason", end_reason(timeout_)},
         {"timeout", timeout_},
         {"t", episode_->t()},
         {"overruns", overruns_},
         {"metrics", json::parse(metrics_to_json(metrics()))},
         {"log", log}};
  return j.dump();
}

MetricsReport replay_session_log(const std::string& end_message) {
  json j;
  try {
    j = json::parse(end_message);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParseError, e.what());
  }
  const json& log = j.at("log");
  EpisodeConfig cfg;
  cfg.map = map_from_json(log.at("map").dump());
  cfg.seed = log.at("seed").get<std::uint64_t>();
  cfg.horizon = log.at("horizon").get<int>();
  Episode ep(cfg);
  Trajectory traj = begin_trajectory(cfg, ep.reset().state);
  for (const json& step : log.at("actions")) {
    if (ep.done()) throw Error(ErrorKind::kReplayDivergence, "log continues past the end of the episode");
    const JointAction a{action_from_json(step.at(0)), action_from_json(step.at(1))};
    record_step(traj, a, ep.step(a[0], a[1]));
  }
  return evaluate_metrics(traj, DistanceField::build(traj.initial().geometry()));
}

}  // namespace movingout::play
