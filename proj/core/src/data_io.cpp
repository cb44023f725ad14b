#include "movingout/data_io.hpp"

#include <glob.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json_util.hpp"
#include "movingout/errors.hpp"
#include "movingout/rng.hpp"
#include "movingout/policies.hpp"

namespace movingout {

using detail::json;

namespace {

CollisionKind collision_kind_from_string(const std::string& s) {
  for (auto k : {CollisionKind::kAgentWall, CollisionKind::kAgentAgent, CollisionKind::kItemWall,
                 CollisionKind::kItemItem, CollisionKind::kAgentItem}) {
    if (s == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown collision kind '" + s + "'");
}

json action_json(const ActionCommand& a) { return json::array({a.move, a.heading.x, a.heading.y, a.grasp ? 1 : 0}); }

ActionCommand action_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw std::invalid_argument("action must be [move, cos, sin, grasp]");
  ActionCommand a;
  a.move = j.at(0).get<double>();
  a.heading = {j.at(1).get<double>(), j.at(2).get<double>()};
  a.grasp = j.at(3).get<double>() >= 0.5;
  return a;
}

json event_json(const Event& e) {
  json j{{"kind", to_string(e.kind)}, {"a", e.first}, {"b", e.second}};
  if (e.kind == EventKind::kCollision) j["contact"] = to_string(e.contact);
  return j;
}

Event event_from_json(const json& j) {
  Event e;
  e.kind = event_kind_from_string(j.at("kind").get<std::string>());
  e.first = j.at("a").get<int>();
  e.second = j.at("b").get<int>();
  if (j.contains("contact")) e.contact = collision_kind_from_string(j.at("contact").get<std::string>());
  return e;
}

json header_json(const TrajectoryHeader& h) {
  json j{{"schema", kTrajectorySchema},
         {"id", h.id},
         {"map_id", h.map.id},
         {"map_hash", map_hash(h.map)},
         {"map", json::parse(map_to_json(h.map, -1))},
         {"seed", h.seed},
         {"horizon", h.horizon},
         {"attributes", h.attributes},
         {"policy_i", h.policy_i},
         {"policy_j", h.policy_j},
         {"timeout", h.timeout}};
  if (h.provenance) {
    const Provenance& p = *h.provenance;
    json pj{{"method", p.method}, {"sources", p.sources}, {"sigma", p.sigma}, {"ego", p.ego}};
    if (p.splice) pj["splice"] = json::array({p.splice->first, p.splice->second});
    j["provenance"] = pj;
  }
  return j;
}

TrajectoryHeader header_from_json(const json& j) {
  TrajectoryHeader h;
  h.id = j.at("id").get<std::string>();
  h.map = map_from_json(j.at("map").dump());
  if (j.contains("map_hash") && j.at("map_hash").get<std::uint64_t>() != map_hash(h.map)) {
    throw std::invalid_argument("map hash does not match the embedded map");
  }
  h.seed = j.at("seed").get<std::uint64_t>();
  h.horizon = j.at("horizon").get<int>();
  h.attributes = j.at("attributes").get<std::vector<std::string>>();
  h.policy_i = j.value("policy_i", "");
  h.policy_j = j.value("policy_j", "");
  h.timeout = j.value("timeout", false);
  if (j.contains("provenance")) {
    const json& pj = j.at("provenance");
    Provenance p;
    p.method = pj.at("method").get<std::string>();
    p.sources = pj.at("sources").get<std::vector<std::string>>();
    p.sigma = pj.value("sigma", 0.0);
    p.ego = pj.value("ego", 0);
    if (pj.contains("splice")) p.splice = std::make_pair(pj.at("splice").at(0).get<int>(), pj.at("splice").at(1).get<int>());
    h.provenance = p;
  }
  return h;
}

json step_json(const TrajectoryStep& s) {
  json holds = json::array();
  for (const AgentBody& a : s.state.agents) holds.push_back(a.hold ? *a.hold : -1);
  json j{{"t", s.t}, {"state", state_vector(s.state)}, {"holds", holds}};
  if (s.action) {
    j["action_i"] = action_json((*s.action)[0]);
    j["action_j"] = action_json((*s.action)[1]);
  }
  json events = json::array();
  for (const Event& e : s.events) events.push_back(event_json(e));
  j["events"] = events;
  return j;
}

TrajectoryStep step_from_json(const json& j, const MapSpec& map) {
  TrajectoryStep s;
  s.t = j.at("t").get<int>();
  const auto vec = j.at("state").get<std::vector<double>>();
  if (vec.size() != observation_width(map.items.size())) {
    throw std::invalid_argument("state width " + std::to_string(vec.size()) + " does not match the map");
  }
  const auto holds = j.at("holds").get<std::vector<int>>();
  if (holds.size() != kAgentCount) throw std::invalid_argument("holds must list both agents");
  for (int h : holds) {
    if (h < -1 || h >= static_cast<int>(map.items.size())) throw std::invalid_argument("hold index out of range");
  }
  s.state = state_from_vector(vec, {holds[0], holds[1]}, map);
  if (j.contains("action_i")) {
    s.action = JointAction{action_from_json(j.at("action_i")), action_from_json(j.at("action_j"))};
  }
  for (const json& e : j.at("events")) s.events.push_back(event_from_json(e));
  return s;
}

}  // namespace

std::string trajectory_to_jsonl(const Trajectory& traj) {
  std::string out = header_json(traj.header).dump();
  out += '\n';
  for (const TrajectoryStep& s : traj.steps) {
    out += step_json(s).dump();
    out += '\n';
  }
  return out;
}

Trajectory trajectory_from_jsonl(const std::string& text) {
  Trajectory traj;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::shared_ptr<const Arena> arena;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(line_no, e.what());
    }
    if (!have_header) {
      if (!j.is_object() || !j.contains("schema")) throw ParseError(line_no, "missing header record");
      const std::string schema = j.at("schema").is_string() ? j.at("schema").get<std::string>() : "";
      if (schema != kTrajectorySchema) {
        throw Error(ErrorKind::kSchemaVersion, "expected '" + std::string(kTrajectorySchema) + "', got '" + schema + "'");
      }
      try {
        traj.header = header_from_json(j);
      } catch (const ParseError&) {
        throw;
      } catch (const std::exception& e) {
        throw ParseError(line_no, e.what());
      }
      arena = traj.header.map.arena();
      have_header = true;
      continue;
    }
    try {
      TrajectoryStep s = step_from_json(j, traj.header.map);
      s.state.arena = arena;
      if (s.t != static_cast<int>(traj.steps.size())) throw std::invalid_argument("step index out of sequence");
      traj.steps.push_back(std::move(s));
    } catch (const std::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  if (!have_header) throw ParseError(line_no + 1, "empty trajectory file");
  if (traj.steps.empty()) throw ParseError(line_no + 1, "trajectory has no states");
  for (std::size_t i = 0; i + 1 < traj.steps.size(); ++i) {
    if (!traj.steps[i].action) throw ParseError(i + 2, "non-terminal record without actions");
  }
  if (traj.steps.back().action) throw ParseError(line_no, "terminal record carries actions");
  if (static_cast<int>(traj.length()) > traj.header.horizon) throw ParseError(line_no, "more steps than the horizon");
  return traj;
}

void write_trajectory(const Trajectory& traj, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIO, "cannot write " + path.string());
  out << trajectory_to_jsonl(traj);
  if (!out) throw Error(ErrorKind::kIO, "write failed for " + path.string());
}

Trajectory read_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIO, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return trajectory_from_jsonl(ss.str());
}

std::vector<std::filesystem::path> match_trajectory_files(const std::string& pattern) {
  namespace fs = std::filesystem;
  std::vector<fs::path> out;
  std::error_code ec;
  if (fs::is_directory(pattern, ec)) {
    for (const auto& e : fs::directory_iterator(pattern)) {
      if (e.is_regular_file() && e.path().extension() == ".jsonl") out.push_back(e.path());
    }
  } else {
    glob_t g{};
    if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    }
    globfree(&g);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Trajectory> read_trajectories(const std::string& pattern) {
  const auto files = match_trajectory_files(pattern);
  if (files.empty()) throw Error(ErrorKind::kEmptyDataset, "no trajectory files match '" + pattern + "'");
  std::vector<Trajectory> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(read_trajectory(f));
  return out;
}

EpisodeConfig replay_config(const Trajectory& traj) {
  EpisodeConfig cfg;
  cfg.map = traj.header.map;
  cfg.seed = traj.header.seed;
  cfg.horizon = traj.header.horizon;
  cfg.randomize_attributes = false;
  return cfg;
}

void replay_check(const Trajectory& traj) {
  if (traj.steps.empty()) throw ReplayDivergence(0, "trajectory has no states");
  const EpisodeConfig cfg = replay_config(traj);
  const ResetResult r = reset(cfg);
  if (!(r.state == traj.steps.front().state)) throw ReplayDivergence(0, "initial state differs from the map");
  WorldState s = r.state;
  for (std::size_t t = 0; t + 1 < traj.steps.size(); ++t) {
    const TrajectoryStep& rec = traj.steps[t];
    if (!rec.action) throw ReplayDivergence(static_cast<int>(t), "missing action");
    const StepOutcome out = env_step(cfg, s, static_cast<int>(t), (*rec.action)[0], (*rec.action)[1]);
    if (!(out.state == traj.steps[t + 1].state)) {
      throw ReplayDivergence(static_cast<int>(t + 1), "re-simulated state differs from the log");
    }
    if (out.events != rec.events) throw ReplayDivergence(static_cast<int>(t + 1), "events differ from the log");
    if (out.done && t + 2 < traj.steps.size()) {
      throw ReplayDivergence(static_cast<int>(t + 1), "episode ended before the log does");
    }
    s = out.state;
  }
}

DatasetKind dataset_kind_from_string(const std::string& s) {
  if (s == "bc-pairs") return DatasetKind::kBcPairs;
  if (s == "transitions") return DatasetKind::kTransitions;
  throw Error(ErrorKind::kUsage, "unknown dataset kind '" + s + "'");
}

namespace {

std::size_t common_width(const std::vector<Trajectory>& trajs) {
  if (trajs.empty()) throw Error(ErrorKind::kEmptyDataset, "no trajectories");
  const std::size_t w = observation_width(trajs.front().initial().items.size());
  for (const Trajectory& t : trajs) {
    const std::size_t wt = observation_width(t.initial().items.size());
    if (wt != w) {
      throw Error(ErrorKind::kWidthMismatch, "trajectory '" + t.header.id + "' has state width " + std::to_string(wt) +
                                                 ", expected " + std::to_string(w));
    }
  }
  return w;
}

void put_column(nn::Matrix& m, Eigen::Index col, std::span<const double> values) {
  for (std::size_t r = 0; r < values.size(); ++r) m(static_cast<Eigen::Index>(r), col) = values[r];
}

}  // namespace

nn::Dataset build_bc_pairs(const std::vector<Trajectory>& trajs, int horizon) {
  if (horizon < 1) throw Error(ErrorKind::kUsage, "horizon must be at least 1");
  const std::size_t w = common_width(trajs);
  std::size_t n = 0;
  for (const Trajectory& t : trajs) n += kAgentCount * t.length();
  if (n == 0) throw Error(ErrorKind::kEmptyDataset, "trajectories contain no actions");
  nn::Dataset d;
  d.inputs.resize(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(n));
  d.targets.resize(4 * horizon, static_cast<Eigen::Index>(n));
  Eigen::Index col = 0;
  for (const Trajectory& traj : trajs) {
    const std::size_t len = traj.length();
    for (std::size_t t = 0; t < len; ++t) {
      for (int k = 0; k < kAgentCount; ++k, ++col) {
        put_column(d.inputs, col, encode_observation(traj.steps[t].state, k));
        for (int h = 0; h < horizon; ++h) {
          const std::size_t th = std::min(t + static_cast<std::size_t>(h), len - 1);
          const auto target = bc_target((*traj.steps[th].action)[k]);
          for (int r = 0; r < 4; ++r) d.targets(4 * h + r, col) = target[r];
        }
      }
    }
  }
  return d;
}

TransitionSet build_transitions(const std::vector<Trajectory>& trajs) {
  const std::size_t w = common_width(trajs);
  std::size_t n = 0;
  for (const Trajectory& t : trajs) n += kAgentCount * t.length();
  if (n == 0) throw Error(ErrorKind::kEmptyDataset, "trajectories contain no transitions");
  TransitionSet ts;
  const auto W = static_cast<Eigen::Index>(w);
  const auto N = static_cast<Eigen::Index>(n);
  ts.state.resize(W, N);
  ts.next_state.resize(W, N);
  ts.action.resize(4, N);
  ts.partner_action.resize(4, N);
  Eigen::Index col = 0;
  for (const Trajectory& traj : trajs) {
    for (std::size_t t = 0; t < traj.length(); ++t) {
      const JointAction& a = *traj.steps[t].action;
      for (int k = 0; k < kAgentCount; ++k, ++col) {
        put_column(ts.state, col, encode_observation(traj.steps[t].state, k));
        put_column(ts.next_state, col, encode_observation(traj.steps[t + 1].state, k));
        const auto own = encode_action(a[k]);
        const auto partner = encode_action(a[1 - k]);
        put_column(ts.action, col, own);
        put_column(ts.partner_action, col, partner);
      }
    }
  }
  return ts;
}

SplitMode split_mode_from_string(const std::string& s) {
  if (s == "by-episode") return SplitMode::kByEpisode;
  if (s == "by-attribute") return SplitMode::kByAttribute;
  throw Error(ErrorKind::kUsage, "unknown split mode '" + s + "'");
}

Split split_dataset(const std::vector<Trajectory>& trajs, SplitMode mode, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error(ErrorKind::kUsage, "split ratio must lie in (0, 1)");
  const std::size_t n = trajs.size();
  if (n < 2) throw Error(ErrorKind::kInfeasibleSplit, "need at least two episodes to split");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed, 0x5e11);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));

  Split out;
  if (mode == SplitMode::kByEpisode) {
    const std::size_t k = std::clamp<std::size_t>(n_train, 1, n - 1);
    out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
  } else {
    // Episodes sharing an attribute key form one group (union-find).
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    std::map<std::string, std::size_t> owner;
    for (std::size_t i = 0; i < n; ++i) {
      for (const std::string& key : trajs[i].header.attributes) {
        auto [it, fresh] = owner.emplace(key, i);
        if (!fresh) parent[find(i)] = find(it->second);
      }
    }
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i : order) groups[find(i)].push_back(i);
    std::vector<std::vector<std::size_t>> comps;
    for (auto& [root, members] : groups) comps.push_back(std::move(members));
    // Shuffled order first, then largest groups placed first (best fit).
    std::shuffle(comps.begin(), comps.end(), rng);
    std::stable_sort(comps.begin(), comps.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
    for (const auto& c : comps) {
      auto& side = out.train.size() + c.size() <= std::max<std::size_t>(n_train, 1) ? out.train : out.test;
      side.insert(side.end(), c.begin(), c.end());
    }
    if (out.train.empty() || out.test.empty()) {
      throw Error(ErrorKind::kInfeasibleSplit, "attribute pools overlap across every episode");
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

AttributePools attribute_pools(const std::vector<MapSpec>& maps, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error(ErrorKind::kUsage, "pool ratio must lie in (0, 1)");
  std::set<std::string> keys;
  for (const MapSpec& m : maps) {
    for (const ItemSpec& it : m.items) {
      for (const ItemSpec& v : attribute_variants(it)) keys.insert(attribute_key(v));
    }
  }
  std::vector<std::string> order(keys.begin(), keys.end());
  Rng rng = make_rng(seed, 0xa77);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(order.size())));
  AttributePools pools;
  for (std::size_t i = 0; i < order.size(); ++i) (i < n_train ? pools.train : pools.test).insert(order[i]);
  if (pools.train.empty() || pools.test.empty()) {
    throw Error(ErrorKind::kInfeasibleSplit, "too few attribute variants to form two pools");
  }
  return pools;
}

}  // namespace movingout
