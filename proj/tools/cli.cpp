#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "movingout/bass.hpp"
#include "movingout/data_io.hpp"
#include "movingout/errors.hpp"
#include "movingout/metrics.hpp"
#include "movingout/play/server.hpp"
#include "movingout/rollout.hpp"

#ifndef MOVINGOUT_VERSION
#define MOVINGOUT_VERSION "0.0.0"
#endif

namespace movingout::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void usage(const std::string& message) { throw Error(ErrorKind::kUsage, message); }

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage:
    case ErrorKind::kBadRequest:
      return kExitUsage;
    case ErrorKind::kReplayDivergence:
      return kExitDivergence;
    default:
      return kExitValidation;
  }
}

fs::path data_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("MOVINGOUT_DATA_DIR"); env && *env) return env;
  return "data";
}

int default_jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

/// Runs fn(0..n-1) on up to `jobs` threads. Results are stored by index, so
/// the outcome does not depend on scheduling.
template <typename F>
void parallel_for(std::size_t n, int jobs, F&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next.store(n);
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

struct Stat {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double stderr_ = std::numeric_limits<double>::quiet_NaN();
  std::size_t n = 0;
};

Stat summarize(const std::vector<double>& values) {
  std::vector<double> v;
  for (double x : values) {
    if (std::isfinite(x)) v.push_back(x);
  }
  Stat s;
  s.n = v.size();
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() < 2) {
    s.stderr_ = 0.0;
    return s;
  }
  double sq = 0.0;
  for (double x : v) sq += (x - s.mean) * (x - s.mean);
  s.stderr_ = std::sqrt(sq / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
  return s;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json stat_json(const Stat& s) { return {{"mean", finite_or_null(s.mean)}, {"stderr", finite_or_null(s.stderr_)}, {"n", s.n}}; }

std::string fmt_stat(const Stat& s) {
  if (s.n == 0) return "n/a";
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << s.mean << " +- " << s.stderr_;
  return os.str();
}

std::vector<MapSpec> load_maps(const std::vector<std::string>& args) {
  std::vector<MapSpec> out;
  for (const std::string& a : args) {
    const bool list = !a.empty() && std::all_of(a.begin(), a.end(), [](unsigned char c) {
      return std::isdigit(c) || c == '-' || c == ',';
    });
    if (list) {
      for (int id : parse_id_list(a)) out.push_back(load_map(id));
    } else {
      out.push_back(load_map(a));
    }
  }
  if (out.empty()) usage("no maps given");
  return out;
}

std::string map_label(const MapSpec& m) { return m.id > 0 ? std::to_string(m.id) : m.name; }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIO, "cannot write " + path.string());
  out << text;
}

std::string file_stem_for(const std::string& id) {
  std::string s = id;
  for (char& c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '+' || c == '@' || c == '.' ||
          c == '~')) {
      c = '_';
    }
  }
  return s;
}

MetricsReport metrics_of(const Trajectory& t, AcDenominator den) {
  return evaluate_metrics(t, DistanceField::build(t.initial().geometry()), den);
}

// ---- map-list ----

struct MapListOptions {
  bool json_out = false;
};

int cmd_map_list(const MapListOptions& o, std::ostream& out) {
  const auto maps = builtin_maps();
  if (o.json_out) {
    json arr = json::array();
    for (const MapSpec& m : maps) {
      json items = json::array();
      for (const ItemSpec& it : m.items) items.push_back(to_string(it.size));
      arr.push_back({{"id", m.id}, {"name", m.name}, {"category", to_string(m.category)}, {"items", items}});
    }
    out << json{{"tool_version", MOVINGOUT_VERSION}, {"maps", arr}}.dump(2) << "\n";
    return kExitOk;
  }
  out << std::left << std::setw(4) << "id" << std::setw(26) << "name" << std::setw(20) << "category"
      << "items\n";
  for (const MapSpec& m : maps) {
    std::map<std::string, int> counts;
    for (const ItemSpec& it : m.items) ++counts[to_string(it.size)];
    std::string items;
    for (const char* s : {"small", "medium", "large"}) {
      if (counts[s]) items += (items.empty() ? "" : " ") + std::to_string(counts[s]) + " " + s;
    }
    out << std::left << std::setw(4) << m.id << std::setw(26) << m.name << std::setw(20) << to_string(m.category)
        << items << "\n";
  }
  return kExitOk;
}

// ---- collect ----

struct CollectOptions {
  std::vector<std::string> maps{"1-12"};
  std::string seeds = "0-4";
  std::string policy_i;
  std::string policy_j;
  double noise = 0.0;
  bool randomize = false;
  std::string pool;
  double pool_ratio = 0.7;
  std::uint64_t pool_seed = 0;
  int horizon = kDefaultHorizon;
  std::string out;
  int jobs = default_jobs();
};

int cmd_collect(const CollectOptions& o, const fs::path& data, std::ostream& out) {
  const std::vector<MapSpec> maps = load_maps(o.maps);
  const std::vector<int> seeds = parse_id_list(o.seeds);
  if (o.horizon < 1) usage("horizon must be positive");
  if (o.noise < 0.0) usage("noise must be non-negative");
  if (!o.pool.empty() && o.pool != "train" && o.pool != "test") usage("pool must be train or test");
  const fs::path dir = o.out.empty() ? data / "trajectories" : fs::path(o.out);
  fs::create_directories(dir);

  std::set<std::string> exclude;
  if (!o.pool.empty()) {
    const AttributePools pools = attribute_pools(builtin_maps(), o.pool_ratio, o.pool_seed);
    exclude = o.pool == "train" ? pools.test : pools.train;
  }
  std::optional<PolicySpec> spec_i, spec_j;
  if (!o.policy_i.empty()) spec_i = parse_policy_arg(o.policy_i);
  if (!o.policy_j.empty()) spec_j = parse_policy_arg(o.policy_j);

  struct Job {
    std::size_t map;
    int seed;
  };
  std::vector<Job> jobs;
  for (std::size_t m = 0; m < maps.size(); ++m) {
    for (int s : seeds) jobs.push_back({m, s});
  }
  std::vector<MetricsReport> reports(jobs.size());
  parallel_for(jobs.size(), o.jobs, [&](std::size_t k) {
    const MapSpec& base = maps[jobs[k].map];
    const auto seed = static_cast<std::uint64_t>(jobs[k].seed);
    EpisodeConfig cfg;
    cfg.seed = seed;
    cfg.horizon = o.horizon;
    if (o.randomize || !o.pool.empty()) {
      RandomizeOptions ro;
      ro.exclude = exclude;
      cfg.map = randomize(base, seed, ro);
    } else {
      cfg.map = base;
    }
    auto [helper, greedy] = scripted_expert_pair(cfg.map, o.noise);
    const PolicyPtr pi = spec_i ? make_policy(*spec_i, cfg.map) : helper;
    const PolicyPtr pj = spec_j ? make_policy(*spec_j, cfg.map) : greedy;
    const std::string id = "m" + map_label(base) + "-s" + std::to_string(seed);
    const Trajectory t = run_episode(cfg, *pi, *pj, id);
    write_trajectory(t, dir / (id + ".jsonl"));
    reports[k] = metrics_of(t, AcDenominator::kJoint);
  });

  out << std::left << std::setw(6) << "map" << std::setw(10) << "episodes" << std::setw(20) << "tcr" << "nfd\n";
  for (std::size_t m = 0; m < maps.size(); ++m) {
    std::vector<double> tcr, nfd;
    for (std::size_t k = 0; k < jobs.size(); ++k) {
      if (jobs[k].map != m) continue;
      tcr.push_back(reports[k].tcr);
      nfd.push_back(reports[k].nfd);
    }
    out << std::left << std::setw(6) << map_label(maps[m]) << std::setw(10) << tcr.size() << std::setw(20)
        << fmt_stat(summarize(tcr)) << fmt_stat(summarize(nfd)) << "\n";
  }
  out << "wrote " << jobs.size() << " trajectories to " << dir.string() << "\n";
  return kExitOk;
}

// ---- augment ----

struct AugmentOptions {
  std::string in;
  std::string out;
  double sigma = 0.002;
  bool perturb_heading = true;
  bool validate = false;
  int ego = 0;
  std::uint64_t seed = 0;
  int min_window = 2;
  double penetration_limit = 0.01;
};

int cmd_augment(const AugmentOptions& o, const fs::path& data, std::ostream& out) {
  const std::string pattern = o.in.empty() ? (data / "trajectories").string() : o.in;
  const fs::path dir = o.out.empty() ? data / "augmented" : fs::path(o.out);
  if (o.sigma < 0.0) usage("sigma must be non-negative");
  if (o.ego != 0 && o.ego != 1) usage("ego must be 0 or 1");
  const std::vector<Trajectory> inputs = read_trajectories(pattern);
  fs::create_directories(dir);

  std::size_t perturbed = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    write_trajectory(inputs[i], dir / (file_stem_for(inputs[i].header.id) + ".jsonl"));
    if (o.sigma > 0.0) {
      Rng rng = make_rng(o.seed, i);
      Trajectory p = perturb_partner(inputs[i], {o.sigma, o.ego, o.perturb_heading}, rng);
      p.header.id = inputs[i].header.id + "~p";
      write_trajectory(p, dir / (file_stem_for(p.header.id) + ".jsonl"));
      ++perturbed;
    }
  }
  RecombineOptions ro;
  ro.ego = o.ego;
  ro.validate = o.validate;
  ro.min_window = o.min_window;
  ro.penetration_limit = o.penetration_limit;
  const std::vector<Trajectory> recombined = recombine(inputs, ro);
  for (const Trajectory& t : recombined) write_trajectory(t, dir / (file_stem_for(t.header.id) + ".jsonl"));
  out << "inputs " << inputs.size() << ", perturbed " << perturbed << ", recombined " << recombined.size()
      << (o.validate ? " (validated)" : "") << " -> " << dir.string() << "\n";
  return kExitOk;
}

// ---- train ----

struct TrainOptions {
  std::string data;
  std::string out;
  std::string split = "by-episode";
  double ratio = 0.8;
  std::uint64_t seed = 0;
  int epochs = -1;
  int batch = 256;
  double lr = 1e-3;
  int hidden = -1;
  int horizon = 1;
  int latent = 32;
  std::string report;
};

double held_out_bc_mse(const BcPolicy& policy, const nn::Dataset& d) {
  if (d.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  std::vector<double> obs(static_cast<std::size_t>(d.inputs.rows()));
  for (Eigen::Index c = 0; c < d.inputs.cols(); ++c) {
    for (Eigen::Index r = 0; r < d.inputs.rows(); ++r) obs[static_cast<std::size_t>(r)] = d.inputs(r, c);
    const nn::Vector p = policy.predict(obs);
    sum += (p - d.targets.col(c)).squaredNorm() / static_cast<double>(d.targets.rows());
  }
  return sum / static_cast<double>(d.size());
}

int cmd_train(const std::string& kind, const TrainOptions& o, const fs::path& data, std::ostream& out) {
  const std::string pattern = o.data.empty() ? (data / "trajectories").string() : o.data;
  const std::vector<Trajectory> trajs = read_trajectories(pattern);
  const Split split = split_dataset(trajs, split_mode_from_string(o.split), o.ratio, o.seed);
  const std::vector<Trajectory> train = select(trajs, split.train);
  const std::vector<Trajectory> test = select(trajs, split.test);
  json report{{"tool_version", MOVINGOUT_VERSION},
              {"command", "train"},
              {"kind", kind},
              {"split", o.split},
              {"train_episodes", train.size()},
              {"test_episodes", test.size()}};
  fs::path model_path;
  if (kind == "bc") {
    BcConfig cfg;
    if (o.hidden > 0) cfg.hidden = o.hidden;
    if (o.epochs >= 0) cfg.epochs = o.epochs;
    if (o.horizon < 1) usage("horizon must be at least 1");
    cfg.action_horizon = o.horizon;
    cfg.batch_size = o.batch;
    cfg.learning_rate = o.lr;
    cfg.seed = o.seed;
    const BcTrainResult r = train_bc(build_bc_pairs(train, cfg.action_horizon), cfg);
    model_path = o.out.empty() ? data / "models" / "bc.bin" : fs::path(o.out);
    if (model_path.has_parent_path()) fs::create_directories(model_path.parent_path());
    r.policy->save(model_path);
    report["loss_curve"] = r.loss_curve;
    report["test_mse"] = finite_or_null(held_out_bc_mse(*r.policy, build_bc_pairs(test, cfg.action_horizon)));
    out << "bc: " << train.size() << " train / " << test.size() << " test episodes, final loss "
        << (r.loss_curve.empty() ? 0.0 : r.loss_curve.back()) << ", held-out mse " << report["test_mse"].dump()
        << "\n";
  } else {
    DynamicsConfig cfg;
    if (o.hidden > 0) cfg.hidden = o.hidden;
    if (o.epochs >= 0) cfg.epochs = o.epochs;
    cfg.latent = o.latent;
    cfg.batch_size = o.batch;
    cfg.learning_rate = o.lr;
    cfg.seed = o.seed;
    const DynamicsTrainResult r = train_latent_dynamics(build_transitions(train), cfg);
    model_path = o.out.empty() ? data / "models" / "dynamics.bin" : fs::path(o.out);
    if (model_path.has_parent_path()) fs::create_directories(model_path.parent_path());
    r.model.save(model_path);
    const OneStepError e = one_step_error(r.model, build_transitions(test));
    report["loss_curve"] = r.loss_curve;
    report["test"] = {{"model_mse", e.model_mse},
                      {"persistence_mse", e.persistence_mse},
                      {"ego_position_error", e.ego_position_error}};
    out << "dynamics: " << train.size() << " train / " << test.size() << " test episodes, held-out mse "
        << e.model_mse << " vs persistence " << e.persistence_mse << "\n";
  }
  report["model"] = model_path.string();
  out << "model written to " << model_path.string() << "\n";
  if (!o.report.empty()) write_text(o.report, report.dump(2) + "\n");
  return kExitOk;
}

// ---- eval ----

struct EvalOptions {
  std::string policy;
  std::string policy_i = "scripted-helper";
  std::string policy_j = "scripted-greedy";
  double noise = -1.0;
  std::vector<std::string> modes;
  bool oracle = false;
  std::string model;
  int n_candidates = 8;
  std::string bass_agents = "both";
  std::vector<std::string> maps{"1-12"};
  int seeds = 20;
  std::uint64_t first_seed = 0;
  bool randomize = false;
  int horizon = kDefaultHorizon;
  std::string ac_denominator = "joint";
  int jobs = default_jobs();
  std::string report;
  bool json_out = false;
};

int cmd_eval(EvalOptions o, std::ostream& out) {
  if (o.seeds < 1) usage("eval needs at least one seed");
  if (o.n_candidates < 1) usage("n-candidates must be at least 1");
  if (o.horizon < 1) usage("horizon must be positive");
  if (o.modes.empty()) o.modes.push_back("raw");
  if (o.oracle && std::find(o.modes.begin(), o.modes.end(), "bass-oracle") == o.modes.end()) {
    o.modes.push_back("bass-oracle");
  }
  std::vector<SelectionMode> modes;
  for (const auto& m : o.modes) modes.push_back(selection_mode_from_string(m));
  const AcDenominator den = ac_denominator_from_string(o.ac_denominator);
  std::array<bool, kAgentCount> agents{true, true};
  if (o.bass_agents == "i") {
    agents = {true, false};
  } else if (o.bass_agents == "j") {
    agents = {false, true};
  } else if (o.bass_agents != "both") {
    usage("bass-agents must be i, j or both");
  }
  PolicySpec spec_i = parse_policy_arg(o.policy.empty() ? o.policy_i : o.policy);
  PolicySpec spec_j = parse_policy_arg(o.policy.empty() ? o.policy_j : o.policy);
  if (o.noise >= 0.0) {
    for (PolicySpec* s : {&spec_i, &spec_j}) {
      if (s->kind != PolicyKind::kBcMlp) s->noise = o.noise;
    }
  }
  std::shared_ptr<const LatentDynamics> model;
  if (std::find(modes.begin(), modes.end(), SelectionMode::kBassModel) != modes.end()) {
    if (o.model.empty()) usage("bass-model needs --model");
    model = std::make_shared<LatentDynamics>(LatentDynamics::load(o.model));
  }
  const std::vector<MapSpec> maps = load_maps(o.maps);

  struct Job {
    std::size_t mode;
    std::size_t map;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t md = 0; md < modes.size(); ++md) {
    for (std::size_t m = 0; m < maps.size(); ++m) {
      for (int s = 0; s < o.seeds; ++s) jobs.push_back({md, m, o.first_seed + static_cast<std::uint64_t>(s)});
    }
  }
  std::vector<MetricsReport> results(jobs.size());
  parallel_for(jobs.size(), o.jobs, [&](std::size_t k) {
    const Job& j = jobs[k];
    EpisodeConfig cfg;
    cfg.map = maps[j.map];
    cfg.seed = j.seed;
    cfg.horizon = o.horizon;
    cfg.randomize_attributes = o.randomize;
    const MapSpec played = resolved_map(cfg);
    const PolicyPtr pi = make_policy(spec_i, played);
    const PolicyPtr pj = make_policy(spec_j, played);
    ActionFilter filter;
    if (modes[j.mode] != SelectionMode::kRaw) {
      SelectionConfig sc;
      sc.n = o.n_candidates;
      filter = make_bass_filter({pi, pj}, agents, modes[j.mode] == SelectionMode::kBassModel ? model : nullptr,
                                std::make_shared<ProgressField>(initial_state(played)), sc, j.seed);
    }
    const Trajectory t = run_episode(cfg, *pi, *pj, {}, filter);
    results[k] = metrics_of(t, den);
  });

  json runs = json::array();
  std::ostringstream table;
  table << std::left << std::setw(13) << "mode" << std::setw(6) << "map" << std::setw(18) << "tcr" << std::setw(18)
        << "nfd" << std::setw(18) << "wt_seconds" << "ac\n";
  for (std::size_t md = 0; md < modes.size(); ++md) {
    json per_map = json::array();
    std::vector<double> all_tcr, all_nfd, all_wt, all_ac;
    for (std::size_t m = 0; m < maps.size(); ++m) {
      std::vector<double> tcr, nfd, wt, ac;
      for (std::size_t k = 0; k < jobs.size(); ++k) {
        if (jobs[k].mode != md || jobs[k].map != m) continue;
        tcr.push_back(results[k].tcr);
        nfd.push_back(results[k].nfd);
        wt.push_back(results[k].wt_seconds);
        ac.push_back(results[k].ac);
      }
      all_tcr.insert(all_tcr.end(), tcr.begin(), tcr.end());
      all_nfd.insert(all_nfd.end(), nfd.begin(), nfd.end());
      all_wt.insert(all_wt.end(), wt.begin(), wt.end());
      all_ac.insert(all_ac.end(), ac.begin(), ac.end());
      const Stat st = summarize(tcr), sn = summarize(nfd), sw = summarize(wt), sa = summarize(ac);
      per_map.push_back({{"map", maps[m].id > 0 ? json(maps[m].id) : json(maps[m].name)},
                         {"episodes", tcr.size()},
                         {"tcr", stat_json(st)},
                         {"nfd", stat_json(sn)},
                         {"wt_seconds", stat_json(sw)},
                         {"ac", stat_json(sa)}});
      table << std::left << std::setw(13) << to_string(modes[md]) << std::setw(6) << map_label(maps[m])
            << std::setw(18) << fmt_stat(st) << std::setw(18) << fmt_stat(sn) << std::setw(18) << fmt_stat(sw)
            << fmt_stat(sa) << "\n";
    }
    runs.push_back({{"mode", to_string(modes[md])},
                    {"maps", per_map},
                    {"overall",
                     {{"tcr", stat_json(summarize(all_tcr))},
                      {"nfd", stat_json(summarize(all_nfd))},
                      {"wt_seconds", stat_json(summarize(all_wt))},
                      {"ac", stat_json(summarize(all_ac))}}}});
  }
  const json report{{"tool_version", MOVINGOUT_VERSION},
                    {"command", "eval"},
                    {"policy_i", json::parse(policy_spec_to_json(spec_i, -1))},
                    {"policy_j", json::parse(policy_spec_to_json(spec_j, -1))},
                    {"seeds", o.seeds},
                    {"first_seed", o.first_seed},
                    {"n_candidates", o.n_candidates},
                    {"bass_agents", o.bass_agents},
                    {"ac_denominator", o.ac_denominator},
                    {"randomize", o.randomize},
                    {"runs", runs}};
  if (!o.report.empty()) write_text(o.report, report.dump(2) + "\n");
  if (o.json_out) {
    out << report.dump(2) << "\n";
  } else {
    out << table.str();
  }
  return kExitOk;
}

// ---- replay ----

struct ReplayOptions {
  std::vector<std::string> files;
  bool check = false;
  std::string ac_denominator = "joint";
};

int cmd_replay(const ReplayOptions& o, std::ostream& out, std::ostream& err) {
  std::vector<fs::path> files;
  for (const std::string& f : o.files) {
    if (fs::is_directory(f) || f.find_first_of("*?[") != std::string::npos) {
      const auto matched = match_trajectory_files(f);
      files.insert(files.end(), matched.begin(), matched.end());
    } else {
      files.emplace_back(f);
    }
  }
  if (files.empty()) throw Error(ErrorKind::kEmptyDataset, "no trajectory files");
  const AcDenominator den = ac_denominator_from_string(o.ac_denominator);
  for (const fs::path& f : files) {
    const Trajectory t = read_trajectory(f);
    if (o.check) {
      try {
        replay_check(t);
      } catch (const ReplayDivergence& e) {
        err << f.string() << ": divergence at step " << e.step() << ": " << e.what() << "\n";
        return kExitDivergence;
      }
      out << "ok " << f.string() << " (" << t.length() << " steps)\n";
    } else {
      out << f.string() << " " << metrics_to_json(metrics_of(t, den)) << "\n";
    }
  }
  return kExitOk;
}

// ---- play ----

struct PlayOptions {
  std::string address = "0.0.0.0";
  int port = 8808;
  int max_sessions = 8;
  int tick_ms = 100;
  int n_candidates = 8;
  std::string model;
  std::string static_dir;
};

int cmd_play(const PlayOptions& o, std::ostream& out) {
  if (o.port < 0 || o.port > 65535) usage("port out of range");
  play::ServerOptions so;
  so.address = o.address;
  so.port = static_cast<std::uint16_t>(o.port);
  so.max_sessions = o.max_sessions;
  so.tick_ms = o.tick_ms;
  so.n_candidates = o.n_candidates;
  so.static_dir = o.static_dir;
  if (!o.model.empty()) so.model = std::make_shared<LatentDynamics>(LatentDynamics::load(o.model));
  play::Server server(so);
  out << "serving on http://" << o.address << ":" << server.port() << "/ (max " << o.max_sessions << " sessions)"
      << std::endl;
  server.run();
  return kExitOk;
}

}  // namespace

std::vector<int> parse_id_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string part;
  auto number = [&](const std::string& s) {
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) {
      usage("bad number '" + s + "' in list '" + text + "'");
    }
    return std::stoi(s);
  };
  while (std::getline(ss, part, ',')) {
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      out.push_back(number(part));
      continue;
    }
    const int lo = number(part.substr(0, dash));
    const int hi = number(part.substr(dash + 1));
    if (hi < lo) usage("empty range '" + part + "'");
    for (int i = lo; i <= hi; ++i) out.push_back(i);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.empty()) usage("empty list");
  return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-agent cooperative item transport: data collection, augmentation, training, evaluation and live play"};
  app.name("movingout");
  app.set_help_flag();
  app.set_help_all_flag("-h,--help", "Print help for every subcommand and exit");
  app.set_version_flag("--version", MOVINGOUT_VERSION);
  app.require_subcommand(1);
  std::string data_flag;
  app.add_option("--data-dir", data_flag, "Default location of trajectories and models (env MOVINGOUT_DATA_DIR)");

  MapListOptions ml;
  auto* map_list = app.add_subcommand("map-list", "List the built-in maps");
  map_list->add_flag("--json", ml.json_out, "Print JSON");

  CollectOptions co;
  auto* collect = app.add_subcommand("collect", "Run scripted pairs and write trajectory files");
  collect->add_option("--maps", co.maps, "Map ids (1-12, 3,5) or map files")->capture_default_str();
  collect->add_option("--seeds", co.seeds, "Seed list, e.g. 0-4 or 1,3,9")->capture_default_str();
  collect->add_option("--policy-i", co.policy_i, "Policy for agent i (default: scripted helper)");
  collect->add_option("--policy-j", co.policy_j, "Policy for agent j (default: scripted greedy)");
  collect->add_option("--noise", co.noise, "Heading noise of the default scripted pair")->capture_default_str();
  collect->add_flag("--randomize", co.randomize, "Resample item attributes per seed");
  collect->add_option("--pool", co.pool, "Restrict randomized attributes to the train or test pool")
      ->check(CLI::IsMember({"train", "test"}));
  collect->add_option("--pool-ratio", co.pool_ratio, "Share of attribute keys in the train pool")->capture_default_str();
  collect->add_option("--pool-seed", co.pool_seed, "Seed of the attribute pool partition")->capture_default_str();
  collect->add_option("--horizon", co.horizon, "Episode step limit")->capture_default_str();
  collect->add_option("--out", co.out, "Output directory (default <data-dir>/trajectories)");
  collect->add_option("--jobs", co.jobs, "Worker threads")->capture_default_str();

  AugmentOptions ao;
  auto* augment = app.add_subcommand("augment", "Perturb and recombine trajectories");
  augment->add_option("--in", ao.in, "Input directory or glob (default <data-dir>/trajectories)");
  augment->add_option("--out", ao.out, "Output directory (default <data-dir>/augmented)");
  augment->add_option("--sigma", ao.sigma, "Partner perturbation std-dev; 0 disables")->capture_default_str();
  augment->add_flag("--perturb-heading,!--no-perturb-heading", ao.perturb_heading,
                    "Also perturb the partner heading (default on)");
  augment->add_flag("--validate-augment", ao.validate, "Drop recombinations that leave the valid state space");
  augment->add_option("--ego", ao.ego, "Agent whose stream stays intact")->capture_default_str();
  augment->add_option("--seed", ao.seed, "Perturbation seed")->capture_default_str();
  augment->add_option("--min-window", ao.min_window, "Shortest splice window")->capture_default_str();
  augment->add_option("--penetration-limit", ao.penetration_limit, "Overlap depth tolerated by validation")
      ->capture_default_str();

  TrainOptions to;
  std::string train_kind;
  auto* train = app.add_subcommand("train", "Train a behaviour cloning policy or a latent dynamics model");
  train->add_option("kind", train_kind, "bc or dynamics")->required()->check(CLI::IsMember({"bc", "dynamics"}));
  train->add_option("--data", to.data, "Trajectory directory or glob (default <data-dir>/trajectories)");
  train->add_option("--out", to.out, "Model file (default <data-dir>/models/<kind>.bin)");
  train->add_option("--split", to.split, "by-episode or by-attribute")
      ->check(CLI::IsMember({"by-episode", "by-attribute"}))
      ->capture_default_str();
  train->add_option("--ratio", to.ratio, "Training share")->capture_default_str();
  train->add_option("--seed", to.seed, "Split and initialization seed")->capture_default_str();
  train->add_option("--epochs", to.epochs, "Training epochs (default 60 for bc, 30 for dynamics)");
  train->add_option("--batch", to.batch, "Batch size")->capture_default_str();
  train->add_option("--lr", to.lr, "Adam learning rate")->capture_default_str();
  train->add_option("--hidden", to.hidden, "Hidden layer width (default 256 for bc, 128 for dynamics)");
  train->add_option("--horizon", to.horizon, "bc: predicted action horizon")->capture_default_str();
  train->add_option("--latent", to.latent, "dynamics: latent width")->capture_default_str();
  train->add_option("--report", to.report, "Write a JSON report here");

  EvalOptions eo;
  auto* eval = app.add_subcommand("eval", "Evaluate policies over maps and seeds");
  eval->add_option("--policy", eo.policy, "Policy for both agents");
  eval->add_option("--policy-i", eo.policy_i, "Policy for agent i")->capture_default_str();
  eval->add_option("--policy-j", eo.policy_j, "Policy for agent j")->capture_default_str();
  eval->add_option("--noise", eo.noise, "Heading noise for scripted policies");
  eval->add_option("--mode", eo.modes, "raw, bass-model or bass-oracle; repeat to compare (default raw)");
  eval->add_flag("--oracle", eo.oracle, "Add a bass-oracle run (physics-scored selection)");
  eval->add_option("--model", eo.model, "Dynamics model for bass-model")->check(CLI::ExistingFile);
  eval->add_option("--n-candidates", eo.n_candidates, "Candidate actions per selection")->capture_default_str();
  eval->add_option("--bass-agents", eo.bass_agents, "Agents using selection: i, j or both")->capture_default_str();
  eval->add_option("--maps", eo.maps, "Map ids or files")->capture_default_str();
  eval->add_option("--seeds", eo.seeds, "Episodes per map")->capture_default_str();
  eval->add_option("--first-seed", eo.first_seed, "First episode seed")->capture_default_str();
  eval->add_flag("--randomize", eo.randomize, "Resample item attributes per seed");
  eval->add_option("--horizon", eo.horizon, "Episode step limit")->capture_default_str();
  eval->add_option("--ac-denominator", eo.ac_denominator, "Action consistency denominator: joint or total")
      ->check(CLI::IsMember({"joint", "total"}))
      ->capture_default_str();
  eval->add_option("--jobs", eo.jobs, "Worker threads")->capture_default_str();
  eval->add_option("--report", eo.report, "Write the JSON report here");
  eval->add_flag("--json", eo.json_out, "Print the JSON report instead of the table");

  ReplayOptions ro;
  auto* replay = app.add_subcommand("replay", "Re-simulate stored trajectories");
  replay->add_option("files", ro.files, "Trajectory files, directories or globs")->required();
  replay->add_flag("--check", ro.check, "Verify bit-exact state match");
  replay->add_option("--ac-denominator", ro.ac_denominator, "Action consistency denominator for reports")
      ->check(CLI::IsMember({"joint", "total"}))
      ->capture_default_str();

  PlayOptions po;
  auto* play_cmd = app.add_subcommand("play", "Host live human-policy sessions over WebSocket");
  play_cmd->add_option("--address", po.address, "Listen address")->capture_default_str();
  play_cmd->add_option("--port", po.port, "Listen port")->capture_default_str();
  play_cmd->add_option("--max-sessions", po.max_sessions, "Concurrent sessions")->capture_default_str();
  play_cmd->add_option("--tick-ms", po.tick_ms, "Tick period in milliseconds")->capture_default_str();
  play_cmd->add_option("--n-candidates", po.n_candidates, "Candidate actions for bass sessions")
      ->capture_default_str();
  play_cmd->add_option("--model", po.model, "Dynamics model for bass-model sessions")->check(CLI::ExistingFile);
  play_cmd->add_option("--static-dir", po.static_dir, "Serve client files from here")->check(CLI::ExistingDirectory);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const fs::path data = data_dir(data_flag);
  try {
    if (*map_list) return cmd_map_list(ml, out);
    if (*collect) return cmd_collect(co, data, out);
    if (*augment) return cmd_augment(ao, data, out);
    if (*train) return cmd_train(train_kind, to, data, out);
    if (*eval) return cmd_eval(eo, out);
    if (*replay) return cmd_replay(ro, out, err);
    if (*play_cmd) return cmd_play(po, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace movingout::cli
