#include "movingout/rollout.hpp"

namespace movingout {

Trajectory run_episode(const EpisodeConfig& config, const Policy& policy_i, const Policy& policy_j, std::string id,
                       const ActionFilter& filter) {
  EpisodeConfig cfg = config;
  cfg.map = resolved_map(config);
  cfg.randomize_attributes = false;
  Episode ep(cfg);
  const ResetResult& r = ep.reset();
  Trajectory traj = begin_trajectory(config, r.state, std::move(id));
  traj.header.policy_i = policy_i.name();
  traj.header.policy_j = policy_j.name();
  std::array<Rng, kAgentCount> rngs{make_rng(config.seed, 1), make_rng(config.seed, 2)};
  std::array<Observation, kAgentCount> obs = r.observations;
  bool done = r.done;
  while (!done) {
    JointAction a{policy_i.act(obs[0], &rngs[0]), policy_j.act(obs[1], &rngs[1])};
    if (filter) a = filter(ep.state(), obs, a, ep.t());
    const StepOutcome& out = ep.step(a[0], a[1]);
    record_step(traj, a, out);
    obs = out.observations;
    done = out.done;
  }
  return traj;
}

}  // namespace movingout
