#include "movingout/trajectory.hpp"

namespace movingout {

bool operator==(const TrajectoryStep& a, const TrajectoryStep& b) {
  return a.t == b.t && a.state == b.state && a.action == b.action && a.events == b.events;
}

Trajectory begin_trajectory(const EpisodeConfig& config, const WorldState& initial, std::string id) {
  Trajectory traj;
  traj.header.id = std::move(id);
  traj.header.map = resolved_map(config);
  traj.header.seed = config.seed;
  traj.header.horizon = config.horizon;
  for (const ItemSpec& item : traj.header.map.items) traj.header.attributes.push_back(attribute_key(item));
  traj.steps.push_back({0, initial, std::nullopt, {}});
  return traj;
}

void record_step(Trajectory& traj, const JointAction& action, const StepOutcome& outcome) {
  TrajectoryStep& last = traj.steps.back();
  last.action = action;
  last.events = outcome.events;
  traj.steps.push_back({last.t + 1, outcome.state, std::nullopt, {}});
  if (outcome.timeout) traj.header.timeout = true;
}

}  // namespace movingout
