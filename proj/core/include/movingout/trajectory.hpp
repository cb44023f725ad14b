#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "movingout/env.hpp"
#include "movingout/maps.hpp"

namespace movingout {

inline constexpr const char* kTrajectorySchema = "movingout-traj/1";

/// Where an augmented trajectory came from.
struct Provenance {
  /// "perturb" or "recombine".
  std::string method;
  std::vector<std::string> sources;
  /// Splice window (t1, t2), inclusive, for recombined trajectories.
  std::optional<std::pair<int, int>> splice;
  double sigma = 0.0;
  /// Agent whose stream is kept intact.
  int ego = 0;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct TrajectoryHeader {
  std::string id;
  MapSpec map;
  std::uint64_t seed = 0;
  int horizon = kDefaultHorizon;
  /// Attribute keys of the played items, in map order.
  std::vector<std::string> attributes;
  std::string policy_i;
  std::string policy_j;
  bool timeout = false;
  std::optional<Provenance> provenance;
  friend bool operator==(const TrajectoryHeader&, const TrajectoryHeader&) = default;
};

struct TrajectoryStep {
  int t = 0;
  WorldState state;
  /// Joint action applied at `state`; absent on the terminal record.
  std::optional<JointAction> action;
  /// Events produced by applying `action`.
  std::vector<Event> events;
};

bool operator==(const TrajectoryStep& a, const TrajectoryStep& b);

/// tau = (s_0, a_0, ..., s_T): one record per state, the last without action.
struct Trajectory {
  TrajectoryHeader header;
  std::vector<TrajectoryStep> steps;

  /// Number of transitions (applied joint actions).
  std::size_t length() const { return steps.empty() ? 0 : steps.size() - 1; }
  const WorldState& initial() const { return steps.front().state; }
  const WorldState& final() const { return steps.back().state; }
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Starts a trajectory for an episode; the first record holds the reset state.
Trajectory begin_trajectory(const EpisodeConfig& config, const WorldState& initial, std::string id = {});

/// Appends the transition produced by `action` from the last record.
void record_step(Trajectory& traj, const JointAction& action, const StepOutcome& outcome);

}  // namespace movingout
