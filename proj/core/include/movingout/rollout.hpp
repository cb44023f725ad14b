#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "movingout/policies.hpp"
#include "movingout/trajectory.hpp"

namespace movingout {

/// Optional per-step override of the joint action (e.g. action selection).
/// Receives the current state, both observations and the proposed action.
using ActionFilter = std::function<JointAction(const WorldState&, const std::array<Observation, kAgentCount>&,
                                               const JointAction&, int t)>;

/// Plays one episode with a policy per agent. Exploration noise for agent k
/// draws from make_rng(config.seed, k + 1).
Trajectory run_episode(const EpisodeConfig& config, const Policy& policy_i, const Policy& policy_j,
                       std::string id = {}, const ActionFilter& filter = {});

}  // namespace movingout
