#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "movingout/bass.hpp"
#include "movingout/metrics.hpp"
#include "movingout/policies.hpp"
#include "movingout/trajectory.hpp"

namespace movingout::play {

/// Contents of a client "hello" message.
struct SessionRequest {
  MapSpec map;
  /// Agent index steered by the human; the policy plays the other one.
  int human_agent = 0;
  PolicySpec policy;
  SelectionMode mode = SelectionMode::kRaw;
  std::uint64_t seed = 0;
};

/// Throws BadRequest with the reason when the message is malformed or names
/// an unknown map, role, policy or mode.
SessionRequest parse_hello(const std::string& message);

/// Parses {type:"action", move, cos, sin, grasp}. The move is clamped to the
/// physical limit and the heading normalized. Throws BadRequest.
ActionCommand parse_action(const std::string& message);

struct SessionOptions {
  int max_ticks = kLivePlayHorizon;
  int n_candidates = 8;
  /// Dynamics model for bass-model sessions.
  std::shared_ptr<const LatentDynamics> model;
};

/// One live episode. Not thread-safe; the owner serializes access.
class Session {
 public:
  Session(std::string id, SessionRequest request, const SessionOptions& options = {});

  const std::string& id() const { return id_; }
  const SessionRequest& request() const { return request_; }
  int tick_count() const { return static_cast<int>(traj_.length()); }
  bool done() const { return done_; }
  bool timed_out() const { return timeout_; }

  /// Latches the newest human action; earlier unconsumed ones are dropped.
  void submit(const ActionCommand& action);
  /// Advances one step with the latched action and the policy's action. With
  /// nothing latched the human stands still and keeps its heading.
  void tick();
  void note_overrun() { ++overruns_; }
  int overruns() const { return overruns_; }

  /// {type:"state", ...}; walls and goals only when `with_geometry`.
  std::string state_message(bool with_geometry) const;
  /// {type:"end", reason, metrics, overruns, log}; the log carries the map,
  /// seed and joint action stream needed to replay the session offline.
  std::string end_message() const;

  const Trajectory& trajectory() const { return traj_; }
  MetricsReport metrics() const;

 private:
  std::string id_;
  SessionRequest request_;
  SessionOptions options_;
  EpisodeConfig config_;
  std::unique_ptr<Episode> episode_;
  PolicyPtr policy_;
  std::shared_ptr<const ProgressField> field_;
  Rng policy_rng_;
  Rng select_rng_;
  std::optional<ActionCommand> latched_;
  Trajectory traj_;
  bool done_ = false;
  bool timeout_ = false;
  int overruns_ = 0;
};

/// Re-simulates the log of an end message and returns its metrics.
MetricsReport replay_session_log(const std::string& end_message);

}  // namespace movingout::play
