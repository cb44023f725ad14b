#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "movingout/maps.hpp"
#include "movingout/physics.hpp"

namespace movingout {

using Observation = std::vector<double>;

/// Flat observation layout. Positions are world-frame; slots are ordered
/// self, partner, items (map order), then optional map geometry.
namespace obs_layout {
inline constexpr std::size_t kAgentBlock = 5;  // x, y, cos, sin, hold
inline constexpr std::size_t kItemBlock = 11;  // x, y, cos, sin, radius, size one-hot(3), shape one-hot(3)
inline constexpr std::size_t kSelf = 0;
inline constexpr std::size_t kPartner = kAgentBlock;
inline constexpr std::size_t kItems = 2 * kAgentBlock;
inline constexpr std::size_t kActionWidth = 4;  // move, cos, sin, grasp
}  // namespace obs_layout

struct ObservationMode {
  /// Append walls and goal regions as (top-left, bottom-right) corner pairs.
  bool include_geometry = false;
};

std::size_t observation_width(std::size_t item_count, const ObservationMode& mode = {}, const Arena* arena = nullptr);

Observation encode_observation(const WorldState& state, int agent, const ObservationMode& mode = {});

/// Agent-0 ordered single-map observation; the canonical state vector.
std::vector<double> state_vector(const WorldState& state);

std::array<double, obs_layout::kActionWidth> encode_action(const ActionCommand& action);

/// Normalizes a near-unit heading and thresholds grasp at 0.5. Throws
/// DecodeError when the heading pair is degenerate (norm < 1e-3).
ActionCommand decode_action(std::span<const double> vec);

/// Rebuilds the world from both agents' observations and the map. Held
/// items are resolved as the nearest item to each holder.
WorldState reconstruct_state(std::span<const double> obs0, std::span<const double> obs1, const MapSpec& map);

/// World as seen from one observation: the observer becomes agent 0 and the
/// partner agent 1. Item attributes come from the observation; polygon corner
/// counts are taken from the map when the shape kind agrees.
WorldState ego_state(std::span<const double> obs, const MapSpec& map);

/// Swaps the self and partner blocks of an ego observation.
Observation swap_perspective(std::span<const double> obs);

/// Rebuilds a state from a canonical state vector plus the held item ids.
WorldState state_from_vector(std::span<const double> vec, const std::array<int, kAgentCount>& holds, const MapSpec& map);

enum class EventKind : std::uint8_t { kGrasp, kRelease, kEnteredGoal, kLeftGoal, kCollision };
const char* to_string(EventKind k);
EventKind event_kind_from_string(const std::string& s);

struct Event {
  EventKind kind;
  /// Agent index for grasp/release, item index for goal events, first body
  /// for collisions.
  int first = -1;
  /// Item index for grasp/release, second body for collisions.
  int second = -1;
  CollisionKind contact = CollisionKind::kAgentWall;
  friend bool operator==(const Event&, const Event&) = default;
};

struct EpisodeConfig {
  MapSpec map;
  std::uint64_t seed = 0;
  int horizon = 300;
  ObservationMode observation;
  /// Resample item attributes from the map's ranges using `seed`.
  bool randomize_attributes = false;
  PhysicsParams physics;
};

inline constexpr int kDefaultHorizon = 300;
inline constexpr int kLivePlayHorizon = 500;

/// The map actually played, after optional attribute randomization.
MapSpec resolved_map(const EpisodeConfig& config);

struct ResetResult {
  WorldState state;
  std::array<Observation, kAgentCount> observations;
  bool done = false;
};

struct StepOutcome {
  WorldState state;
  std::array<Observation, kAgentCount> observations;
  std::vector<Event> events;
  bool done = false;
  bool timeout = false;
};

bool all_delivered(const WorldState& state);

ResetResult reset(const EpisodeConfig& config);

/// One environment transition from `state` after `t` completed steps.
StepOutcome env_step(const EpisodeConfig& config, const WorldState& state, int t, const ActionCommand& a0,
                     const ActionCommand& a1);

/// Stateful wrapper around reset/env_step for a single episode.
class Episode {
 public:
  explicit Episode(EpisodeConfig config);

  const ResetResult& reset();
  const StepOutcome& step(const ActionCommand& a0, const ActionCommand& a1);

  const EpisodeConfig& config() const { return config_; }
  const MapSpec& map() const { return config_.map; }
  const WorldState& state() const { return state_; }
  int t() const { return t_; }
  bool done() const { return done_; }
  bool timed_out() const { return timeout_; }
  Observation observation(int agent) const { return encode_observation(state_, agent, config_.observation); }

 private:
  EpisodeConfig config_;
  WorldState state_;
  int t_ = 0;
  bool done_ = false;
  bool timeout_ = false;
  ResetResult reset_result_;
  StepOutcome last_;
};

}  // namespace movingout
