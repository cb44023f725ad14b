#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "movingout/data_io.hpp"
#include "movingout/distance_field.hpp"
#include "movingout/nn.hpp"
#include "movingout/policies.hpp"
#include "movingout/rng.hpp"
#include "movingout/rollout.hpp"
#include "movingout/trajectory.hpp"

namespace movingout {

// ---- behaviour augmentation ----

/// Grid cell (48x48 index) of an agent plus its hold flag.
struct SpliceKey {
  int cell = 0;
  bool hold = false;
  friend bool operator==(const SpliceKey&, const SpliceKey&) = default;
};

SpliceKey splice_key(const WorldState& state, int agent);

struct PerturbOptions {
  double sigma = 0.002;
  /// Agent whose stream stays untouched; the other one is perturbed.
  int ego = 0;
  /// Also add noise (sigma, in radians) to the partner's heading angle.
  bool perturb_heading = true;
};

/// Copy of `traj` with i.i.d. Gaussian noise on the partner's position (and
/// heading) at every recorded state. Throws Usage for a negative sigma.
Trajectory perturb_partner(const Trajectory& traj, const PerturbOptions& options, Rng& rng);

/// `base` with the partner's states over [t1, t2] and its actions over
/// [t1, t2) taken from `donor`. Everything else is copied from `base`.
Trajectory splice(const Trajectory& base, const Trajectory& donor, int t1, int t2, int ego = 0);

struct RecombineOptions {
  int ego = 0;
  /// Drop outputs whose spliced states leave the valid state space.
  bool validate = false;
  /// Largest tolerated overlap depth in a spliced state.
  double penetration_limit = 0.01;
  /// Shortest splice window t2 - t1.
  int min_window = 2;
};

/// True when every state over [t1, t2] is free of overlaps deeper than the
/// limit (arena bounds included) and every holder can reach its item.
bool spliced_states_valid(const Trajectory& traj, int t1, int t2, double penetration_limit = 0.01);

/// For every pair of distinct trajectories on the same map, finds the times
/// at which the ego agent has equal splice keys in both, and for each pair of
/// consecutive matching times (t1, t2) whose partner streams differ emits the
/// two swapped trajectories.
std::vector<Trajectory> recombine(const std::vector<Trajectory>& dataset, const RecombineOptions& options = {});

// ---- latent dynamics ----

struct DynamicsConfig {
  int latent = 32;
  int hidden = 128;
  int epochs = 30;
  int batch_size = 256;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

/// Two autoencoders and a latent transition network. The first autoencoder
/// embeds s_t; the second embeds the state change s_{t+1} - s_t; f maps
/// (z_t, a_t, a_t^partner) to the latent of the change.
class LatentDynamics {
 public:
  LatentDynamics() = default;
  LatentDynamics(std::size_t state_width, const DynamicsConfig& config);

  std::size_t state_width() const { return state_mean.size(); }
  int latent_width() const;

  /// Raw next state, no post-processing.
  std::vector<double> predict_raw(std::span<const double> state, std::span<const double> action,
                                  std::span<const double> partner_action) const;

  nn::Bundle to_bundle() const;
  static LatentDynamics from_bundle(const nn::Bundle& b);
  void save(const std::filesystem::path& path) const;
  static LatentDynamics load(const std::filesystem::path& path);

  friend bool operator==(const LatentDynamics&, const LatentDynamics&) = default;

  nn::DenseNet enc_state, dec_state, enc_change, dec_change, transition;
  std::vector<double> state_mean, state_scale;
  std::vector<double> action_mean, action_scale;
  std::vector<double> change_mean, change_scale;
  /// 1 where the state entry changed anywhere in the training data.
  std::vector<double> dynamic_mask;
};

struct DynamicsTrainResult {
  LatentDynamics model;
  std::vector<double> loss_curve;
};

/// Joint training of both autoencoders' reconstruction, the latent prediction
/// and the decoded prediction, equally weighted. Zero epochs gives the random
/// initialization with identity standardizers. Throws EmptyDataset and
/// NonFiniteLoss.
DynamicsTrainResult train_latent_dynamics(const TransitionSet& data, const DynamicsConfig& config = {});

/// Decoded next state with unit heading pairs and hold flags snapped to 0/1.
/// Throws ShapeMismatch on width errors.
std::vector<double> predict_next_state(const LatentDynamics& model, std::span<const double> state,
                                       std::span<const double> action, std::span<const double> partner_action);

struct OneStepError {
  double model_mse = 0.0;
  double persistence_mse = 0.0;
  /// Mean Euclidean error of the ego agent's next position.
  double ego_position_error = 0.0;
};

OneStepError one_step_error(const LatentDynamics& model, const TransitionSet& data);

// ---- selection ----

/// -(sum of item goal distances); higher is better.
double progress_reward(const WorldState& state, const DistanceField& field);
/// Same score read from an observation vector with `item_count` items.
double progress_reward(std::span<const double> obs, std::size_t item_count, const DistanceField& field);

/// Goal distances for candidate scoring. Each item gets a BFS field over the
/// walls inflated by its footprint radius, so the score follows paths the
/// item fits through; the plain field stands in where that one is undefined.
class ProgressField {
 public:
  ProgressField(const Arena& arena, std::span<const double> item_radii);
  ProgressField(const WorldState& state);

  const DistanceField& plain() const { return plain_; }
  std::size_t item_count() const { return fields_.size(); }
  /// Inflated-field distance when `inflated`, else the plain field.
  double distance(std::size_t item, Vec2 p, bool inflated) const;
  /// Per-item choice of field for positions reachable from `state`.
  std::vector<bool> usable(const WorldState& state) const;
  double reward(const WorldState& state, const std::vector<bool>& usable) const;
  double reward(std::span<const double> obs, const std::vector<bool>& usable) const;

 private:
  DistanceField plain_;
  std::vector<DistanceField> fields_;
};

struct SelectionConfig {
  int n = 8;
  /// Std-dev (radians) of the heading jitter of candidates 2..n-1.
  double heading_jitter = 0.3;
  PhysicsParams physics;
};

struct CandidateSet {
  std::vector<ActionCommand> actions;
  std::vector<double> rewards;
};

/// Candidate 0 is `base`, candidate 1 flips its grasp bit, the rest jitter the
/// heading and alternate the move scale between 1 and 0.5.
std::vector<ActionCommand> generate_candidates(const ActionCommand& base, int n, double heading_jitter, Rng& rng);

/// Index of the highest reward; ties go to the lowest index.
std::size_t argmax_first(std::span<const double> rewards);

enum class SelectionMode { kRaw, kBassModel, kBassOracle };
const char* to_string(SelectionMode m);
SelectionMode selection_mode_from_string(const std::string& s);

/// One-step score of each candidate for `agent` with the partner playing
/// `partner`. `model` null means oracle mode (physics step).
std::vector<double> score_candidates(const WorldState& state, int agent, std::span<const ActionCommand> candidates,
                                     const ActionCommand& partner, const LatentDynamics* model,
                                     const ProgressField& field, const PhysicsParams& physics = {});

/// Picks the candidate whose one-step successor scores best. The partner's
/// action is predicted with the agent's own policy on the swapped
/// observation. `model` null means oracle mode (physics step).
ActionCommand select_action(const WorldState& state, int agent, const Policy& policy, const ActionCommand& proposal,
                            const LatentDynamics* model, const ProgressField& field, const SelectionConfig& config,
                            Rng& rng, CandidateSet* candidates = nullptr);

/// Filter for run_episode applying select_action to the agents flagged in
/// `agents`. Candidate draws use make_rng(seed, 100 + agent).
ActionFilter make_bass_filter(std::array<PolicyPtr, kAgentCount> policies, std::array<bool, kAgentCount> agents,
                              std::shared_ptr<const LatentDynamics> model, std::shared_ptr<const ProgressField> field,
                              const SelectionConfig& config, std::uint64_t seed);

}  // namespace movingout
