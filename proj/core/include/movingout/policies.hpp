#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <utility>

#include "movingout/env.hpp"
#include "movingout/nn.hpp"
#include "movingout/rng.hpp"

namespace movingout {

inline constexpr const char* kPolicySchema = "movingout-policy/1";

enum class PolicyKind { kScriptedGreedy, kScriptedHelper, kBcMlp };
const char* to_string(PolicyKind k);
PolicyKind policy_kind_from_string(const std::string& s);

struct PolicySpec {
  PolicyKind kind = PolicyKind::kScriptedGreedy;
  /// Std-dev (radians) of Gaussian heading noise; scripted policies only.
  double noise = 0.0;
  /// Model file for bc-mlp.
  std::filesystem::path net;
  friend bool operator==(const PolicySpec&, const PolicySpec&) = default;
};

/// Throws Usage when noise is negative or the bc-mlp model file is missing.
void validate_policy_spec(const PolicySpec& spec);
std::string policy_spec_to_json(const PolicySpec& spec, int indent = 2);
/// Relative model paths are resolved against `base_dir`.
PolicySpec policy_spec_from_json(const std::string& text, const std::filesystem::path& base_dir = {});
PolicySpec load_policy_spec(const std::filesystem::path& path);
/// "scripted-greedy", "scripted-helper", "scripted-greedy:0.2" (noise), a
/// bc model file (*.bin) or a policy spec file (*.json).
PolicySpec parse_policy_arg(const std::string& arg);

class Policy {
 public:
  virtual ~Policy() = default;
  virtual const PolicySpec& spec() const = 0;
  virtual std::string name() const { return to_string(spec().kind); }
  /// Deterministic given the rng state. A null rng disables exploration
  /// noise. Throws LayoutMismatch for observations of the wrong width.
  virtual ActionCommand act(std::span<const double> obs, Rng* rng) const = 0;
};

using PolicyPtr = std::shared_ptr<const Policy>;

ActionCommand act(const Policy& policy, std::span<const double> obs, Rng* rng = nullptr);

/// Builds a policy for episodes on `map` (scripted policies plan on its geometry).
PolicyPtr make_policy(const PolicySpec& spec, const MapSpec& map);

/// Rule-based expert. Targets are assigned by lowest (path distance, item id);
/// when the partner holds a medium or large item alone the agent goes to help.
class ScriptedPolicy final : public Policy {
 public:
  ScriptedPolicy(PolicySpec spec, MapSpec map);

  const PolicySpec& spec() const override { return spec_; }
  ActionCommand act(std::span<const double> obs, Rng* rng) const override;
  /// Noise-free decision for the given ego-ordered world.
  ActionCommand decide(const WorldState& ego) const;

 private:
  PolicySpec spec_;
  MapSpec map_;
  std::size_t min_width_;
  struct Static;
  std::shared_ptr<const Static> static_;
};

/// (helper, greedy) pair used to generate demonstrations.
std::pair<PolicyPtr, PolicyPtr> scripted_expert_pair(const MapSpec& map, double noise = 0.0);

// ---- behaviour cloning ----

struct BcConfig {
  int hidden = 256;
  /// Predicted future actions per sample; only the first is executed.
  int action_horizon = 1;
  int epochs = 60;
  int batch_size = 256;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

/// Regression target for one action: move / max_move, cos, sin, grasp.
std::array<double, 4> bc_target(const ActionCommand& action, double max_move = 0.03);

/// Tanh MLP in -> hidden -> hidden -> 4 * horizon with input standardisation.
class BcPolicy final : public Policy {
 public:
  BcPolicy(nn::DenseNet net, std::vector<double> mean, std::vector<double> scale, int horizon = 1);
  static std::shared_ptr<BcPolicy> load(const std::filesystem::path& path);

  const PolicySpec& spec() const override { return spec_; }
  ActionCommand act(std::span<const double> obs, Rng* rng) const override;
  /// Raw network output for one observation.
  nn::Vector predict(std::span<const double> obs) const;

  nn::Bundle to_bundle() const;
  static std::shared_ptr<BcPolicy> from_bundle(const nn::Bundle& b);
  void save(const std::filesystem::path& path) const;

  const nn::DenseNet& net() const { return net_; }
  std::size_t input_width() const { return mean_.size(); }
  int horizon() const { return horizon_; }

 private:
  PolicySpec spec_;
  nn::DenseNet net_;
  std::vector<double> mean_;
  std::vector<double> scale_;
  int horizon_;
};

struct BcTrainResult {
  std::shared_ptr<BcPolicy> policy;
  std::vector<double> loss_curve;
};

/// `data.inputs` are observations, `data.targets` stacked bc_target rows.
/// Throws EmptyDataset and the nn training errors.
BcTrainResult train_bc(const nn::Dataset& data, const BcConfig& config = {});

/// Runs the agent's own policy on the swapped observation.
ActionCommand predict_partner_action(const Policy& policy, std::span<const double> obs_self);

}  // namespace movingout
