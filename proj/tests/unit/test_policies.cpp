#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "movingout/data_io.hpp"
#include "movingout/distance_field.hpp"
#include "movingout/errors.hpp"
#include "movingout/policies.hpp"
#include "movingout/rollout.hpp"

using namespace movingout;

namespace {

ItemSpec small_item(Vec2 p) {
  ItemSpec it;
  it.size = SizeClass::kSmall;
  it.mass = nominal_mass(SizeClass::kSmall);
  it.footprint_radius = nominal_footprint(SizeClass::kSmall);
  it.spawn = {p, 0.0};
  return it;
}

MapSpec open_map(std::vector<ItemSpec> items, Rect goal, Pose a0, Pose a1) {
  MapSpec m;
  m.id = 99;
  m.name = "open";
  m.goals = {goal};
  m.items = std::move(items);
  m.agent_spawns = {a0, a1};
  return m;
}

std::vector<Trajectory> scripted_episodes(int map_id, int count, double noise, int first_seed = 0) {
  std::vector<Trajectory> out;
  for (int s = first_seed; s < first_seed + count; ++s) {
    EpisodeConfig cfg;
    cfg.map = builtin_map(map_id);
    cfg.seed = static_cast<std::uint64_t>(s);
    cfg.randomize_attributes = true;
    const MapSpec played = resolved_map(cfg);
    auto [a, b] = scripted_expert_pair(played, noise);
    out.push_back(run_episode(cfg, *a, *b, "m" + std::to_string(map_id) + "-" + std::to_string(s)));
  }
  return out;
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "movingout_test_policies";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::shared_ptr<BcPolicy> zero_bc(std::size_t width) {
  nn::DenseNet net({static_cast<int>(width), 8, 8, 4}, {nn::Activation::kTanh, nn::Activation::kTanh, nn::Activation::kIdentity}, 1);
  for (auto& l : net.layers()) {
    l.weight.setZero();
    l.bias.setZero();
  }
  return std::make_shared<BcPolicy>(net, std::vector<double>(width, 0.0), std::vector<double>(width, 1.0));
}

}  // namespace

TEST(ScriptedPolicy, HeadsEastTowardItemDueEast) {
  // Agent and item share a row of grid cell centers; the goal lies further east.
  const double y = cell_center({0, 24}).y;
  const MapSpec map = open_map({small_item({0.5, y})}, {{0.8, 0.4}, {0.96, 0.6}}, {{0.3, y}, 0.0}, {{0.3, 0.15}, 0.0});
  ScriptedPolicy greedy({PolicyKind::kScriptedGreedy, 0.0, {}}, map);
  const WorldState s = initial_state(map);
  const ActionCommand a = greedy.act(encode_observation(s, 0), nullptr);
  EXPECT_NEAR(a.heading.x, 1.0, 1e-9);
  EXPECT_NEAR(a.heading.y, 0.0, 1e-9);
  EXPECT_GT(a.move, 0.0);
}

TEST(ScriptedPolicy, DeterministicWithoutNoise) {
  const MapSpec map = builtin_map(5);
  ScriptedPolicy p({PolicyKind::kScriptedHelper, 0.0, {}}, map);
  const Observation obs = encode_observation(initial_state(map), 1);
  Rng r1 = make_rng(3), r2 = make_rng(3);
  EXPECT_EQ(p.act(obs, &r1), p.act(obs, &r2));
  EXPECT_EQ(p.act(obs, nullptr), p.act(obs, nullptr));
}

TEST(ScriptedPolicy, NoiseDeterministicGivenRngState) {
  const MapSpec map = builtin_map(2);
  ScriptedPolicy p({PolicyKind::kScriptedGreedy, 0.3, {}}, map);
  const Observation obs = encode_observation(initial_state(map), 0);
  Rng r1 = make_rng(11), r2 = make_rng(11);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(p.act(obs, &r1), p.act(obs, &r2));
}

TEST(ScriptedPolicy, LayoutMismatch) {
  const MapSpec map = builtin_map(1);
  ScriptedPolicy p({PolicyKind::kScriptedGreedy, 0.0, {}}, map);
  Observation obs = encode_observation(initial_state(map), 0);
  obs.pop_back();
  try {
    p.act(obs, nullptr);
    FAIL() << "expected LayoutMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kLayoutMismatch);
  }
}

TEST(ScriptedPolicy, ActionsSatisfyInvariants) {
  for (const Trajectory& t : scripted_episodes(4, 2, 0.2)) {
    for (std::size_t i = 0; i < t.length(); ++i) {
      for (const ActionCommand& a : *t.steps[i].action) {
        EXPECT_NO_THROW(validate_action(a));
        EXPECT_LE(std::abs(a.move), 0.03 + 1e-12);
        EXPECT_NEAR(norm(a.heading), 1.0, 1e-9);
      }
    }
  }
}

TEST(ScriptedExperts, HandoffOnCorridorMap) {
  // Map 1: an item grasped by one agent, released, then grasped by the other.
  bool handoff = false;
  for (const Trajectory& t : scripted_episodes(1, 3, 0.0)) {
    std::map<int, int> last_holder;
    for (const TrajectoryStep& s : t.steps) {
      for (const Event& e : s.events) {
        if (e.kind != EventKind::kGrasp) continue;
        auto it = last_holder.find(e.second);
        if (it != last_holder.end() && it->second != e.first) handoff = true;
        last_holder[e.second] = e.first;
      }
    }
  }
  EXPECT_TRUE(handoff);
}

TEST(ScriptedExperts, BothAttachBeforeLargeItemMoves) {
  for (const Trajectory& t : scripted_episodes(10, 20, 0.0)) {
    ASSERT_EQ(t.initial().items.size(), 1u);
    ASSERT_EQ(t.initial().items[0].size, SizeClass::kLarge);
    for (std::size_t i = 0; i + 1 < t.steps.size(); ++i) {
      if (t.steps[i + 1].state.items[0].position == t.steps[i].state.items[0].position) continue;
      EXPECT_EQ(t.steps[i].state.holders(0).size(), 2u) << t.header.id << " step " << i;
      break;
    }
  }
}

TEST(ScriptedExperts, EmptyMapEndsAtReset) {
  const MapSpec map = open_map({}, {{0.8, 0.4}, {0.96, 0.6}}, {{0.3, 0.5}, 0.0}, {{0.6, 0.5}, 0.0});
  EpisodeConfig cfg;
  cfg.map = map;
  auto [a, b] = scripted_expert_pair(map);
  const Trajectory t = run_episode(cfg, *a, *b);
  EXPECT_EQ(t.length(), 0u);
  const Observation obs = encode_observation(initial_state(map), 0);
  EXPECT_EQ(a->act(obs, nullptr).move, 0.0);
  EXPECT_EQ(b->act(obs, nullptr).move, 0.0);
}

TEST(PartnerPrediction, SwapIsInvolution) {
  const Observation obs = encode_observation(initial_state(builtin_map(6)), 0);
  EXPECT_EQ(swap_perspective(swap_perspective(obs)), obs);
}

TEST(PartnerPrediction, MirroredStateGivesMirroredAction) {
  // Left/right mirror image: each agent's situation is the other's reflected.
  const MapSpec map = open_map({small_item({0.2, 0.6}), small_item({0.8, 0.6})}, {{0.4, 0.85}, {0.6, 0.95}},
                               {{0.3, 0.3}, std::numbers::pi / 2}, {{0.7, 0.3}, std::numbers::pi / 2});
  ScriptedPolicy p({PolicyKind::kScriptedGreedy, 0.0, {}}, map);
  const Observation obs = encode_observation(initial_state(map), 0);
  const ActionCommand own = p.act(obs, nullptr);
  const ActionCommand partner = predict_partner_action(p, obs);
  EXPECT_NEAR(partner.heading.x, -own.heading.x, 1e-6);
  EXPECT_NEAR(partner.heading.y, own.heading.y, 1e-6);
  EXPECT_NEAR(partner.move, own.move, 1e-9);
  EXPECT_EQ(partner.grasp, own.grasp);
}

TEST(PartnerPrediction, GraspBitMatchesOnRecordedEpisode) {
  const Trajectory t = scripted_episodes(3, 1, 0.0).front();
  auto [helper, greedy] = scripted_expert_pair(t.header.map);
  const std::array<PolicyPtr, 2> own{helper, greedy};
  std::size_t hits = 0, total = 0;
  for (std::size_t i = 0; i < t.length(); ++i) {
    for (int k = 0; k < 2; ++k) {
      const Observation obs = encode_observation(t.steps[i].state, k);
      const bool predicted = predict_partner_action(*own[k], obs).grasp;
      hits += predicted == (*t.steps[i].action)[1 - k].grasp;
      ++total;
    }
  }
  EXPECT_GE(static_cast<double>(hits) / static_cast<double>(total), 0.7);
}

TEST(BcPolicy, ZeroNetworkDoesNotMove) {
  const Observation obs = encode_observation(initial_state(builtin_map(1)), 0);
  auto p = zero_bc(obs.size());
  const ActionCommand a = p->act(obs, nullptr);
  EXPECT_EQ(a.move, 0.0);
  EXPECT_FALSE(a.grasp);
  EXPECT_NEAR(norm(a.heading), 1.0, 1e-12);
}

TEST(BcPolicy, LayoutMismatch) {
  const Observation obs = encode_observation(initial_state(builtin_map(1)), 0);
  auto p = zero_bc(obs.size() + 1);
  try {
    p->act(obs, nullptr);
    FAIL() << "expected LayoutMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kLayoutMismatch);
  }
}

TEST(BcPolicy, EmptyDataset) {
  nn::Dataset d;
  d.inputs.resize(10, 0);
  d.targets.resize(4, 0);
  try {
    train_bc(d);
    FAIL() << "expected EmptyDataset";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyDataset);
  }
}

TEST(BcPolicy, SameSeedGivesIdenticalModelFiles) {
  const nn::Dataset d = build_bc_pairs(scripted_episodes(9, 2, 0.1));
  BcConfig cfg;
  cfg.hidden = 16;
  cfg.epochs = 2;
  cfg.seed = 5;
  const auto p1 = temp_path("bc_a.bin");
  const auto p2 = temp_path("bc_b.bin");
  train_bc(d, cfg).policy->save(p1);
  train_bc(d, cfg).policy->save(p2);
  EXPECT_EQ(file_bytes(p1), file_bytes(p2));
  const auto loaded = BcPolicy::load(p1);
  const Observation obs = encode_observation(initial_state(builtin_map(9)), 0);
  EXPECT_EQ(loaded->act(obs, nullptr), train_bc(d, cfg).policy->act(obs, nullptr));
}

TEST(BcPolicy, BeatsConstantPredictorOnHeldOutEpisodes) {
  const auto trajs = scripted_episodes(3, 50, 0.1);
  const std::vector<Trajectory> train(trajs.begin(), trajs.begin() + 40);
  const std::vector<Trajectory> test(trajs.begin() + 40, trajs.end());
  const nn::Dataset tr = build_bc_pairs(train);
  const nn::Dataset te = build_bc_pairs(test);
  BcConfig cfg;
  cfg.hidden = 64;
  cfg.epochs = 15;
  const auto policy = train_bc(tr, cfg).policy;
  const nn::Vector mean = tr.targets.rowwise().mean();
  double model = 0.0, constant = 0.0;
  for (Eigen::Index c = 0; c < te.inputs.cols(); ++c) {
    const nn::Vector col = te.inputs.col(c);
    const nn::Vector out = policy->predict(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
    for (int r = 0; r < 3; ++r) {
      model += std::pow(out(r) - te.targets(r, c), 2);
      constant += std::pow(mean(r) - te.targets(r, c), 2);
    }
  }
  EXPECT_LT(model, constant);
}

TEST(PolicySpecFile, RoundTrip) {
  PolicySpec s{PolicyKind::kScriptedHelper, 0.25, {}};
  EXPECT_EQ(policy_spec_from_json(policy_spec_to_json(s)), s);
}

TEST(PolicySpecFile, RejectsNegativeNoiseAndMissingModel) {
  try {
    validate_policy_spec({PolicyKind::kScriptedGreedy, -0.1, {}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUsage);
  }
  try {
    validate_policy_spec({PolicyKind::kBcMlp, 0.0, "/nonexistent/model.bin"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUsage);
  }
}

TEST(PolicySpecFile, ParsesShortForms) {
  EXPECT_EQ(parse_policy_arg("scripted-greedy").kind, PolicyKind::kScriptedGreedy);
  const PolicySpec s = parse_policy_arg("scripted-helper:0.2");
  EXPECT_EQ(s.kind, PolicyKind::kScriptedHelper);
  EXPECT_DOUBLE_EQ(s.noise, 0.2);
  EXPECT_THROW(parse_policy_arg("gru"), Error);
}
