#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "recombine_fixture.hpp"
#include "movingout/bass.hpp"
#include "movingout/errors.hpp"

using namespace movingout;
using fixtures::recombine_fixture;
using fixtures::RecombineFixture;
using fixtures::scripted_stream;
using fixtures::walled_map;

namespace {

template <typename F>
ErrorKind error_kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::kIO;
}

std::vector<Trajectory> scripted_episodes(int map_id, int count, double noise) {
  std::vector<Trajectory> out;
  for (int s = 0; s < count; ++s) {
    EpisodeConfig cfg;
    cfg.map = builtin_map(map_id);
    cfg.seed = static_cast<std::uint64_t>(s);
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

}  // namespace

// ---- perturbation ----

TEST(Perturb, ZeroSigmaIsIdentity) {
  const Trajectory t = fixtures::fuzz_trajectory(2, 4, 60);
  Rng rng = make_rng(1);
  const Trajectory p = perturb_partner(t, {0.0, 0, true}, rng);
  EXPECT_EQ(p.steps, t.steps);
  ASSERT_TRUE(p.header.provenance.has_value());
  EXPECT_EQ(p.header.provenance->method, "perturb");
}

TEST(Perturb, NegativeSigmaRejected) {
  const Trajectory t = fixtures::fuzz_trajectory(2, 4, 5);
  Rng rng = make_rng(1);
  EXPECT_EQ(error_kind_of([&] { perturb_partner(t, {-0.1, 0, true}, rng); }), ErrorKind::kUsage);
}

TEST(Perturb, NoiseMatchesSigmaAndSparesEgo) {
  const Trajectory t = scripted_stream(
      "still", walled_map(), 10000, [](int) { return Vec2{0.1, 0.2}; }, [](int) { return Vec2{0.7, 0.1}; }, 0.0);
  Rng rng = make_rng(7);
  const Trajectory p = perturb_partner(t, {0.002, 0, true}, rng);
  double sx = 0.0, sxx = 0.0, sh = 0.0, shh = 0.0;
  const auto n = static_cast<double>(p.steps.size());
  for (std::size_t i = 0; i < p.steps.size(); ++i) {
    const WorldState& a = t.steps[i].state;
    const WorldState& b = p.steps[i].state;
    ASSERT_EQ(b.agents[0], a.agents[0]);
    ASSERT_EQ(b.items, a.items);
    ASSERT_EQ(p.steps[i].action, t.steps[i].action);
    const double dx = b.agents[1].position.x - a.agents[1].position.x;
    const double dh = b.agents[1].heading() - a.agents[1].heading();
    sx += dx;
    sxx += dx * dx;
    sh += dh;
    shh += dh * dh;
  }
  const double sd = std::sqrt(sxx / n - (sx / n) * (sx / n));
  const double sd_heading = std::sqrt(shh / n - (sh / n) * (sh / n));
  EXPECT_NEAR(sd, 0.002, 0.0002);
  EXPECT_NEAR(sd_heading, 0.002, 0.0002);
}

TEST(Perturb, HeadingUntouchedWhenDisabled) {
  const Trajectory t = fixtures::fuzz_trajectory(3, 1, 40);
  Rng rng = make_rng(2);
  const Trajectory p = perturb_partner(t, {0.002, 1, false}, rng);
  for (std::size_t i = 0; i < p.steps.size(); ++i) {
    EXPECT_EQ(p.steps[i].state.agents[0].facing, t.steps[i].state.agents[0].facing);
    EXPECT_NE(p.steps[i].state.agents[0].position, t.steps[i].state.agents[0].position);
    EXPECT_EQ(p.steps[i].state.agents[1], t.steps[i].state.agents[1]);
  }
}

// ---- recombination ----

TEST(Recombine, SpliceWithSelfIsIdentity) {
  const Trajectory t = fixtures::fuzz_trajectory(5, 9, 40);
  const Trajectory s = splice(t, t, 3, 30);
  EXPECT_EQ(s.steps, t.steps);
  ASSERT_TRUE(s.header.provenance.has_value());
  EXPECT_EQ(s.header.provenance->splice, std::make_pair(3, 30));
}

TEST(Recombine, SpliceWindowOutOfRange) {
  const Trajectory t = fixtures::fuzz_trajectory(5, 9, 10);
  EXPECT_EQ(error_kind_of([&] { splice(t, t, 4, 11); }), ErrorKind::kUsage);
  EXPECT_EQ(error_kind_of([&] { splice(t, t, 5, 4); }), ErrorKind::kUsage);
}

TEST(Recombine, TwoMatchesGiveOneSwappedPair) {
  const RecombineFixture f = recombine_fixture();
  const std::vector<Trajectory> out = recombine({f.tau, f.other});
  ASSERT_EQ(out.size(), 2u);
  const Trajectory& a = out[0];
  ASSERT_EQ(a.steps.size(), f.tau.steps.size());
  for (std::size_t t = 0; t < a.steps.size(); ++t) {
    EXPECT_EQ(a.steps[t].state.agents[0], f.tau.steps[t].state.agents[0]);
    EXPECT_EQ(a.steps[t].state.items, f.tau.steps[t].state.items);
    const Trajectory& partner_src = (t >= 10 && t <= 40) ? f.other : f.tau;
    EXPECT_EQ(a.steps[t].state.agents[1], partner_src.steps[t].state.agents[1]) << t;
  }
  EXPECT_EQ((*a.steps[10].action)[1].move, -0.01);
  EXPECT_EQ((*a.steps[39].action)[1].move, -0.01);
  EXPECT_EQ((*a.steps[40].action)[1].move, 0.01);
  EXPECT_EQ((*a.steps[9].action)[1].move, 0.01);
  EXPECT_EQ(a.header.provenance->splice, std::make_pair(10, 40));
  EXPECT_EQ(out[1].steps[25].state.agents[1], f.tau.steps[25].state.agents[1]);
}

TEST(Recombine, ValidationDropsWallOverlap) {
  const RecombineFixture f = recombine_fixture();
  RecombineOptions opt;
  opt.validate = true;
  const std::vector<Trajectory> out = recombine({f.tau, f.other}, opt);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].header.provenance->sources.front(), "other");
  EXPECT_FALSE(spliced_states_valid(splice(f.tau, f.other, 10, 40), 10, 40));
}

TEST(Recombine, DifferentMapsNeverPair) {
  const RecombineFixture f = recombine_fixture();
  Trajectory moved = f.other;
  moved.header.map.goals[0].max.x = 0.99;
  EXPECT_TRUE(recombine({f.tau, moved}).empty());
}

TEST(Recombine, OutputsReplayKeysAtSpliceEnds) {
  // Property: every output keeps the ego key stream of its base and splices
  // at matching times.
  const std::vector<Trajectory> data = scripted_episodes(2, 3, 0.3);
  const std::vector<Trajectory> out = recombine(data);
  for (const Trajectory& t : out) {
    const auto [t1, t2] = *t.header.provenance->splice;
    ASSERT_GE(t2 - t1, 2);
    const Trajectory& base = *std::find_if(data.begin(), data.end(),
                                           [&](const Trajectory& d) { return d.header.id == t.header.provenance->sources[0]; });
    const Trajectory& donor = *std::find_if(data.begin(), data.end(),
                                            [&](const Trajectory& d) { return d.header.id == t.header.provenance->sources[1]; });
    EXPECT_EQ(splice_key(base.steps[t1].state, 0), splice_key(donor.steps[t1].state, 0));
    EXPECT_EQ(splice_key(base.steps[t2].state, 0), splice_key(donor.steps[t2].state, 0));
    for (std::size_t i = 0; i < t.steps.size(); ++i) EXPECT_EQ(t.steps[i].state.agents[0], base.steps[i].state.agents[0]);
  }
}

// ---- latent dynamics ----

TEST(Dynamics, OutputShapeAndPostProcessing) {
  const TransitionSet data = build_transitions({fixtures::fuzz_trajectory(4, 1, 60)});
  DynamicsConfig cfg;
  cfg.hidden = 16;
  cfg.latent = 8;
  cfg.epochs = 1;
  const LatentDynamics m = train_latent_dynamics(data, cfg).model;
  const Observation s = encode_observation(fixtures::fuzz_trajectory(4, 2, 5).steps[3].state, 1);
  const std::array<double, 4> a{0.02, 0.0, 1.0, 0.0};
  const std::vector<double> next = predict_next_state(m, s, a, a);
  ASSERT_EQ(next.size(), s.size());
  for (std::size_t o : {std::size_t{2}, std::size_t{7}}) EXPECT_NEAR(std::hypot(next[o], next[o + 1]), 1.0, 1e-12);
  for (std::size_t o = obs_layout::kItems; o < next.size(); o += obs_layout::kItemBlock) {
    EXPECT_NEAR(std::hypot(next[o + 2], next[o + 3]), 1.0, 1e-12);
  }
  EXPECT_TRUE(next[4] == 0.0 || next[4] == 1.0);
  EXPECT_TRUE(next[9] == 0.0 || next[9] == 1.0);
}

TEST(Dynamics, ShapeMismatch) {
  const TransitionSet data = build_transitions({fixtures::fuzz_trajectory(4, 1, 20)});
  DynamicsConfig cfg;
  cfg.hidden = 8;
  cfg.epochs = 0;
  const LatentDynamics m = train_latent_dynamics(data, cfg).model;
  const std::vector<double> wrong(m.state_width() + 1, 0.0);
  const std::array<double, 4> a{0.0, 1.0, 0.0, 0.0};
  EXPECT_EQ(error_kind_of([&] { predict_next_state(m, wrong, a, a); }), ErrorKind::kShapeMismatch);
  const TransitionSet other = build_transitions({fixtures::fuzz_trajectory(10, 1, 20)});
  EXPECT_EQ(error_kind_of([&] { one_step_error(m, other); }), ErrorKind::kShapeMismatch);
}

TEST(Dynamics, EmptyDataset) {
  EXPECT_EQ(error_kind_of([] { train_latent_dynamics(TransitionSet{}); }), ErrorKind::kEmptyDataset);
}

TEST(Dynamics, SameSeedGivesIdenticalModelFiles) {
  const TransitionSet data = build_transitions({fixtures::fuzz_trajectory(6, 3, 80)});
  DynamicsConfig cfg;
  cfg.hidden = 16;
  cfg.latent = 8;
  cfg.epochs = 2;
  cfg.seed = 5;
  const auto dir = std::filesystem::temp_directory_path() / "movingout_test_bass";
  std::filesystem::create_directories(dir);
  const LatentDynamics a = train_latent_dynamics(data, cfg).model;
  a.save(dir / "a.json");
  train_latent_dynamics(data, cfg).model.save(dir / "b.json");
  EXPECT_EQ(file_bytes(dir / "a.json"), file_bytes(dir / "b.json"));
  EXPECT_EQ(LatentDynamics::load(dir / "a.json"), a);
}

TEST(Dynamics, UntrainedModelNoBetterThanPersistence) {
  const std::vector<Trajectory> eps = scripted_episodes(3, 3, 0.0);
  DynamicsConfig cfg;
  cfg.epochs = 0;
  const LatentDynamics m = train_latent_dynamics(build_transitions({eps[0], eps[1]}), cfg).model;
  const OneStepError e = one_step_error(m, build_transitions({eps[2]}));
  EXPECT_GE(e.model_mse, e.persistence_mse);
}

TEST(Dynamics, TrainedModelBeatsPersistenceOnHeldOut) {
  const std::vector<Trajectory> eps = scripted_episodes(3, 20, 0.3);
  const TransitionSet train = build_transitions({eps.begin(), eps.end() - 2});
  const TransitionSet test = build_transitions({eps.end() - 2, eps.end()});
  DynamicsConfig cfg;
  cfg.epochs = 20;
  const DynamicsTrainResult r = train_latent_dynamics(train, cfg);
  EXPECT_LT(r.loss_curve.back(), r.loss_curve.front());
  const OneStepError e = one_step_error(r.model, test);
  EXPECT_LT(e.model_mse, e.persistence_mse);
}

// ---- selection ----

TEST(Selection, ArgmaxTakesFirstOfTies) {
  const std::vector<double> r{-0.4, -0.2, -0.2};
  EXPECT_EQ(argmax_first(r), 1u);
  EXPECT_EQ(error_kind_of([] { argmax_first(std::vector<double>{}); }), ErrorKind::kUsage);
}

TEST(Selection, CandidateLayout) {
  Rng rng = make_rng(3);
  const ActionCommand base = fixtures::act(0.02, 0.5, false);
  const std::vector<ActionCommand> c = generate_candidates(base, 8, 0.3, rng);
  ASSERT_EQ(c.size(), 8u);
  EXPECT_EQ(c[0], base);
  EXPECT_TRUE(c[1].grasp);
  for (int k = 2; k < 8; ++k) {
    EXPECT_EQ(c[k].move, base.move * (k % 2 == 0 ? 1.0 : 0.5));
    EXPECT_EQ(c[k].grasp, base.grasp);
    EXPECT_NEAR(norm(c[k].heading), 1.0, 1e-12);
  }
}

TEST(Selection, SingleCandidateReturnsProposal) {
  const MapSpec map = builtin_map(4);
  const WorldState s = initial_state(map);
  const PolicyPtr p = make_policy({PolicyKind::kScriptedGreedy, 0.0, {}}, map);
  const ProgressField field(s);
  SelectionConfig cfg;
  cfg.n = 1;
  Rng rng = make_rng(0);
  const ActionCommand proposal = fixtures::act(-0.013, 2.0, true);
  EXPECT_EQ(select_action(s, 0, *p, proposal, nullptr, field, cfg, rng), proposal);
}

TEST(Selection, OracleMovesHeldItemTowardGoal) {
  WorldState s = fixtures::make_state({0.3, 0.5}, {0.1, 0.1},
                                      {fixtures::make_item({0.37, 0.5}, SizeClass::kSmall)}, {},
                                      {{{0.8, 0.4}, {0.96, 0.6}}});
  s = resolve_grasp(s, 0, true);
  ASSERT_EQ(s.agents[0].hold, std::optional<int>(0));
  const ProgressField field(s);
  const std::vector<ActionCommand> cands{fixtures::act(0.0, 0.0, false), fixtures::act(-0.03, 0.0, false),
                                         fixtures::act(0.03, 0.0, false)};
  const ActionCommand partner{};
  const std::vector<double> r = score_candidates(s, 0, cands, partner, nullptr, field);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(argmax_first(r), 2u);
  EXPECT_LT(r[1], r[0]);
  const auto usable = field.usable(s);
  for (std::size_t k = 0; k < cands.size(); ++k) {
    const WorldState next = step(s, JointAction{cands[k], partner});
    EXPECT_EQ(r[k], -field.distance(0, next.items[0].position, usable[0]));
  }
  // In an empty arena the field tracks straight-line distance to the goal
  // edge to within a couple of grid cells.
  const double straight = 0.8 - s.items[0].position.x;
  EXPECT_NEAR(-r[0], straight, 3.0 / kGridSize);
}

TEST(Selection, StateAndObservationScoresAgree) {
  for (int m : {3, 8, 11}) {
    const Trajectory t = fixtures::fuzz_trajectory(m, 2, 30, true);
    const ProgressField field(t.initial());
    for (const TrajectoryStep& st : t.steps) {
      const auto usable = field.usable(st.state);
      EXPECT_EQ(field.reward(st.state, usable), field.reward(encode_observation(st.state, 1), usable));
      EXPECT_EQ(progress_reward(st.state, field.plain()),
                progress_reward(encode_observation(st.state, 0), st.state.items.size(), field.plain()));
    }
  }
}

TEST(Selection, ChosenCandidateNeverScoresBelowProposal) {
  for (int m : {2, 6}) {
    const MapSpec map = builtin_map(m);
    const PolicyPtr p = make_policy({PolicyKind::kScriptedGreedy, 0.0, {}}, map);
    const Trajectory t = fixtures::fuzz_trajectory(m, 5, 40);
    const ProgressField field(t.initial());
    SelectionConfig cfg;
    Rng rng = make_rng(11);
    for (const TrajectoryStep& st : t.steps) {
      if (!st.action) continue;
      CandidateSet set;
      const ActionCommand chosen = select_action(st.state, 0, *p, (*st.action)[0], nullptr, field, cfg, rng, &set);
      ASSERT_EQ(set.actions.size(), 8u);
      const std::size_t k = argmax_first(set.rewards);
      EXPECT_EQ(chosen, set.actions[k]);
      EXPECT_GE(set.rewards[k], set.rewards[0]);
    }
  }
}

TEST(Selection, ModeNames) {
  for (auto m : {SelectionMode::kRaw, SelectionMode::kBassModel, SelectionMode::kBassOracle}) {
    EXPECT_EQ(selection_mode_from_string(to_string(m)), m);
  }
  EXPECT_EQ(error_kind_of([] { selection_mode_from_string("greedy"); }), ErrorKind::kUsage);
}
