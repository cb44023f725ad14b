#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "movingout/data_io.hpp"
#include "movingout/errors.hpp"
#include "movingout/policies.hpp"

using namespace movingout;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "movingout_test_data_io" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

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

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t end = text.find('\n', start);
    out.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

Trajectory header_only(int map_id, std::uint64_t seed, const std::set<std::string>& exclude) {
  RandomizeOptions opt;
  opt.exclude = exclude;
  const MapSpec played = randomize(builtin_map(map_id), seed, opt);
  EpisodeConfig cfg{played, seed};
  return begin_trajectory(cfg, initial_state(played), "ep-" + std::to_string(map_id) + "-" + std::to_string(seed));
}

}  // namespace

TEST(TrajectoryFile, RoundTripIsBitExact) {
  for (int i = 0; i < 100; ++i) {
    const Trajectory t = fixtures::fuzz_trajectory(1 + i % 12, static_cast<std::uint64_t>(i), 40, i % 2 == 1);
    const std::string text = trajectory_to_jsonl(t);
    const Trajectory back = trajectory_from_jsonl(text);
    ASSERT_EQ(back, t) << t.header.id;
    ASSERT_EQ(trajectory_to_jsonl(back), text) << t.header.id;
  }
}

TEST(TrajectoryFile, WriteAndReadFile) {
  const auto dir = scratch_dir("files");
  const Trajectory t = fixtures::fuzz_trajectory(6, 3, 50);
  write_trajectory(t, dir / "a.jsonl");
  EXPECT_EQ(read_trajectory(dir / "a.jsonl"), t);
}

TEST(TrajectoryFile, ProvenanceRoundTrip) {
  Trajectory t = fixtures::fuzz_trajectory(2, 1, 10);
  t.header.provenance = Provenance{"recombine", {"a", "b"}, std::make_pair(3, 7), 0.0, 1};
  EXPECT_EQ(trajectory_from_jsonl(trajectory_to_jsonl(t)).header, t.header);
}

TEST(TrajectoryFile, TruncatedLastLineReportsThatLine) {
  const Trajectory t = fixtures::fuzz_trajectory(3, 2, 20);
  auto lines = lines_of(trajectory_to_jsonl(t));
  const std::size_t last = lines.size();
  lines.back() = lines.back().substr(0, lines.back().size() / 2);
  try {
    trajectory_from_jsonl(join(lines));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), last);
  }
}

TEST(TrajectoryFile, WrongSchemaRejected) {
  const Trajectory t = fixtures::fuzz_trajectory(3, 2, 5);
  auto lines = lines_of(trajectory_to_jsonl(t));
  const auto pos = lines[0].find("movingout-traj/1");
  ASSERT_NE(pos, std::string::npos);
  lines[0].replace(pos, 16, "movingout-traj/9");
  EXPECT_EQ(error_kind_of([&] { trajectory_from_jsonl(join(lines)); }), ErrorKind::kSchemaVersion);
}

TEST(TrajectoryFile, MissingFileIsIoError) {
  EXPECT_EQ(error_kind_of([] { read_trajectory("/nonexistent/trajectory.jsonl"); }), ErrorKind::kIO);
}

TEST(Replay, StoredEpisodeReplays) {
  for (int m = 1; m <= 12; ++m) {
    const Trajectory t = trajectory_from_jsonl(trajectory_to_jsonl(fixtures::fuzz_trajectory(m, 40 + m, 80, true)));
    EXPECT_NO_THROW(replay_check(t)) << "map " << m;
  }
}

TEST(Replay, CorruptedStateDivergesAtThatStep) {
  Trajectory t = fixtures::fuzz_trajectory(4, 8, 60);
  t.steps[17].state.agents[1].position.x += 1e-12;
  try {
    replay_check(t);
    FAIL() << "expected ReplayDivergence";
  } catch (const ReplayDivergence& e) {
    EXPECT_EQ(e.step(), 17);
  }
}

TEST(Dataset, BcPairsCountTwoPerStep) {
  const Trajectory t = fixtures::fuzz_trajectory(11, 1, 300);
  ASSERT_EQ(t.length(), 300u);
  const nn::Dataset d = build_bc_pairs({t});
  EXPECT_EQ(d.size(), 600u);
  EXPECT_EQ(d.targets.rows(), 4);
  EXPECT_EQ(static_cast<std::size_t>(d.inputs.rows()), observation_width(t.initial().items.size()));
  // Ordering (t, agent): column 1 is agent 1's view of step 0.
  const Observation obs1 = encode_observation(t.steps[0].state, 1);
  for (std::size_t r = 0; r < obs1.size(); ++r) EXPECT_EQ(d.inputs(static_cast<Eigen::Index>(r), 1), obs1[r]);
}

TEST(Dataset, StackedHorizonTargets) {
  const Trajectory t = fixtures::fuzz_trajectory(2, 5, 10);
  const nn::Dataset d = build_bc_pairs({t}, 8);
  EXPECT_EQ(d.targets.rows(), 32);
  const auto last = bc_target((*t.steps[t.length() - 1].action)[0]);
  const Eigen::Index col = static_cast<Eigen::Index>(2 * (t.length() - 1));
  for (int h = 0; h < 8; ++h) EXPECT_EQ(d.targets(4 * h, col), last[0]);
}

TEST(Dataset, TransitionsCountBothPerspectives) {
  const Trajectory t = fixtures::fuzz_trajectory(5, 2, 120);
  const TransitionSet ts = build_transitions({t});
  EXPECT_EQ(ts.size(), 2 * t.length());
  const Observation next0 = encode_observation(t.steps[1].state, 0);
  for (std::size_t r = 0; r < next0.size(); ++r) EXPECT_EQ(ts.next_state(static_cast<Eigen::Index>(r), 0), next0[r]);
  EXPECT_EQ(ts.partner_action(0, 0), (*t.steps[0].action)[1].move);
}

TEST(Dataset, EmptyGlob) {
  const auto dir = scratch_dir("empty");
  EXPECT_EQ(error_kind_of([&] { read_trajectories((dir / "*.jsonl").string()); }), ErrorKind::kEmptyDataset);
}

TEST(Dataset, GlobAndDirectoryMatchSorted) {
  const auto dir = scratch_dir("glob");
  for (int i = 0; i < 3; ++i) write_trajectory(fixtures::fuzz_trajectory(9, 3 - i, 5), dir / ("t" + std::to_string(i) + ".jsonl"));
  const auto files = match_trajectory_files(dir.string());
  ASSERT_EQ(files.size(), 3u);
  EXPECT_TRUE(std::is_sorted(files.begin(), files.end()));
  EXPECT_EQ(match_trajectory_files((dir / "t*.jsonl").string()), files);
}

TEST(Dataset, WidthMismatchAcrossFiles) {
  const Trajectory a = fixtures::fuzz_trajectory(1, 1, 5);
  const Trajectory b = fixtures::fuzz_trajectory(10, 1, 5);
  ASSERT_NE(a.initial().items.size(), b.initial().items.size());
  EXPECT_EQ(error_kind_of([&] { build_bc_pairs({a, b}); }), ErrorKind::kWidthMismatch);
  EXPECT_EQ(error_kind_of([&] { build_transitions({a, b}); }), ErrorKind::kWidthMismatch);
}

TEST(Split, ByEpisodeEightTwo) {
  std::vector<Trajectory> trajs;
  for (int i = 0; i < 10; ++i) trajs.push_back(header_only(3, static_cast<std::uint64_t>(i), {}));
  const Split s = split_dataset(trajs, SplitMode::kByEpisode, 0.8, 1);
  EXPECT_EQ(s.train.size(), 8u);
  EXPECT_EQ(s.test.size(), 2u);
  for (std::size_t i : s.test) EXPECT_EQ(std::count(s.train.begin(), s.train.end(), i), 0);
  EXPECT_EQ(split_dataset(trajs, SplitMode::kByEpisode, 0.8, 1).train, s.train);
}

TEST(Split, ByAttributeSharesNoKeys) {
  const std::vector<MapSpec> maps{builtin_map(2), builtin_map(3), builtin_map(5)};
  const AttributePools pools = attribute_pools(maps, 0.7, 4);
  std::vector<Trajectory> trajs;
  for (int i = 0; i < 100; ++i) {
    const bool test_side = i % 5 == 0;
    trajs.push_back(header_only(maps[i % 3].id, static_cast<std::uint64_t>(i), test_side ? pools.train : pools.test));
  }
  const Split s = split_dataset(trajs, SplitMode::kByAttribute, 0.8, 2);
  ASSERT_FALSE(s.train.empty());
  ASSERT_FALSE(s.test.empty());
  std::set<std::string> train_keys;
  for (std::size_t i : s.train) train_keys.insert(trajs[i].header.attributes.begin(), trajs[i].header.attributes.end());
  for (std::size_t i : s.test) {
    for (const auto& k : trajs[i].header.attributes) EXPECT_EQ(train_keys.count(k), 0u) << k;
  }
}

TEST(Split, IdenticalPoolsInfeasible) {
  std::vector<Trajectory> trajs;
  for (int i = 0; i < 6; ++i) trajs.push_back(header_only(10, 7, {}));
  EXPECT_EQ(error_kind_of([&] { split_dataset(trajs, SplitMode::kByAttribute, 0.8, 0); }),
            ErrorKind::kInfeasibleSplit);
}

TEST(Split, RatioOutsideOpenInterval) {
  std::vector<Trajectory> trajs{header_only(3, 1, {}), header_only(3, 2, {})};
  EXPECT_EQ(error_kind_of([&] { split_dataset(trajs, SplitMode::kByEpisode, 1.0, 0); }), ErrorKind::kUsage);
  EXPECT_EQ(error_kind_of([&] { split_dataset(trajs, SplitMode::kByEpisode, 0.0, 0); }), ErrorKind::kUsage);
}
