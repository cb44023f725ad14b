#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "fixtures.hpp"
#include "json.hpp"
#include "movingout/bass.hpp"
#include "movingout/data_io.hpp"
#include "movingout/errors.hpp"

using namespace movingout;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "movingout_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<fs::path> listing(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path().filename());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(Cli, HelpListsDesignFlags) {
  const CliRun r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  for (const char* flag : {"--ac-denominator", "--validate-augment", "--n-candidates", "--oracle", "--hidden",
                           "--horizon", "--sigma", "--perturb-heading", "--port", "--max-sessions"}) {
    EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
  }
  for (const char* sub : {"collect", "augment", "train", "eval", "replay", "play", "map-list"}) {
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
  }
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"eval", "--seeds", "0", "--maps", "9"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"eval", "--maps", "9", "--mode", "greedy"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"eval", "--maps", "9", "--ac-denominator", "half"}).code, cli::kExitUsage);
}

TEST(Cli, IdLists) {
  EXPECT_EQ(cli::parse_id_list("1-4,7,3"), (std::vector<int>{1, 2, 3, 4, 7}));
  EXPECT_EQ(cli::parse_id_list("5"), (std::vector<int>{5}));
  EXPECT_THROW(cli::parse_id_list("4-1"), Error);
  EXPECT_THROW(cli::parse_id_list("a"), Error);
}

TEST(Cli, MapListShowsAllMaps) {
  const CliRun r = run({"map-list", "--json"});
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["maps"].size(), 12u);
  EXPECT_TRUE(j.contains("tool_version"));
}

TEST(Cli, CollectWritesOneFilePerMapAndSeed) {
  const fs::path dir = scratch("collect");
  const CliRun r = run({"collect", "--maps", "1-12", "--seeds", "0-4", "--horizon", "15", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(listing(dir).size(), 60u);
  EXPECT_NE(r.out.find("tcr"), std::string::npos);
}

TEST(Cli, CollectIsDeterministic) {
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  ASSERT_EQ(run({"collect", "--maps", "4,8", "--seeds", "2,3", "--noise", "0.3", "--randomize", "--horizon", "60",
                 "--jobs", "2", "--out", a.string()})
                .code,
            0);
  ASSERT_EQ(run({"collect", "--maps", "4,8", "--seeds", "3,2,3", "--noise", "0.3", "--randomize", "--horizon", "60",
                 "--jobs", "1", "--out", b.string()})
                .code,
            0);
  ASSERT_EQ(listing(a), listing(b));
  for (const fs::path& f : listing(a)) EXPECT_EQ(file_bytes(a / f), file_bytes(b / f)) << f;
}

TEST(Cli, CollectUnknownMapIsValidationError) {
  const fs::path dir = scratch("bad_map");
  const CliRun r = run({"collect", "--maps", "13", "--out", dir.string()});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_NE(r.err.find("MapValidation"), std::string::npos);
}

TEST(Cli, DataDirFromEnvironment) {
  const fs::path dir = scratch("env");
  ::setenv("MOVINGOUT_DATA_DIR", dir.c_str(), 1);
  const CliRun r = run({"collect", "--maps", "2", "--seeds", "1", "--horizon", "5"});
  ::unsetenv("MOVINGOUT_DATA_DIR");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "trajectories" / "m2-s1.jsonl"));
}

TEST(Cli, ReplayCheck) {
  const fs::path dir = scratch("replay");
  const Trajectory t = fixtures::fuzz_trajectory(7, 3, 80);
  write_trajectory(t, dir / "good.jsonl");
  EXPECT_EQ(run({"replay", "--check", (dir / "good.jsonl").string()}).code, 0);

  // Corrupt one state line by hand.
  std::string text = trajectory_to_jsonl(t);
  std::vector<std::string> lines;
  std::stringstream ss(text);
  for (std::string l; std::getline(ss, l);) lines.push_back(l);
  auto j = nlohmann::json::parse(lines[1 + 25]);
  j["state"][0] = j["state"][0].get<double>() + 1e-9;
  lines[1 + 25] = j.dump();
  std::ofstream(dir / "bad.jsonl") << [&] {
    std::string s;
    for (const auto& l : lines) s += l + "\n";
    return s;
  }();
  const CliRun bad = run({"replay", "--check", (dir / "bad.jsonl").string()});
  EXPECT_EQ(bad.code, cli::kExitDivergence);
  EXPECT_NE(bad.err.find("step 25"), std::string::npos) << bad.err;

  EXPECT_EQ(run({"replay", "--check", (dir / "missing.jsonl").string()}).code, cli::kExitValidation);
}

TEST(Cli, AugmentWithoutNoiseKeepsInputsAndAddsRecombinations) {
  const fs::path in = scratch("aug_in");
  const fs::path out = scratch("aug_out");
  ASSERT_EQ(run({"collect", "--maps", "2", "--seeds", "0-3", "--noise", "0.4", "--out", in.string()}).code, 0);
  const CliRun r = run({"augment", "--in", in.string(), "--out", out.string(), "--sigma", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::vector<Trajectory> inputs = read_trajectories(in.string());
  const std::size_t recombined = recombine(inputs).size();
  EXPECT_EQ(listing(out).size(), inputs.size() + recombined);
  for (const fs::path& f : listing(in)) EXPECT_EQ(file_bytes(in / f), file_bytes(out / f)) << f;

  const fs::path validated = scratch("aug_validated");
  ASSERT_EQ(run({"augment", "--in", in.string(), "--out", validated.string(), "--sigma", "0", "--validate-augment"}).code,
            0);
  RecombineOptions ro;
  ro.validate = true;
  EXPECT_EQ(listing(validated).size(), inputs.size() + recombine(inputs, ro).size());
}

TEST(Cli, AugmentPerturbsPartner) {
  const fs::path in = scratch("aug_p_in");
  const fs::path out = scratch("aug_p_out");
  ASSERT_EQ(run({"collect", "--maps", "9", "--seeds", "0", "--horizon", "30", "--out", in.string()}).code, 0);
  ASSERT_EQ(run({"augment", "--in", in.string(), "--out", out.string(), "--no-perturb-heading"}).code, 0);
  const Trajectory orig = read_trajectory(in / "m9-s0.jsonl");
  const Trajectory p = read_trajectory(out / "m9-s0~p.jsonl");
  for (std::size_t t = 0; t < orig.steps.size(); ++t) {
    EXPECT_EQ(p.steps[t].state.agents[0], orig.steps[t].state.agents[0]);
    EXPECT_EQ(p.steps[t].state.agents[1].facing, orig.steps[t].state.agents[1].facing);
  }
}

TEST(Cli, TrainBothKindsWriteLoadableModels) {
  const fs::path dir = scratch("train");
  ASSERT_EQ(run({"collect", "--maps", "3", "--seeds", "0-4", "--horizon", "60", "--out", (dir / "t").string()}).code, 0);
  const CliRun bc = run({"train", "bc", "--data", (dir / "t").string(), "--out", (dir / "bc.bin").string(), "--epochs",
                      "2", "--hidden", "16", "--horizon", "2", "--report", (dir / "bc.json").string()});
  ASSERT_EQ(bc.code, 0) << bc.err;
  EXPECT_EQ(BcPolicy::load(dir / "bc.bin")->horizon(), 2);
  const auto report = nlohmann::json::parse(file_bytes(dir / "bc.json"));
  EXPECT_TRUE(report.contains("tool_version"));
  EXPECT_EQ(report["train_episodes"], 4);

  const CliRun dyn = run({"train", "dynamics", "--data", (dir / "t/*.jsonl").string(), "--out",
                       (dir / "dyn.bin").string(), "--epochs", "1", "--hidden", "16", "--latent", "8"});
  ASSERT_EQ(dyn.code, 0) << dyn.err;
  EXPECT_EQ(LatentDynamics::load(dir / "dyn.bin").latent_width(), 8);

  EXPECT_EQ(run({"train", "bc", "--data", (dir / "none/*.jsonl").string()}).code, cli::kExitValidation);
}

TEST(Cli, EvalReportsBothModesWithStdErrors) {
  const fs::path dir = scratch("eval");
  const CliRun r = run({"eval", "--maps", "9", "--seeds", "20", "--noise", "0.5", "--mode", "raw", "--oracle",
                     "--report", (dir / "r.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("bass-oracle"), std::string::npos);
  const auto j = nlohmann::json::parse(file_bytes(dir / "r.json"));
  EXPECT_TRUE(j.contains("tool_version"));
  ASSERT_EQ(j["runs"].size(), 2u);
  EXPECT_EQ(j["runs"][0]["mode"], "raw");
  EXPECT_EQ(j["runs"][1]["mode"], "bass-oracle");
  for (const auto& run_j : j["runs"]) {
    const auto& nfd = run_j["maps"][0]["nfd"];
    EXPECT_TRUE(nfd["mean"].is_number());
    EXPECT_TRUE(nfd["stderr"].is_number());
    EXPECT_EQ(run_j["maps"][0]["episodes"], 20);
  }
  const CliRun again = run({"eval", "--maps", "9", "--seeds", "20", "--noise", "0.5", "--mode", "raw", "--oracle",
                         "--jobs", "3", "--json"});
  ASSERT_EQ(again.code, 0);
  auto j2 = nlohmann::json::parse(again.out);
  EXPECT_EQ(j2["runs"], j["runs"]);
}

TEST(Cli, EvalBassModelNeedsModel) {
  EXPECT_EQ(run({"eval", "--maps", "3", "--seeds", "1", "--mode", "bass-model"}).code, cli::kExitUsage);
}
