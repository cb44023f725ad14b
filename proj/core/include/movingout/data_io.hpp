#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "movingout/nn.hpp"
#include "movingout/trajectory.hpp"

namespace movingout {

/// One JSON object per line: a header record, then one record per state.
/// Doubles are written as shortest round-trip decimals, so reading a
/// written trajectory gives back the same bits.
std::string trajectory_to_jsonl(const Trajectory& traj);
/// Throws ParseError (with the 1-based line) and SchemaVersionError.
Trajectory trajectory_from_jsonl(const std::string& text);

void write_trajectory(const Trajectory& traj, const std::filesystem::path& path);
/// Throws IO when the file cannot be opened.
Trajectory read_trajectory(const std::filesystem::path& path);

/// Files matched by a directory (every *.jsonl inside), a glob pattern or a
/// single file, sorted by path.
std::vector<std::filesystem::path> match_trajectory_files(const std::string& pattern);
/// Throws EmptyDataset when nothing matches.
std::vector<Trajectory> read_trajectories(const std::string& pattern);

/// Re-simulates the stored action stream from the stored map and seed and
/// compares every state bit for bit. Throws ReplayDivergence at the first
/// differing step.
void replay_check(const Trajectory& traj);

/// Episode settings that reproduce a stored trajectory.
EpisodeConfig replay_config(const Trajectory& traj);

enum class DatasetKind { kBcPairs, kTransitions };
DatasetKind dataset_kind_from_string(const std::string& s);

/// (observation, bc_target) pairs, one per agent per applied action, ordered
/// by (trajectory, t, agent). With `horizon` > 1 the targets stack the next
/// actions, repeating the last one past the end of the episode.
nn::Dataset build_bc_pairs(const std::vector<Trajectory>& trajs, int horizon = 1);

/// Ego-perspective transitions (s_t, a_t, a_t^partner, s_{t+1}); both
/// perspectives of every step, ordered by (trajectory, t, agent).
struct TransitionSet {
  nn::Matrix state;           // W x N
  nn::Matrix action;          // 4 x N
  nn::Matrix partner_action;  // 4 x N
  nn::Matrix next_state;      // W x N
  std::size_t size() const { return static_cast<std::size_t>(state.cols()); }
};

TransitionSet build_transitions(const std::vector<Trajectory>& trajs);

enum class SplitMode { kByEpisode, kByAttribute };
SplitMode split_mode_from_string(const std::string& s);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Splits trajectories into train and test index sets. by-attribute keeps
/// every item attribute key on one side only: episodes sharing a key stay
/// together. Throws Usage for a ratio outside (0, 1) and InfeasibleSplit when
/// one side would be empty.
Split split_dataset(const std::vector<Trajectory>& trajs, SplitMode mode, double ratio, std::uint64_t seed);

/// Disjoint train/test pools of item attribute keys over every variant the
/// maps' randomizable items can take. Collect training episodes with the test
/// pool excluded (and vice versa) to keep objects unseen at test time.
struct AttributePools {
  std::set<std::string> train;
  std::set<std::string> test;
};

AttributePools attribute_pools(const std::vector<MapSpec>& maps, double ratio, std::uint64_t seed);

template <typename T>
std::vector<T> select(const std::vector<T>& items, const std::vector<std::size_t>& indices) {
  std::vector<T> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(items.at(i));
  return out;
}

}  // namespace movingout
