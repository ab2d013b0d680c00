#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "hcm/io/json.hpp"
#include "hcm/oracle/controller.hpp"
#include "hcm/oracle/instruction.hpp"
#include "hcm/world/episode.hpp"

namespace hcm::oracle {

inline const std::array<std::string, 3> kSplitNames{"train", "val_seen", "val_unseen"};

class GenerationShortfall : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Episode {
  std::string id;
  std::string split;
  std::uint64_t world_seed = 0;
  world::SplitTag world_split = world::SplitTag::Seen;
  std::size_t goal_landmark = 0;
  std::vector<Instruction> instructions;  // paraphrases; [0] is instruction_text/tokens
  world::Pose start;
  world::Goal goal;
  std::vector<Point2> waypoints;
  std::vector<world::HighAction> high_actions;
  std::vector<world::LowAction> low_actions;
  std::vector<int> stop_labels;
  std::vector<std::size_t> waypoint_index;
  std::vector<world::Pose> poses;
  double geodesic_length = 0.0;

  std::size_t steps() const { return low_actions.size(); }
  const std::string& instruction_text() const { return instructions.front().text; }
  const std::vector<int>& instruction_tokens() const { return instructions.front().tokens; }
  /// Fraction of the route completed at step t (tracked waypoint / total).
  double progress(std::size_t t) const;
};

io::Json episode_to_json(const Episode& e);
Episode episode_from_json(const io::Json& j);

struct DatasetConfig {
  std::uint64_t seed = 1;
  double world_size = 10.0;
  double cell_size = 0.1;
  std::size_t landmark_count = 4;
  std::size_t landmark_vocab = world::kDefaultLandmarkVocab;
  /// Inclusive world-seed range; the split rule assigns each seed to seen or unseen.
  std::uint64_t world_seed_first = 1;
  std::uint64_t world_seed_last = 100;
  std::size_t train_episodes = 300;
  std::size_t val_seen_episodes = 50;
  std::size_t val_unseen_episodes = 50;
  double min_geodesic = 4.0;
  double max_geodesic = 14.0;
  std::size_t max_oracle_steps = 700;
  double inflation_margin = 0.12;
  std::size_t retry_factor = 20;
  RolloutOptions rollout;

  double inflation_radius() const { return rollout.kinematics.robot_radius + inflation_margin; }
  io::Json to_json() const;
  static DatasetConfig from_json(const io::Json& j);
  std::uint64_t hash() const;
};

struct SplitStats {
  std::size_t episodes = 0;
  std::size_t candidates = 0;        // sampled (world, start, goal) triples
  std::size_t planner_rejects = 0;   // no path or geodesic outside range
  std::size_t filter_checked = 0;
  std::size_t filter_accepted = 0;
  std::size_t long_rejects = 0;      // oracle longer than max_oracle_steps
};

struct DatasetManifest {
  std::map<std::string, std::vector<std::string>> splits;
  std::map<std::string, std::uint64_t> split_world_seeds_count;
  std::uint64_t config_hash = 0;
  std::uint64_t vocab_hash = 0;
  std::map<std::string, SplitStats> stats;
  double mean_steps = 0.0;
  double mean_geodesic = 0.0;
  std::array<std::size_t, world::kHighActionCount> action_histogram{};
  double acceptance_rate = 0.0;

  io::Json to_json() const;
  static DatasetManifest from_json(const io::Json& j);
};

struct Dataset {
  DatasetConfig config;
  DatasetManifest manifest;
  std::vector<Episode> episodes;
  std::map<std::uint64_t, world::World> worlds;

  std::vector<const Episode*> split(const std::string& name) const;
  const world::World& world_for(const Episode& e) const;
};

/// Worlds for one split tag within the configured seed range.
std::vector<std::uint64_t> world_seeds(const DatasetConfig& c, world::SplitTag tag);

/// Samples, plans, filters and labels episodes for every split. Throws
/// GenerationShortfall when a split cannot be filled within the retry budget.
Dataset generate_dataset(const DatasetConfig& config);

/// Writes episodes.jsonl, manifest.json, vocab.json, config.json and the world
/// files under dir.
void write_dataset(const Dataset& d, const std::filesystem::path& dir);

/// generate_dataset followed by write_dataset.
DatasetManifest emit_dataset(const DatasetConfig& config, const std::filesystem::path& dir);

/// Reads a dataset directory; worlds are regenerated from their seeds and
/// checked against the stored files.
Dataset load_dataset(const std::filesystem::path& dir);

/// Re-checks every Episode invariant; returns one message per violation.
std::vector<std::string> validate_episode(const world::World& w, const Episode& e, const DatasetConfig& c);

}  // namespace hcm::oracle
