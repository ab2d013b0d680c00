#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hcm/autodiff/rng.hpp"
#include "hcm/eval/metrics.hpp"
#include "hcm/oracle/dataset.hpp"

namespace hcm::eval {

/// A policy that may look at the episode record before it starts. Only the
/// oracle replay baseline uses this; learned policies ignore it.
class DatasetPolicy : public world::EpisodePolicy {
 public:
  virtual void prepare(const oracle::Episode& /*episode*/) {}
};

struct EpisodeResult {
  std::string id;
  bool success = false;
  double nav_error = 0.0;
  double spl = 0.0;
  double ndtw = 0.0;
  double trajectory_length = 0.0;
  double geodesic_length = 0.0;
  std::size_t steps = 0;
  std::size_t collisions = 0;
  world::Termination termination = world::Termination::MaxSteps;
  std::vector<world::Pose> poses;  // kept only on request
};

struct MetricsReport {
  std::string policy;
  std::string split;
  std::size_t episodes = 0;
  double sr = 0.0;
  double spl = 0.0;
  double ndtw = 0.0;
  double tl = 0.0;
  double ne = 0.0;
  std::vector<EpisodeResult> per_episode;

  io::Json to_json() const;
  static MetricsReport from_json(const io::Json& j);
  /// Aligned columns SR SPL NDTW TL NE.
  std::string to_table() const;
};

std::string table_header();
std::string table_row(const std::string& label, const MetricsReport& r);

struct EvalOptions {
  std::size_t max_steps = 1000;
  std::uint64_t seed = 1;
  /// Evaluate only the first `limit` episodes of the split; 0 means all.
  std::size_t limit = 0;
  bool keep_poses = false;
  /// Arc-length spacing of both paths before DTW.
  double resample = 0.25;
  /// Instruction paraphrase shown to the policy.
  std::size_t paraphrase = 0;
};

/// Runs every episode of the split closed loop and aggregates SR, SPL, NDTW,
/// TL and NE. Throws oracle::DatasetError for an unknown split.
MetricsReport evaluate(const oracle::Dataset& data, const std::string& split, DatasetPolicy& policy,
                       const EvalOptions& options = {});

/// Replays the stored oracle commands open loop, then declares stop.
class OracleReplayPolicy : public DatasetPolicy {
 public:
  void prepare(const oracle::Episode& episode) override { episode_ = &episode; }
  void reset(const world::EpisodeContext&) override {}
  world::PolicyOutput act(const world::Observation& obs, std::size_t step) override;

 private:
  const oracle::Episode* episode_ = nullptr;
};

/// Declares stop at the first step.
class StationaryPolicy : public DatasetPolicy {
 public:
  void reset(const world::EpisodeContext&) override {}
  world::PolicyOutput act(const world::Observation&, std::size_t) override { return {{0.0, 0.0}, true}; }
};

/// Draws high-level actions from a label histogram and holds each for
/// `hold` control steps: Forward drives at 0.25 m per hold, turns rotate 15
/// degrees per hold, Stop ends the episode.
class RandomPolicy : public DatasetPolicy {
 public:
  RandomPolicy(std::array<std::size_t, world::kHighActionCount> histogram, world::Kinematics k, std::size_t hold = 5);
  void reset(const world::EpisodeContext& ctx) override;
  world::PolicyOutput act(const world::Observation& obs, std::size_t step) override;

 private:
  std::array<double, world::kHighActionCount> cdf_{};
  world::Kinematics k_;
  std::size_t hold_;
  SplitMix64 rng_{0};
  world::HighAction current_ = world::HighAction::Forward;
};

}  // namespace hcm::eval
