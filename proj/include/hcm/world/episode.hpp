#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hcm/world/observation.hpp"

namespace hcm::world {

struct Goal {
  double x = 0.0;
  double y = 0.0;
};

/// What a policy sees when an episode starts.
struct EpisodeContext {
  const World* world = nullptr;
  const std::vector<int>* instruction = nullptr;
  Pose start;
  std::uint64_t seed = 0;
};

struct PolicyOutput {
  LowAction action;
  bool stop = false;
};

class EpisodePolicy {
 public:
  virtual ~EpisodePolicy() = default;
  virtual void reset(const EpisodeContext& ctx) = 0;
  virtual PolicyOutput act(const Observation& obs, std::size_t step) = 0;
};

enum class Termination { ExplicitStop, KinematicStop, MaxSteps };

struct Trajectory {
  std::vector<Pose> poses;          // poses[0] is the start
  std::vector<LowAction> actions;   // clamped commands, one per step
  std::vector<bool> stop_flags;     // per step: the policy declared stop
  std::size_t collisions = 0;
  Termination termination = Termination::MaxSteps;

  std::size_t steps() const { return actions.size(); }
  const Pose& final_pose() const { return poses.back(); }
};

struct EpisodeLimits {
  std::size_t max_steps = 1000;
  Kinematics kinematics;
};

/// True when the last n_stop commands are all below the stop thresholds.
bool kinematic_stop(const std::vector<LowAction>& actions, const Kinematics& k);

/// Closed loop observe → act → clamp → integrate. A step that would collide
/// leaves the pose unchanged and counts a collision.
Trajectory run_episode(const World& w, EpisodePolicy& policy, const Pose& start, const std::vector<int>& instruction,
                       const EpisodeLimits& limits, std::uint64_t seed = 0);

double distance_to_goal(const Pose& p, const Goal& g);

/// Final distance below d_a and the agent came to a stop.
bool is_success(const Trajectory& traj, const Goal& goal, double d_a, const Kinematics& k);

}  // namespace hcm::world
