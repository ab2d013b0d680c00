#include "hcm/world/episode.hpp"

#include <cmath>

namespace hcm::world {

bool kinematic_stop(const std::vector<LowAction>& actions, const Kinematics& k) {
  if (k.n_stop == 0 || actions.size() < k.n_stop) return false;
  for (std::size_t i = actions.size() - k.n_stop; i < actions.size(); ++i)
    if (std::abs(actions[i].v) >= k.v_stop || std::abs(actions[i].omega) >= k.omega_stop) return false;
  return true;
}

Trajectory run_episode(const World& w, EpisodePolicy& policy, const Pose& start, const std::vector<int>& instruction,
                       const EpisodeLimits& limits, std::uint64_t seed) {
  const Kinematics& k = limits.kinematics;
  Trajectory traj;
  traj.poses.push_back(start);
  policy.reset({&w, &instruction, start, seed});
  Pose pose = start;
  for (std::size_t step = 0; step < limits.max_steps; ++step) {
    const PolicyOutput out = policy.act(render_observation(w, pose), step);
    if (out.stop) {
      traj.actions.push_back({0.0, 0.0});
      traj.stop_flags.push_back(true);
      traj.poses.push_back(pose);
      traj.termination = Termination::ExplicitStop;
      return traj;
    }
    const LowAction a = clamp_action(out.action, k);
    const Pose next = step_dynamics(pose, a, k.dt);
    if (check_collision(w, next, k.robot_radius))
      ++traj.collisions;
    else
      pose = next;
    traj.actions.push_back(a);
    traj.stop_flags.push_back(false);
    traj.poses.push_back(pose);
    if (kinematic_stop(traj.actions, k)) {
      traj.termination = Termination::KinematicStop;
      return traj;
    }
  }
  traj.termination = Termination::MaxSteps;
  return traj;
}

double distance_to_goal(const Pose& p, const Goal& g) { return std::hypot(p.x - g.x, p.y - g.y); }

bool is_success(const Trajectory& traj, const Goal& goal, double d_a, const Kinematics& k) {
  if (traj.poses.empty()) return false;
  const bool stopped = traj.termination == Termination::ExplicitStop || kinematic_stop(traj.actions, k);
  return stopped && distance_to_goal(traj.final_pose(), goal) < d_a;
}

}  // namespace hcm::world
