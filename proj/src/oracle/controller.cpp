#include "hcm/oracle/controller.hpp"

#include <algorithm>
#include <cmath>

namespace hcm::oracle {

using world::HighAction;
using world::LowAction;
using world::Pose;

LowAction feedback_control(const Pose& p, const Point2& z, const ControllerGains& gains, const world::Kinematics& k) {
  const double rho = std::hypot(z.x - p.x, z.y - p.y);
  const double alpha = world::normalize_angle(std::atan2(z.y - p.y, z.x - p.x) - p.theta);
  const double v = std::clamp(gains.k_rho * rho * std::max(0.0, std::cos(alpha)), 0.0, k.v_max);
  const double omega = std::clamp(gains.k_alpha * alpha, -k.omega_max, k.omega_max);
  return {v, omega};
}

HighAction label_for_heading_error(double alpha, double band) {
  if (alpha > band) return HighAction::TurnLeft;
  if (alpha < -band) return HighAction::TurnRight;
  return HighAction::Forward;
}

Demonstration rollout_oracle(const world::World& w, const Pose& start, const std::vector<Point2>& waypoints,
                             const RolloutOptions& options) {
  if (waypoints.empty()) throw std::invalid_argument("rollout needs at least one waypoint");
  const auto& k = options.kinematics;
  Demonstration demo;
  demo.poses.push_back(start);
  Pose pose = start;
  std::size_t target = waypoints.size() > 1 ? 1 : 0;
  auto record = [&](const LowAction& a, HighAction label, int stop) {
    demo.low_actions.push_back(a);
    demo.high_actions.push_back(label);
    demo.stop_labels.push_back(stop);
    demo.waypoint_index.push_back(target);
  };
  while (true) {
    while (target < waypoints.size() &&
           std::hypot(waypoints[target].x - pose.x, waypoints[target].y - pose.y) < options.advance_radius)
      ++target;
    if (target == waypoints.size()) break;
    if (demo.steps() >= options.step_budget)
      throw RolloutDivergence("oracle rollout exceeded " + std::to_string(options.step_budget) + " steps at waypoint " +
                              std::to_string(target) + " of " + std::to_string(waypoints.size()));
    const Point2& z = waypoints[target];
    const LowAction a = world::clamp_action(feedback_control(pose, z, options.gains, k), k);
    const double alpha = world::normalize_angle(std::atan2(z.y - pose.y, z.x - pose.x) - pose.theta);
    record(a, label_for_heading_error(alpha, options.heading_band), 0);
    const Pose next = world::step_dynamics(pose, a, k.dt);
    if (world::check_collision(w, next, k.robot_radius))
      ++demo.collisions;
    else
      pose = next;
    demo.poses.push_back(pose);
  }
  for (std::size_t i = 0; i < options.hold_steps; ++i) {
    record({0.0, 0.0}, HighAction::Stop, 1);
    demo.poses.push_back(pose);
  }
  return demo;
}

bool filter_navigable(const world::World& w, const Pose& start, const std::vector<Point2>& waypoints,
                      const RolloutOptions& options) {
  if (waypoints.empty()) return false;
  if (world::check_collision(w, start, options.kinematics.robot_radius)) return false;
  try {
    const Demonstration demo = rollout_oracle(w, start, waypoints, options);
    if (demo.collisions != 0) return false;
    const Point2& goal = waypoints.back();
    const Pose& end = demo.poses.back();
    return std::hypot(end.x - goal.x, end.y - goal.y) < world::success_threshold(w);
  } catch (const RolloutDivergence&) {
    return false;
  }
}

}  // namespace hcm::oracle
