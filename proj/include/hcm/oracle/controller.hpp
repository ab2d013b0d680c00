#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "hcm/oracle/planner.hpp"
#include "hcm/world/dynamics.hpp"

namespace hcm::oracle {

struct ControllerGains {
  double k_rho = 1.0;
  double k_alpha = 2.0;
};

/// Go-to-goal proportional law toward waypoint z.
world::LowAction feedback_control(const world::Pose& p, const Point2& z, const ControllerGains& gains,
                                  const world::Kinematics& k);

class RolloutDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RolloutOptions {
  ControllerGains gains;
  world::Kinematics kinematics;
  double advance_radius = 0.15;
  double heading_band = 0.1308996938995747;  // 7.5 degrees
  /// Zero-velocity steps labelled Stop once the final waypoint is reached.
  std::size_t hold_steps = 10;
  std::size_t step_budget = 3000;
};

/// Oracle demonstration. poses has one more entry than the per-step labels.
struct Demonstration {
  std::vector<world::LowAction> low_actions;
  std::vector<world::HighAction> high_actions;
  std::vector<int> stop_labels;
  std::vector<std::size_t> waypoint_index;  // waypoint being tracked at each step
  std::vector<world::Pose> poses;
  std::size_t collisions = 0;

  std::size_t steps() const { return low_actions.size(); }
};

/// Label for one control step from the heading error to the tracked waypoint.
world::HighAction label_for_heading_error(double alpha, double band);

/// Tracks the waypoints in order. A step whose successor pose collides keeps
/// the pose and is counted. Throws RolloutDivergence past the step budget.
Demonstration rollout_oracle(const world::World& w, const world::Pose& start, const std::vector<Point2>& waypoints,
                             const RolloutOptions& options = {});

/// Rollout completes with no collision and ends within d_a of the last waypoint.
bool filter_navigable(const world::World& w, const world::Pose& start, const std::vector<Point2>& waypoints,
                      const RolloutOptions& options = {});

}  // namespace hcm::oracle
