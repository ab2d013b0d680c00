#pragma once

#include <cstddef>
#include <string>

#include "hcm/world/world.hpp"

namespace hcm::world {

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

struct LowAction {
  double v = 0.0;
  double omega = 0.0;
};

enum class HighAction : int { Forward = 0, TurnLeft = 1, TurnRight = 2, Stop = 3 };
inline constexpr std::size_t kHighActionCount = 4;
inline constexpr double kForwardStep = 0.25;
inline constexpr double kTurnStep = 0.2617993877991494;  // 15 degrees

std::string to_string(HighAction a);
HighAction parse_high_action(const std::string& s);

/// Robot footprint and control limits.
struct Kinematics {
  double v_max = 0.5;
  double omega_max = 1.5707963267948966;
  double dt = 0.1;
  double robot_radius = 0.18;
  double omega_stop = 0.05;
  double v_stop = 0.02;
  std::size_t n_stop = 10;
};

/// Wraps to (−π, π].
double normalize_angle(double a);

LowAction clamp_action(const LowAction& a, const Kinematics& k);

/// Unicycle update with θ renormalized.
Pose step_dynamics(const Pose& p, const LowAction& a, double dt);

/// True iff the disc of `radius` strictly overlaps a non-free cell. Any part of
/// the disc outside the grid counts as overlap.
bool check_collision(const World& w, const Pose& p, double radius);

/// Exact distance from a point to the closest point of cell (x, y).
double distance_to_cell(const World& w, double px, double py, int cx, int cy);

}  // namespace hcm::world
