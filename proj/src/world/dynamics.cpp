#include "hcm/world/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hcm::world {

std::string to_string(HighAction a) {
  switch (a) {
    case HighAction::Forward: return "forward";
    case HighAction::TurnLeft: return "turn_left";
    case HighAction::TurnRight: return "turn_right";
    case HighAction::Stop: return "stop";
  }
  return "?";
}

HighAction parse_high_action(const std::string& s) {
  for (int i = 0; i < static_cast<int>(kHighActionCount); ++i)
    if (to_string(static_cast<HighAction>(i)) == s) return static_cast<HighAction>(i);
  throw std::invalid_argument("unknown high-level action '" + s + "'");
}

double normalize_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(a, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  if (r > std::numbers::pi) r -= two_pi;
  return r;
}

LowAction clamp_action(const LowAction& a, const Kinematics& k) {
  auto finite_or_zero = [](double x) { return std::isfinite(x) ? x : 0.0; };
  return {std::clamp(finite_or_zero(a.v), 0.0, k.v_max), std::clamp(finite_or_zero(a.omega), -k.omega_max, k.omega_max)};
}

Pose step_dynamics(const Pose& p, const LowAction& a, double dt) {
  return {p.x + a.v * std::cos(p.theta) * dt, p.y + a.v * std::sin(p.theta) * dt, normalize_angle(p.theta + a.omega * dt)};
}

double distance_to_cell(const World& w, double px, double py, int cx, int cy) {
  const double x0 = cx * w.cell_size, x1 = (cx + 1) * w.cell_size;
  const double y0 = cy * w.cell_size, y1 = (cy + 1) * w.cell_size;
  const double dx = px < x0 ? x0 - px : px > x1 ? px - x1 : 0.0;
  const double dy = py < y0 ? y0 - py : py > y1 ? py - y1 : 0.0;
  return std::hypot(dx, dy);
}

bool check_collision(const World& w, const Pose& p, double radius) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) return true;
  const int x_lo = w.cell_of(p.x - radius), x_hi = w.cell_of(p.x + radius);
  const int y_lo = w.cell_of(p.y - radius), y_hi = w.cell_of(p.y + radius);
  for (int y = y_lo; y <= y_hi; ++y)
    for (int x = x_lo; x <= x_hi; ++x)
      if (!w.free(x, y) && distance_to_cell(w, p.x, p.y, x, y) < radius) return true;
  return false;
}

}  // namespace hcm::world
