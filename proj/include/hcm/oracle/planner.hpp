#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "hcm/world/world.hpp"

namespace hcm::oracle {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Point2& a, const Point2& b);
double polyline_length(const std::vector<Point2>& pts);

class NoPathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Occupancy inflated by a clearance radius: a cell is blocked when it is not
/// free or its centre lies closer than `radius` to any non-free cell.
struct PlanningGrid {
  const world::World* world = nullptr;
  double radius = 0.0;
  std::vector<char> blocked;

  bool is_blocked(int x, int y) const;
};

PlanningGrid inflate(const world::World& w, double radius);

/// Path cost in metres from move counts; exact for a given (straight, diagonal).
double grid_path_cost(std::size_t straight, std::size_t diagonal, double cell_size);

struct Plan {
  std::vector<std::pair<int, int>> cells;  // 8-connected grid path, start cell first
  std::size_t straight_moves = 0;
  std::size_t diagonal_moves = 0;
  double cost = 0.0;                       // grid path length in metres
  std::vector<Point2> waypoints;           // sparse, start and goal included
  double length = 0.0;                     // polyline length of the waypoints
};

struct PlannerOptions {
  /// Waypoints are no further apart than this.
  double max_segment = 1.0;
  /// Drop intermediate corners when the straight segment stays clear.
  bool shortcut = true;
};

/// A* over the inflated grid with the octile heuristic. Diagonal moves may not
/// cut a blocked corner. Throws NoPathError when start or goal is blocked or
/// the goal cannot be reached.
Plan astar_plan(const PlanningGrid& grid, const Point2& start, const Point2& goal, const PlannerOptions& options = {});

/// True when no cell touched by the segment is blocked in the inflated grid.
bool segment_clear(const PlanningGrid& grid, const Point2& a, const Point2& b);

/// Segment test for the robot disc against the raw world.
bool segment_collision_free(const world::World& w, const Point2& a, const Point2& b, double robot_radius);

}  // namespace hcm::oracle
