#pragma once

#include <stdexcept>
#include <vector>

#include "hcm/oracle/planner.hpp"
#include "hcm/world/episode.hpp"

namespace hcm::eval {

using oracle::Point2;

class MetricsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Distance from the final pose to the goal.
double nav_error(const world::Trajectory& traj, const world::Goal& goal);

/// Sum of per-step displacements; turning in place adds nothing.
double path_length(const std::vector<world::Pose>& poses);

struct SplTerm {
  bool success = false;
  double shortest = 0.0;
  double actual = 0.0;
};

/// One episode's S·l/max(p, l). Throws MetricsError for a non-positive l.
double spl_term(const SplTerm& e);
/// Mean of spl_term; 0 for an empty set.
double spl(const std::vector<SplTerm>& episodes);

/// Boundary-matched monotone DTW with Euclidean point cost.
double dtw(const std::vector<Point2>& query, const std::vector<Point2>& reference);
/// exp(−DTW / (|R|·d_th)).
double ndtw(const std::vector<Point2>& query, const std::vector<Point2>& reference, double d_th);

/// Points every `spacing` metres of arc length along the polyline, keeping
/// both endpoints.
std::vector<Point2> resample_path(const std::vector<Point2>& path, double spacing);
std::vector<Point2> pose_path(const std::vector<world::Pose>& poses);

}  // namespace hcm::eval
