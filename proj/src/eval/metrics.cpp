#include "hcm/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hcm::eval {

double nav_error(const world::Trajectory& traj, const world::Goal& goal) {
  if (traj.poses.empty()) throw MetricsError("nav_error: empty trajectory");
  return world::distance_to_goal(traj.final_pose(), goal);
}

double path_length(const std::vector<world::Pose>& poses) {
  double total = 0.0;
  for (std::size_t i = 1; i < poses.size(); ++i)
    total += std::hypot(poses[i].x - poses[i - 1].x, poses[i].y - poses[i - 1].y);
  return total;
}

double spl_term(const SplTerm& e) {
  if (!(e.shortest > 0.0)) throw MetricsError("spl: shortest path length must be positive");
  if (!e.success) return 0.0;
  return e.shortest / std::max(e.actual, e.shortest);
}

double spl(const std::vector<SplTerm>& episodes) {
  if (episodes.empty()) return 0.0;
  double total = 0.0;
  for (const auto& e : episodes) total += spl_term(e);
  return total / static_cast<double>(episodes.size());
}

double dtw(const std::vector<Point2>& query, const std::vector<Point2>& reference) {
  if (query.empty() || reference.empty()) throw MetricsError("dtw: empty path");
  const std::size_t n = reference.size(), m = query.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m, inf), cur(m, inf);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double c = oracle::distance(reference[i], query[j]);
      double best;
      if (i == 0 && j == 0)
        best = 0.0;
      else {
        best = inf;
        if (i > 0) best = std::min(best, prev[j]);
        if (j > 0) best = std::min(best, cur[j - 1]);
        if (i > 0 && j > 0) best = std::min(best, prev[j - 1]);
      }
      cur[j] = best + c;
    }
    std::swap(prev, cur);
  }
  return prev[m - 1];
}

double ndtw(const std::vector<Point2>& query, const std::vector<Point2>& reference, double d_th) {
  if (!(d_th > 0.0)) throw MetricsError("ndtw: threshold must be positive");
  return std::exp(-dtw(query, reference) / (static_cast<double>(reference.size()) * d_th));
}

std::vector<Point2> resample_path(const std::vector<Point2>& path, double spacing) {
  if (path.empty()) throw MetricsError("resample_path: empty path");
  if (!(spacing > 0.0)) throw MetricsError("resample_path: spacing must be positive");
  std::vector<Point2> out{path.front()};
  double carry = 0.0;  // arc length since the last emitted point
  for (std::size_t i = 1; i < path.size(); ++i) {
    const Point2 a = path[i - 1], b = path[i];
    const double len = oracle::distance(a, b);
    double s = spacing - carry;
    while (s <= len) {
      const double f = s / len;
      out.push_back({a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)});
      s += spacing;
    }
    carry = len - (s - spacing);
  }
  if (oracle::distance(out.back(), path.back()) > 1e-9) out.push_back(path.back());
  return out;
}

std::vector<Point2> pose_path(const std::vector<world::Pose>& poses) {
  std::vector<Point2> pts;
  pts.reserve(poses.size());
  for (const auto& p : poses) pts.push_back({p.x, p.y});
  return pts;
}

}  // namespace hcm::eval
