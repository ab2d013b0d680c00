#include "hcm/oracle/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

#include "hcm/world/dynamics.hpp"

namespace hcm::oracle {

double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double polyline_length(const std::vector<Point2>& pts) {
  double total = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) total += distance(pts[i - 1], pts[i]);
  return total;
}

bool PlanningGrid::is_blocked(int x, int y) const {
  if (!world->in_bounds(x, y)) return true;
  return blocked[static_cast<std::size_t>(y) * world->width + x] != 0;
}

PlanningGrid inflate(const world::World& w, double radius) {
  PlanningGrid g;
  g.world = &w;
  g.radius = radius;
  g.blocked.assign(w.grid.size(), 0);
  const int reach = static_cast<int>(std::ceil(radius / w.cell_size)) + 1;
  for (int y = 0; y < w.height; ++y)
    for (int x = 0; x < w.width; ++x) {
      char& b = g.blocked[static_cast<std::size_t>(y) * w.width + x];
      if (!w.free(x, y)) {
        b = 1;
        continue;
      }
      const double cx = w.cell_center(x), cy = w.cell_center(y);
      for (int dy = -reach; dy <= reach && !b; ++dy)
        for (int dx = -reach; dx <= reach && !b; ++dx)
          if (!w.free(x + dx, y + dy) && world::distance_to_cell(w, cx, cy, x + dx, y + dy) < radius) b = 1;
    }
  return g;
}

double grid_path_cost(std::size_t straight, std::size_t diagonal, double cell_size) {
  return (static_cast<double>(straight) + static_cast<double>(diagonal) * std::numbers::sqrt2) * cell_size;
}

namespace {

struct Counts {
  std::size_t straight = 0;
  std::size_t diagonal = 0;
};

double octile(int dx, int dy) {
  const int ax = std::abs(dx), ay = std::abs(dy);
  return static_cast<double>(std::max(ax, ay) - std::min(ax, ay)) + std::numbers::sqrt2 * std::min(ax, ay);
}

}  // namespace

bool segment_clear(const PlanningGrid& grid, const Point2& a, const Point2& b) {
  // every cell the segment touches, both neighbours at exact corner crossings
  const auto& w = *grid.world;
  int x = w.cell_of(a.x), y = w.cell_of(a.y);
  const int ex = w.cell_of(b.x), ey = w.cell_of(b.y);
  if (grid.is_blocked(x, y)) return false;
  const double dx = b.x - a.x, dy = b.y - a.y;
  constexpr double inf = std::numeric_limits<double>::infinity();
  const int sx = dx > 0 ? 1 : -1, sy = dy > 0 ? 1 : -1;
  double tx = dx == 0.0 ? inf : ((x + (dx > 0 ? 1 : 0)) * w.cell_size - a.x) / dx;
  double ty = dy == 0.0 ? inf : ((y + (dy > 0 ? 1 : 0)) * w.cell_size - a.y) / dy;
  const double step_tx = dx == 0.0 ? inf : w.cell_size / std::abs(dx);
  const double step_ty = dy == 0.0 ? inf : w.cell_size / std::abs(dy);
  while (x != ex || y != ey) {
    const double t = std::min(tx, ty);
    if (t > 1.0) break;
    if (std::abs(tx - ty) < 1e-12) {
      if (grid.is_blocked(x + sx, y) || grid.is_blocked(x, y + sy)) return false;
      x += sx;
      y += sy;
      tx += step_tx;
      ty += step_ty;
    } else if (tx < ty) {
      x += sx;
      tx += step_tx;
    } else {
      y += sy;
      ty += step_ty;
    }
    if (grid.is_blocked(x, y)) return false;
  }
  return !grid.is_blocked(ex, ey);
}

bool segment_collision_free(const world::World& w, const Point2& a, const Point2& b, double robot_radius) {
  const double len = distance(a, b);
  const int samples = std::max(1, static_cast<int>(std::ceil(len / 0.02)));
  for (int i = 0; i <= samples; ++i) {
    const double t = static_cast<double>(i) / samples;
    if (world::check_collision(w, {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), 0.0}, robot_radius)) return false;
  }
  return true;
}

Plan astar_plan(const PlanningGrid& grid, const Point2& start, const Point2& goal, const PlannerOptions& options) {
  const auto& w = *grid.world;
  const int sx = w.cell_of(start.x), sy = w.cell_of(start.y);
  const int gx = w.cell_of(goal.x), gy = w.cell_of(goal.y);
  if (grid.is_blocked(sx, sy)) throw NoPathError("start cell is blocked");
  if (grid.is_blocked(gx, gy)) throw NoPathError("goal cell is blocked");

  const std::size_t n = w.grid.size();
  auto index = [&](int x, int y) { return static_cast<std::size_t>(y) * w.width + x; };
  std::vector<Counts> g(n);
  std::vector<double> g_cost(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(n, n);
  std::vector<char> closed(n, 0);
  struct Entry {
    double f, h;
    std::size_t idx;
    bool operator>(const Entry& o) const { return f != o.f ? f > o.f : h != o.h ? h > o.h : idx > o.idx; }
  };
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  const std::size_t s = index(sx, sy), t = index(gx, gy);
  g_cost[s] = 0.0;
  open.push({octile(gx - sx, gy - sy), octile(gx - sx, gy - sy), s});
  static constexpr int kMoves[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
  while (!open.empty()) {
    const Entry e = open.top();
    open.pop();
    if (closed[e.idx]) continue;
    closed[e.idx] = 1;
    if (e.idx == t) break;
    const int x = static_cast<int>(e.idx % w.width), y = static_cast<int>(e.idx / w.width);
    for (const auto& m : kMoves) {
      const int nx = x + m[0], ny = y + m[1];
      if (grid.is_blocked(nx, ny)) continue;
      const bool diagonal = m[0] != 0 && m[1] != 0;
      if (diagonal && (grid.is_blocked(x + m[0], y) || grid.is_blocked(x, y + m[1]))) continue;
      const std::size_t ni = index(nx, ny);
      if (closed[ni]) continue;
      Counts c = g[e.idx];
      (diagonal ? c.diagonal : c.straight) += 1;
      const double cost = grid_path_cost(c.straight, c.diagonal, 1.0);
      if (cost < g_cost[ni]) {
        g_cost[ni] = cost;
        g[ni] = c;
        parent[ni] = e.idx;
        const double h = octile(gx - nx, gy - ny);
        open.push({cost + h, h, ni});
      }
    }
  }
  if (!closed[t]) throw NoPathError("goal is unreachable from start");

  Plan plan;
  for (std::size_t i = t; i != n; i = parent[i])
    plan.cells.push_back({static_cast<int>(i % w.width), static_cast<int>(i / w.width)});
  std::reverse(plan.cells.begin(), plan.cells.end());
  plan.straight_moves = g[t].straight;
  plan.diagonal_moves = g[t].diagonal;
  plan.cost = grid_path_cost(plan.straight_moves, plan.diagonal_moves, w.cell_size);

  // corners of the grid path
  std::vector<Point2> corners{start, {w.cell_center(sx), w.cell_center(sy)}};
  for (std::size_t i = 1; i + 1 < plan.cells.size(); ++i) {
    const auto& a = plan.cells[i - 1];
    const auto& b = plan.cells[i];
    const auto& c = plan.cells[i + 1];
    if (b.first - a.first != c.first - b.first || b.second - a.second != c.second - b.second)
      corners.push_back({w.cell_center(b.first), w.cell_center(b.second)});
  }
  if (plan.cells.size() > 1) corners.push_back({w.cell_center(gx), w.cell_center(gy)});
  corners.push_back(goal);
  // drop zero-length hops
  std::vector<Point2> distinct{corners.front()};
  for (std::size_t i = 1; i < corners.size(); ++i)
    if (distance(corners[i], distinct.back()) > 1e-12 || i + 1 == corners.size()) distinct.push_back(corners[i]);
  corners = distinct;

  std::vector<Point2> sparse{corners.front()};
  if (options.shortcut) {
    std::size_t anchor = 0;
    while (anchor + 1 < corners.size()) {
      std::size_t next = anchor + 1;
      for (std::size_t j = corners.size() - 1; j > anchor + 1; --j)
        if (segment_clear(grid, corners[anchor], corners[j])) {
          next = j;
          break;
        }
      sparse.push_back(corners[next]);
      anchor = next;
    }
  } else {
    sparse.assign(corners.begin(), corners.end());
  }

  plan.waypoints.push_back(sparse.front());
  for (std::size_t i = 1; i < sparse.size(); ++i) {
    const Point2 a = sparse[i - 1], b = sparse[i];
    const int pieces = std::max(1, static_cast<int>(std::ceil(distance(a, b) / options.max_segment - 1e-12)));
    for (int k = 1; k < pieces; ++k) {
      const double f = static_cast<double>(k) / pieces;
      plan.waypoints.push_back({a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)});
    }
    plan.waypoints.push_back(b);
  }
  plan.length = polyline_length(plan.waypoints);
  return plan;
}

}  // namespace hcm::oracle
