#include "hcm/world/observation.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace hcm::world {

double lattice_bearing(std::size_t col) {
  return kFieldOfView / 2.0 - static_cast<double>(col) * kFieldOfView / static_cast<double>(kGridSide - 1);
}

double lattice_range(std::size_t row) { return kMaxRange * static_cast<double>(row + 1) / static_cast<double>(kGridSide); }

RayHit cast_ray(const World& w, double x, double y, double angle, double max_range) {
  int cx = w.cell_of(x), cy = w.cell_of(y);
  if (!w.free(cx, cy)) return {0.0, w.at(cx, cy), true};
  const double dx = std::cos(angle), dy = std::sin(angle);
  constexpr double inf = std::numeric_limits<double>::infinity();
  const int step_x = dx > 0 ? 1 : -1, step_y = dy > 0 ? 1 : -1;
  double next_x = dx == 0.0 ? inf : ((cx + (dx > 0 ? 1 : 0)) * w.cell_size - x) / dx;
  double next_y = dy == 0.0 ? inf : ((cy + (dy > 0 ? 1 : 0)) * w.cell_size - y) / dy;
  const double delta_x = dx == 0.0 ? inf : w.cell_size / std::abs(dx);
  const double delta_y = dy == 0.0 ? inf : w.cell_size / std::abs(dy);
  while (true) {
    double t;
    if (next_x < next_y) {
      t = next_x;
      cx += step_x;
      next_x += delta_x;
    } else {
      t = next_y;
      cy += step_y;
      next_y += delta_y;
    }
    if (t > max_range) return {max_range, kFree, false};
    if (!w.free(cx, cy)) return {t, w.at(cx, cy), true};
  }
}

Observation render_observation(const World& w, const Pose& p) {
  Observation o;
  o.channels = w.channels();
  o.rgb_like.assign(kGridCells * o.channels, 0.0);
  o.depth_like.assign(kGridCells, 1.0);
  for (std::size_t col = 0; col < kGridSide; ++col) {
    const RayHit hit = cast_ray(w, p.x, p.y, p.theta + lattice_bearing(col), kMaxRange);
    const double depth = hit.hit ? std::min(hit.distance, kMaxRange) / kMaxRange : 1.0;
    for (std::size_t row = 0; row < kGridSide; ++row) {
      const std::size_t cell = row * kGridSide + col;
      o.depth_like[cell] = depth;
      // cells beyond the first obstacle are occluded and show the obstacle
      const std::uint8_t cls = hit.hit && lattice_range(row) >= hit.distance ? hit.cell_class : kFree;
      o.rgb_like[cell * o.channels + cls] = 1.0;
    }
  }
  return o;
}

std::string observation_to_text(const Observation& o) {
  std::ostringstream out;
  out << "semantic (far row first)    depth x10\n";
  for (std::size_t r = kGridSide; r-- > 0;) {
    for (std::size_t c = 0; c < kGridSide; ++c) {
      std::size_t cls = 0;
      for (std::size_t ch = 0; ch < o.channels; ++ch)
        if (o.rgb(r, c, ch) > 0.5) cls = ch;
      out << (cls == kFree ? '.' : cls == kWall ? '#' : static_cast<char>('a' + (cls - kFirstLandmark)));
    }
    out << "                     ";
    for (std::size_t c = 0; c < kGridSide; ++c) {
      const int d = static_cast<int>(std::lround(o.depth(r, c) * 9.0));
      out << d;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace hcm::world
