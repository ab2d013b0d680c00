#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hcm/world/dynamics.hpp"

namespace hcm::world {

inline constexpr std::size_t kGridSide = 7;
inline constexpr std::size_t kGridCells = kGridSide * kGridSide;
inline constexpr double kFieldOfView = 1.5707963267948966;
inline constexpr double kMaxRange = 3.0;

/// rgb_like is [49 × C_r] and depth_like is [49 × 1], both row-major over the
/// 7×7 lattice. Lattice row r sits at range R·(r+1)/7; column c looks along
/// bearing +45° − 15°·c relative to the heading.
struct Observation {
  std::size_t channels = 0;
  std::vector<double> rgb_like;
  std::vector<double> depth_like;

  double rgb(std::size_t row, std::size_t col, std::size_t ch) const {
    return rgb_like[(row * kGridSide + col) * channels + ch];
  }
  double depth(std::size_t row, std::size_t col) const { return depth_like[row * kGridSide + col]; }
};

double lattice_bearing(std::size_t col);
double lattice_range(std::size_t row);

struct RayHit {
  double distance = 0.0;
  std::uint8_t cell_class = kFree;
  bool hit = false;  // false when nothing was met within max_range
};

/// Grid traversal from (x, y) along `angle` to the first non-free cell.
RayHit cast_ray(const World& w, double x, double y, double angle, double max_range);

Observation render_observation(const World& w, const Pose& p);

/// Text raster of the semantic lattice (nearest row at the bottom) and of the
/// depth lattice, for inspection.
std::string observation_to_text(const Observation& o);

}  // namespace hcm::world
