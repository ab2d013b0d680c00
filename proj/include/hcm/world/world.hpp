#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hcm/io/json.hpp"

namespace hcm::world {

/// Cell classes: 0 free, 1 wall, 2 + i for landmark class i.
inline constexpr std::uint8_t kFree = 0;
inline constexpr std::uint8_t kWall = 1;
inline constexpr std::uint8_t kFirstLandmark = 2;
inline constexpr std::size_t kDefaultLandmarkVocab = 8;

enum class SplitTag { Seen, Unseen };

std::string to_string(SplitTag tag);
SplitTag parse_split_tag(const std::string& s);

/// Seeds divisible by 10 are held out as unseen worlds.
SplitTag split_for_seed(std::uint64_t seed);

/// Display name of landmark class i ("red crate", ...).
const std::string& landmark_name(std::size_t landmark_class);
std::size_t landmark_name_count();

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class WorldFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned block of cells [x0, x1] × [y0, y1], inclusive.
struct CellRect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool contains(int x, int y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

struct Landmark {
  std::size_t landmark_class = 0;
  CellRect region;
  /// Unit normal pointing from the landmark into the room.
  int face_dx = 0, face_dy = 0;
};

/// Occupancy grid with semantic landmarks. Cell (x, y) covers
/// [x·cell_size, (x+1)·cell_size) × [y·cell_size, (y+1)·cell_size).
struct World {
  double cell_size = 0.1;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> grid;  // row-major, index y·width + x
  std::vector<Landmark> landmarks;
  std::uint64_t seed = 0;
  SplitTag split = SplitTag::Seen;
  std::size_t landmark_vocab = kDefaultLandmarkVocab;

  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  /// Out-of-grid cells read as wall.
  std::uint8_t at(int x, int y) const { return in_bounds(x, y) ? grid[static_cast<std::size_t>(y) * width + x] : kWall; }
  std::uint8_t& at_mut(int x, int y) { return grid[static_cast<std::size_t>(y) * width + x]; }
  bool free(int x, int y) const { return at(x, y) == kFree; }
  double width_m() const { return width * cell_size; }
  double height_m() const { return height * cell_size; }
  double diagonal_m() const;
  /// Number of semantic channels: vocabulary + free + wall.
  std::size_t channels() const { return landmark_vocab + 2; }
  int cell_of(double coord) const;
  double cell_center(int index) const { return (index + 0.5) * cell_size; }
  /// Centre of the point 0.7 m in front of the landmark's face.
  std::pair<double, double> landmark_goal(const Landmark& l, double standoff = 0.7) const;
  const Landmark* find_landmark(std::size_t landmark_class) const;
};

struct WorldOptions {
  double cell_size = 0.1;
  std::size_t landmark_vocab = kDefaultLandmarkVocab;
  int max_attempts = 64;
};

/// Rooms joined by doorways, landmarks against walls, a few free-standing
/// pillars. Deterministic in seed. Throws GenerationError when no attempt
/// satisfies the layout invariants.
World generate_world(std::uint64_t seed, double size_m, std::size_t landmark_count, const WorldOptions& options = {});

/// Number of 4-connected components of free cells.
std::size_t free_components(const World& w);
/// Empty string when every invariant holds, otherwise a description.
std::string validate_world(const World& w);

/// Success threshold d_a: 3 m on worlds at least 15 m across, else 20% of the
/// diagonal.
double success_threshold(const World& w);

io::Json world_to_json(const World& w);
World world_from_json(const io::Json& j);
void save_world(const World& w, const std::string& path);
World load_world(const std::string& path);

}  // namespace hcm::world
