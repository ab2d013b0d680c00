#include "hcm/world/world.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>

#include "hcm/autodiff/rng.hpp"

namespace hcm::world {

namespace {

const std::array<std::string, 8> kLandmarkNames{"red crate",   "blue sofa",   "green plant", "white table",
                                                "black piano", "yellow lamp", "brown shelf", "grey cabinet"};

constexpr int kWallThickness = 2;

struct Layout {
  std::vector<int> wall_x;  // first cell of each interior vertical wall
  std::vector<int> wall_y;
};

// Bounds of the free span of room k along one axis.
std::pair<int, int> room_span(const std::vector<int>& walls, int k, int n) {
  const int lo = k == 0 ? kWallThickness : walls[k - 1] + kWallThickness;
  const int hi = k == static_cast<int>(walls.size()) ? n - kWallThickness - 1 : walls[k] - 1;
  return {lo, hi};
}

bool carve_rooms(World& w, SplitMix64& rng, double size_m) {
  const int n = w.width;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const bool border = x < kWallThickness || y < kWallThickness || x >= n - kWallThickness || y >= n - kWallThickness;
      w.at_mut(x, y) = border ? kWall : kFree;
    }
  const int base = std::max(1, static_cast<int>(std::lround(size_m / 5.0)));
  const int rooms_x = base + static_cast<int>(rng.below(2));
  const int rooms_y = base + static_cast<int>(rng.below(2));
  const int span = n - 2 * kWallThickness;
  const int jitter = std::max(1, static_cast<int>(0.5 / w.cell_size));
  Layout layout;
  auto place_walls = [&](int rooms, std::vector<int>& out) {
    for (int i = 1; i < rooms; ++i) {
      const int nominal = kWallThickness + span * i / rooms - kWallThickness / 2;
      out.push_back(nominal + static_cast<int>(rng.below(2 * jitter + 1)) - jitter);
    }
  };
  place_walls(rooms_x, layout.wall_x);
  place_walls(rooms_y, layout.wall_y);
  for (int wx : layout.wall_x)
    for (int y = 0; y < n; ++y)
      for (int t = 0; t < kWallThickness; ++t) w.at_mut(wx + t, y) = kWall;
  for (int wy : layout.wall_y)
    for (int x = 0; x < n; ++x)
      for (int t = 0; t < kWallThickness; ++t) w.at_mut(x, wy + t) = kWall;

  const int door_min = static_cast<int>(std::lround(1.0 / w.cell_size));
  const int door_max = static_cast<int>(std::lround(1.4 / w.cell_size));
  const int end_gap = static_cast<int>(std::lround(0.3 / w.cell_size));
  auto door_in = [&](int lo, int hi, int& start, int& width) {
    width = door_min + static_cast<int>(rng.below(static_cast<std::uint64_t>(door_max - door_min + 1)));
    const int room = hi - lo + 1 - 2 * end_gap - width;
    if (room < 0) return false;
    start = lo + end_gap + static_cast<int>(rng.below(static_cast<std::uint64_t>(room + 1)));
    return true;
  };
  for (int wx : layout.wall_x)
    for (int j = 0; j <= static_cast<int>(layout.wall_y.size()); ++j) {
      auto [lo, hi] = room_span(layout.wall_y, j, n);
      int start = 0, width = 0;
      if (!door_in(lo, hi, start, width)) return false;
      for (int y = start; y < start + width; ++y)
        for (int t = 0; t < kWallThickness; ++t) w.at_mut(wx + t, y) = kFree;
    }
  for (int wy : layout.wall_y)
    for (int i = 0; i <= static_cast<int>(layout.wall_x.size()); ++i) {
      auto [lo, hi] = room_span(layout.wall_x, i, n);
      int start = 0, width = 0;
      if (!door_in(lo, hi, start, width)) return false;
      for (int x = start; x < start + width; ++x)
        for (int t = 0; t < kWallThickness; ++t) w.at_mut(x, wy + t) = kFree;
    }
  return true;
}

bool region_is(const World& w, int x0, int y0, int x1, int y1, std::uint8_t cls) {
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (w.at(x, y) != cls) return false;
  return true;
}

void place_pillars(World& w, SplitMix64& rng) {
  const int count = static_cast<int>(rng.below(3));
  const int clearance = static_cast<int>(std::lround(0.8 / w.cell_size));
  for (int k = 0, tries = 0; k < count && tries < 200; ++tries) {
    const int side = 3 + static_cast<int>(rng.below(3));
    const int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(w.width - side)));
    const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(w.height - side)));
    if (!region_is(w, x - clearance, y - clearance, x + side - 1 + clearance, y + side - 1 + clearance, kFree))
      continue;
    for (int yy = y; yy < y + side; ++yy)
      for (int xx = x; xx < x + side; ++xx) w.at_mut(xx, yy) = kWall;
    ++k;
  }
}

bool place_landmark(World& w, SplitMix64& rng, std::size_t cls) {
  static constexpr std::array<std::array<int, 2>, 4> kFaces{{{0, 1}, {0, -1}, {1, 0}, {-1, 0}}};
  const int margin = static_cast<int>(std::lround(0.5 / w.cell_size));
  const int front = static_cast<int>(std::lround(1.0 / w.cell_size));
  const int spacing = static_cast<int>(std::lround(0.6 / w.cell_size));
  for (int tries = 0; tries < 2000; ++tries) {
    const auto face = kFaces[rng.below(4)];
    const int dx = face[0], dy = face[1];
    const int ux = dy != 0 ? 1 : 0, uy = dx != 0 ? 1 : 0;  // along the wall
    const int bx = static_cast<int>(rng.below(static_cast<std::uint64_t>(w.width)));
    const int by = static_cast<int>(rng.below(static_cast<std::uint64_t>(w.height)));
    const int along = static_cast<int>(std::lround(0.4 / w.cell_size)) + static_cast<int>(rng.below(5));
    const int depth = static_cast<int>(std::lround(0.3 / w.cell_size)) + static_cast<int>(rng.below(3));
    auto cell = [&](int s, int t) { return std::array<int, 2>{bx + s * ux + t * dx, by + s * uy + t * dy}; };
    bool ok = true;
    // wall directly behind, extended past both ends so doors stay clear
    for (int s = -margin; s < along + margin && ok; ++s) {
      auto c = cell(s, -1);
      ok = w.in_bounds(c[0], c[1]) && w.at(c[0], c[1]) == kWall;
    }
    // body plus open floor in front of it
    for (int s = -spacing; s < along + spacing && ok; ++s)
      for (int t = 0; t < depth + front && ok; ++t) {
        auto c = cell(s, t);
        const bool body_or_front = s >= 0 && s < along;
        const std::uint8_t v = w.at(c[0], c[1]);
        ok = body_or_front ? v == kFree : v == kFree || v == kWall;
      }
    if (!ok) continue;
    auto a = cell(0, 0), b = cell(along - 1, depth - 1);
    Landmark l;
    l.landmark_class = cls;
    l.region = {std::min(a[0], b[0]), std::min(a[1], b[1]), std::max(a[0], b[0]), std::max(a[1], b[1])};
    l.face_dx = dx;
    l.face_dy = dy;
    for (int y = l.region.y0; y <= l.region.y1; ++y)
      for (int x = l.region.x0; x <= l.region.x1; ++x) w.at_mut(x, y) = static_cast<std::uint8_t>(kFirstLandmark + cls);
    w.landmarks.push_back(l);
    return true;
  }
  return false;
}

}  // namespace

std::string to_string(SplitTag tag) { return tag == SplitTag::Seen ? "seen" : "unseen"; }

SplitTag parse_split_tag(const std::string& s) {
  if (s == "seen") return SplitTag::Seen;
  if (s == "unseen") return SplitTag::Unseen;
  throw WorldFormatError("unknown split tag '" + s + "'");
}

SplitTag split_for_seed(std::uint64_t seed) { return seed % 10 == 0 ? SplitTag::Unseen : SplitTag::Seen; }

const std::string& landmark_name(std::size_t landmark_class) { return kLandmarkNames.at(landmark_class); }
std::size_t landmark_name_count() { return kLandmarkNames.size(); }

double World::diagonal_m() const { return std::hypot(width_m(), height_m()); }

int World::cell_of(double coord) const { return static_cast<int>(std::floor(coord / cell_size)); }

std::pair<double, double> World::landmark_goal(const Landmark& l, double standoff) const {
  const double cx = (l.region.x0 + l.region.x1 + 1) * cell_size / 2.0;
  const double cy = (l.region.y0 + l.region.y1 + 1) * cell_size / 2.0;
  const double hx = (l.region.x1 - l.region.x0 + 1) * cell_size / 2.0;
  const double hy = (l.region.y1 - l.region.y0 + 1) * cell_size / 2.0;
  return {cx + l.face_dx * (hx + standoff), cy + l.face_dy * (hy + standoff)};
}

const Landmark* World::find_landmark(std::size_t landmark_class) const {
  for (const auto& l : landmarks)
    if (l.landmark_class == landmark_class) return &l;
  return nullptr;
}

World generate_world(std::uint64_t seed, double size_m, std::size_t landmark_count, const WorldOptions& options) {
  if (size_m < 5.0) throw GenerationError("world size must be at least 5 m, got " + std::to_string(size_m));
  if (landmark_count < 2) throw GenerationError("need at least 2 landmarks");
  if (options.landmark_vocab > kLandmarkNames.size() || landmark_count > options.landmark_vocab)
    throw GenerationError("landmark count exceeds the landmark vocabulary");
  SplitMix64 rng(mix_seed(seed, 0x5eed0f3a11ULL));
  const int n = static_cast<int>(std::lround(size_m / options.cell_size));
  for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
    World w;
    w.cell_size = options.cell_size;
    w.width = w.height = n;
    w.grid.assign(static_cast<std::size_t>(n) * n, kFree);
    w.seed = seed;
    w.split = split_for_seed(seed);
    w.landmark_vocab = options.landmark_vocab;
    if (!carve_rooms(w, rng, size_m)) continue;
    place_pillars(w, rng);
    std::vector<std::size_t> classes(options.landmark_vocab);
    for (std::size_t i = 0; i < classes.size(); ++i) classes[i] = i;
    for (std::size_t i = classes.size(); i > 1; --i) std::swap(classes[i - 1], classes[rng.below(i)]);
    bool placed = true;
    for (std::size_t i = 0; i < landmark_count && placed; ++i) placed = place_landmark(w, rng, classes[i]);
    if (!placed) continue;
    std::sort(w.landmarks.begin(), w.landmarks.end(),
              [](const Landmark& a, const Landmark& b) { return a.landmark_class < b.landmark_class; });
    if (validate_world(w).empty()) return w;
  }
  throw GenerationError("world generation failed for seed " + std::to_string(seed) + " after " +
                        std::to_string(options.max_attempts) + " attempts");
}

std::size_t free_components(const World& w) {
  std::vector<char> seen(w.grid.size(), 0);
  std::size_t components = 0;
  std::queue<std::pair<int, int>> q;
  for (int y = 0; y < w.height; ++y)
    for (int x = 0; x < w.width; ++x) {
      if (!w.free(x, y) || seen[static_cast<std::size_t>(y) * w.width + x]) continue;
      ++components;
      seen[static_cast<std::size_t>(y) * w.width + x] = 1;
      q.push({x, y});
      while (!q.empty()) {
        auto [cx, cy] = q.front();
        q.pop();
        const int nb[4][2] = {{cx + 1, cy}, {cx - 1, cy}, {cx, cy + 1}, {cx, cy - 1}};
        for (auto& c : nb) {
          if (!w.free(c[0], c[1])) continue;
          char& s = seen[static_cast<std::size_t>(c[1]) * w.width + c[0]];
          if (!s) {
            s = 1;
            q.push({c[0], c[1]});
          }
        }
      }
    }
  return components;
}

std::string validate_world(const World& w) {
  if (w.grid.size() != static_cast<std::size_t>(w.width) * w.height) return "grid size does not match dimensions";
  for (int x = 0; x < w.width; ++x)
    if (w.at(x, 0) != kWall || w.at(x, w.height - 1) != kWall) return "outer boundary is not wall";
  for (int y = 0; y < w.height; ++y)
    if (w.at(0, y) != kWall || w.at(w.width - 1, y) != kWall) return "outer boundary is not wall";
  for (std::uint8_t c : w.grid)
    if (c >= kFirstLandmark + w.landmark_vocab) return "cell class outside the vocabulary";
  for (const auto& l : w.landmarks) {
    const auto cls = static_cast<std::uint8_t>(kFirstLandmark + l.landmark_class);
    if (!region_is(w, l.region.x0, l.region.y0, l.region.x1, l.region.y1, cls))
      return "landmark region is not a solid block";
    bool touches_free = false;
    for (int y = l.region.y0 - 1; y <= l.region.y1 + 1 && !touches_free; ++y)
      for (int x = l.region.x0 - 1; x <= l.region.x1 + 1 && !touches_free; ++x) {
        const bool edge_neighbour = (x < l.region.x0 || x > l.region.x1) != (y < l.region.y0 || y > l.region.y1);
        touches_free = edge_neighbour && w.free(x, y);
      }
    if (!touches_free) return "landmark " + landmark_name(l.landmark_class) + " has no free neighbour";
  }
  if (free_components(w) != 1) return "free space is not a single connected component";
  return {};
}

double success_threshold(const World& w) {
  if (std::min(w.width_m(), w.height_m()) >= 15.0) return 3.0;
  return 0.2 * w.diagonal_m();
}

io::Json world_to_json(const World& w) {
  io::Json j;
  j["seed"] = w.seed;
  j["split"] = to_string(w.split);
  j["cell_size"] = w.cell_size;
  j["width"] = w.width;
  j["height"] = w.height;
  j["landmark_vocab"] = w.landmark_vocab;
  io::Json rows = io::Json::array();
  for (int y = 0; y < w.height; ++y) {
    std::string row(static_cast<std::size_t>(w.width), '.');
    for (int x = 0; x < w.width; ++x) {
      const std::uint8_t c = w.at(x, y);
      row[static_cast<std::size_t>(x)] = c == kFree ? '.' : c == kWall ? '#' : static_cast<char>('a' + (c - kFirstLandmark));
    }
    rows.push_back(row);
  }
  j["rows"] = rows;
  io::Json legend;
  legend["."] = "free";
  legend["#"] = "wall";
  for (std::size_t i = 0; i < w.landmark_vocab; ++i) legend[std::string(1, static_cast<char>('a' + i))] = landmark_name(i);
  j["legend"] = legend;
  io::Json marks = io::Json::array();
  for (const auto& l : w.landmarks)
    marks.push_back({{"class", l.landmark_class},
                     {"name", landmark_name(l.landmark_class)},
                     {"region", {l.region.x0, l.region.y0, l.region.x1, l.region.y1}},
                     {"face", {l.face_dx, l.face_dy}}});
  j["landmarks"] = marks;
  return j;
}

World world_from_json(const io::Json& j) {
  try {
    World w;
    w.seed = j.at("seed").get<std::uint64_t>();
    w.split = parse_split_tag(j.at("split").get<std::string>());
    w.cell_size = j.at("cell_size").get<double>();
    w.width = j.at("width").get<int>();
    w.height = j.at("height").get<int>();
    w.landmark_vocab = j.at("landmark_vocab").get<std::size_t>();
    const auto& rows = j.at("rows");
    if (rows.size() != static_cast<std::size_t>(w.height)) throw WorldFormatError("row count does not match height");
    w.grid.resize(static_cast<std::size_t>(w.width) * w.height);
    for (int y = 0; y < w.height; ++y) {
      const auto row = rows[static_cast<std::size_t>(y)].get<std::string>();
      if (row.size() != static_cast<std::size_t>(w.width)) throw WorldFormatError("row length does not match width");
      for (int x = 0; x < w.width; ++x) {
        const char ch = row[static_cast<std::size_t>(x)];
        std::uint8_t c = ch == '.' ? kFree : ch == '#' ? kWall : static_cast<std::uint8_t>(kFirstLandmark + (ch - 'a'));
        if (ch != '.' && ch != '#' && (ch < 'a' || static_cast<std::size_t>(ch - 'a') >= w.landmark_vocab))
          throw WorldFormatError(std::string("unknown cell character '") + ch + "'");
        w.at_mut(x, y) = c;
      }
    }
    for (const auto& m : j.at("landmarks")) {
      Landmark l;
      l.landmark_class = m.at("class").get<std::size_t>();
      const auto& r = m.at("region");
      l.region = {r[0].get<int>(), r[1].get<int>(), r[2].get<int>(), r[3].get<int>()};
      l.face_dx = m.at("face")[0].get<int>();
      l.face_dy = m.at("face")[1].get<int>();
      w.landmarks.push_back(l);
    }
    return w;
  } catch (const io::Json::exception& e) {
    throw WorldFormatError(std::string("malformed world record: ") + e.what());
  }
}

void save_world(const World& w, const std::string& path) { io::write_text(path, io::dump_exact(world_to_json(w)) + "\n"); }

World load_world(const std::string& path) { return world_from_json(io::read_json(path)); }

}  // namespace hcm::world
