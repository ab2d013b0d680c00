#include "hcm/oracle/instruction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#include "hcm/autodiff/rng.hpp"

namespace hcm::oracle {

namespace {

using Pool = std::vector<std::string>;

const Pool kForward{"go forward", "walk straight", "move ahead", "continue forward"};
const Pool kLeft{"turn left", "go left", "make a left"};
const Pool kRight{"turn right", "go right", "make a right"};
const Pool kAround{"turn around", "face the other way"};
const Pool kAt{"at the", "near the", "by the"};
const Pool kJoin{"then", "and then", "after that"};
const Pool kStop{"stop near the", "wait by the", "stop at the"};

constexpr double kMergeAngle = std::numbers::pi / 6.0;      // 30 degrees
constexpr double kAroundAngle = 5.0 * std::numbers::pi / 6.0;
constexpr double kInitialTurn = std::numbers::pi / 4.0;
constexpr double kReferenceRange = 1.5;

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

enum class Move { Forward, Left, Right, Around };

struct Clause {
  Move move;
  std::optional<std::size_t> landmark;
  bool initial = false;
};

double distance_to_landmark(const world::World& w, const world::Landmark& l, const Point2& p) {
  double best = std::numeric_limits<double>::infinity();
  for (int y = l.region.y0; y <= l.region.y1; ++y)
    for (int x = l.region.x0; x <= l.region.x1; ++x) best = std::min(best, world::distance_to_cell(w, p.x, p.y, x, y));
  return best;
}

std::optional<std::size_t> nearest_landmark(const world::World& w, const Point2& p) {
  std::optional<std::size_t> best;
  double best_d = kReferenceRange;
  for (const auto& l : w.landmarks) {
    const double d = distance_to_landmark(w, l, p);
    if (d < best_d) {
      best_d = d;
      best = l.landmark_class;
    }
  }
  return best;
}

Move turn_move(double delta) {
  if (std::abs(delta) >= kAroundAngle) return Move::Around;
  return delta > 0 ? Move::Left : Move::Right;
}

std::vector<Clause> describe_path(const world::World& w, const std::vector<Point2>& waypoints, double start_heading) {
  std::vector<double> headings;
  std::vector<Point2> starts;
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    const double dx = waypoints[i].x - waypoints[i - 1].x, dy = waypoints[i].y - waypoints[i - 1].y;
    if (std::hypot(dx, dy) < 1e-9) continue;
    headings.push_back(std::atan2(dy, dx));
    starts.push_back(waypoints[i - 1]);
  }
  std::vector<Clause> clauses;
  if (headings.empty()) return clauses;
  const double initial = world::normalize_angle(headings.front() - start_heading);
  if (std::abs(initial) > kInitialTurn) clauses.push_back({turn_move(initial), std::nullopt, true});
  clauses.push_back({Move::Forward, std::nullopt});
  for (std::size_t i = 1; i < headings.size(); ++i) {
    const double delta = world::normalize_angle(headings[i] - headings[i - 1]);
    if (std::abs(delta) < kMergeAngle) continue;
    clauses.push_back({turn_move(delta), nearest_landmark(w, starts[i])});
    clauses.push_back({Move::Forward, std::nullopt});
  }
  return clauses;
}

struct Phrasing {
  SplitMix64 rng;
  bool canonical;
  const std::string& pick(const Pool& pool) { return canonical ? pool.front() : pool[rng.below(pool.size())]; }
};

std::string render(const std::vector<Clause>& clauses, std::size_t goal_landmark, Phrasing phrasing) {
  std::string text;
  bool first = true;
  for (const auto& c : clauses) {
    if (!first) text += " " + phrasing.pick(kJoin) + " ";
    first = false;
    switch (c.move) {
      case Move::Forward: text += phrasing.pick(kForward); break;
      case Move::Left: text += phrasing.pick(kLeft); break;
      case Move::Right: text += phrasing.pick(kRight); break;
      case Move::Around: text += phrasing.pick(kAround); break;
    }
    if (c.landmark) text += " " + phrasing.pick(kAt) + " " + world::landmark_name(*c.landmark);
  }
  if (!first) text += " and ";
  text += phrasing.pick(kStop) + " " + world::landmark_name(goal_landmark);
  return text;
}

// Progressively coarser descriptions, most detailed first.
std::vector<std::vector<Clause>> simplifications(std::vector<Clause> clauses) {
  std::vector<std::vector<Clause>> out{clauses};
  for (auto& c : clauses) c.landmark.reset();
  out.push_back(clauses);
  std::vector<Clause> turns_only;
  for (std::size_t i = 0; i < clauses.size(); ++i)
    if (clauses[i].move != Move::Forward || i == 0 || (i == 1 && clauses[0].initial)) turns_only.push_back(clauses[i]);
  out.push_back(turns_only);
  std::vector<Clause> minimal;
  for (const auto& c : turns_only)
    if (!c.initial) minimal.push_back(c);
  while (minimal.size() > 3) minimal.erase(minimal.begin() + 1);
  out.push_back(minimal);
  out.push_back({});
  return out;
}

Vocabulary build_vocabulary() {
  std::set<std::string> words{"and"};
  for (const Pool* pool : {&kForward, &kLeft, &kRight, &kAround, &kAt, &kJoin, &kStop})
    for (const auto& phrase : *pool)
      for (auto& w : split_words(phrase)) words.insert(w);
  for (std::size_t i = 0; i < world::landmark_name_count(); ++i)
    for (auto& w : split_words(world::landmark_name(i))) words.insert(w);
  std::vector<std::string> table{"<pad>"};
  table.insert(table.end(), words.begin(), words.end());
  return Vocabulary(table);
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
  if (words_.empty() || words_[0] != "<pad>") throw VocabularyError("vocabulary must start with <pad>");
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!ids_.emplace(words_[i], static_cast<int>(i)).second) throw VocabularyError("duplicate token '" + words_[i] + "'");
  }
}

int Vocabulary::id(const std::string& word) const {
  auto it = ids_.find(word);
  if (it == ids_.end()) throw VocabularyError("token '" + word + "' is not in the vocabulary");
  return it->second;
}

const std::string& Vocabulary::word(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= words_.size())
    throw VocabularyError("token id " + std::to_string(id) + " is outside the vocabulary");
  return words_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(const std::string& text) const {
  std::vector<int> out;
  for (const auto& w : split_words(text)) out.push_back(id(w));
  return out;
}

std::string Vocabulary::decode(const std::vector<int>& tokens) const {
  std::string out;
  for (int t : tokens) {
    if (t == kPadToken) continue;
    if (!out.empty()) out += ' ';
    out += word(t);
  }
  return out;
}

io::Json Vocabulary::to_json() const {
  io::Json j = io::Json::object();
  for (std::size_t i = 0; i < words_.size(); ++i) j[words_[i]] = i;
  return j;
}

Vocabulary Vocabulary::from_json(const io::Json& j) {
  std::vector<std::string> words(j.size());
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto id = it.value().get<std::size_t>();
    if (id >= words.size()) throw VocabularyError("token ids are not contiguous");
    words[id] = it.key();
  }
  return Vocabulary(words);
}

std::uint64_t Vocabulary::hash() const { return io::fnv1a(io::dump_exact(to_json())); }

const Vocabulary& instruction_vocabulary() {
  static const Vocabulary vocab = build_vocabulary();
  return vocab;
}

Instruction generate_instruction(const world::World& w, const std::vector<Point2>& waypoints, double start_heading,
                                 std::size_t goal_landmark, std::uint64_t seed, std::size_t paraphrase) {
  if (waypoints.size() < 2) throw std::invalid_argument("an instruction needs at least two waypoints");
  const auto& vocab = instruction_vocabulary();
  const auto variants = simplifications(describe_path(w, waypoints, start_heading));
  Instruction out;
  for (const auto& clauses : variants) {
    out.text = render(clauses, goal_landmark, {SplitMix64(mix_seed(seed, paraphrase)), paraphrase == 0});
    out.tokens = vocab.encode(out.text);
    if (out.tokens.size() <= kMaxInstructionTokens) return out;
  }
  return out;
}

}  // namespace hcm::oracle
