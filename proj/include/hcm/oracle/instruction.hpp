#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "hcm/io/json.hpp"
#include "hcm/oracle/planner.hpp"
#include "hcm/world/dynamics.hpp"

namespace hcm::oracle {

inline constexpr int kPadToken = 0;
inline constexpr std::size_t kMaxInstructionTokens = 24;
inline constexpr std::size_t kParaphrases = 3;

class VocabularyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Token table with "<pad>" at id 0 followed by the template words in sorted
/// order.
class Vocabulary {
 public:
  explicit Vocabulary(std::vector<std::string> words);

  std::size_t size() const { return words_.size(); }
  int id(const std::string& word) const;
  const std::string& word(int id) const;
  bool contains(const std::string& word) const { return ids_.count(word) != 0; }
  std::vector<int> encode(const std::string& text) const;
  std::string decode(const std::vector<int>& tokens) const;
  io::Json to_json() const;
  static Vocabulary from_json(const io::Json& j);
  std::uint64_t hash() const;

 private:
  std::vector<std::string> words_;
  std::map<std::string, int> ids_;
};

/// The fixed table covering every word the templates can emit.
const Vocabulary& instruction_vocabulary();

struct Instruction {
  std::string text;
  std::vector<int> tokens;
};

/// Describes the path as motion and turn clauses with nearby landmark
/// references, ending at the goal landmark. Paraphrase 0 uses the first
/// synonym of every pool; others draw synonyms from `seed`. At most 24 tokens.
Instruction generate_instruction(const world::World& w, const std::vector<Point2>& waypoints, double start_heading,
                                 std::size_t goal_landmark, std::uint64_t seed, std::size_t paraphrase = 0);

}  // namespace hcm::oracle
