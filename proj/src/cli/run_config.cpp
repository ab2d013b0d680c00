#include "hcm/cli/run_config.hpp"

#include <cstdlib>
#include <sstream>

namespace hcm::cli {

namespace {

io::Json to_tree(const RunConfig& c) {
  io::Json data = c.data.to_json();
  data.erase("seed");
  io::Json train = c.train.to_json();
  train.erase("seed");
  io::Json model = c.model.to_json();
  // tied to the dataset and kinematics
  for (const char* k : {"vocab_size", "channels", "v_max", "omega_max"}) model.erase(k);
  return {{"seed", c.seed},
          {"output", c.output},
          {"data", std::move(data)},
          {"model", std::move(model)},
          {"train", std::move(train)},
          {"eval", {{"max_steps", c.eval.max_steps}, {"limit", c.eval.limit}, {"dump_trajectories", c.eval.dump_trajectories}}},
          {"ablate", {{"seeds", c.ablate.seeds}, {"variants", c.ablate.variants}}}};
}

void from_tree(RunConfig& c, const io::Json& t) {
  c.seed = t.at("seed").get<std::uint64_t>();
  c.output = t.at("output").get<std::string>();
  io::Json data = t.at("data");
  data["seed"] = c.seed;
  c.data = oracle::DatasetConfig::from_json(data);
  io::Json train = t.at("train");
  train["seed"] = c.seed;
  c.train = policy::TrainConfig::from_json(train);
  io::Json model = t.at("model");
  model["vocab_size"] = c.model.vocab_size;
  model["channels"] = c.model.channels;
  model["v_max"] = c.data.rollout.kinematics.v_max;
  model["omega_max"] = c.data.rollout.kinematics.omega_max;
  c.model = policy::ModelConfig::from_json(model);
  c.eval.max_steps = t.at("eval").at("max_steps").get<std::size_t>();
  c.eval.limit = t.at("eval").at("limit").get<std::size_t>();
  c.eval.dump_trajectories = t.at("eval").at("dump_trajectories").get<bool>();
  c.ablate.seeds = t.at("ablate").at("seeds").get<std::size_t>();
  c.ablate.variants = t.at("ablate").at("variants").get<std::string>();
}

std::string scalar_text(const io::Json& v) {
  if (v.is_string()) return v.get<std::string>();
  return io::dump_exact(v);
}

void flatten(const io::Json& t, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  for (auto it = t.begin(); it != t.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object())
      flatten(*it, key, out);
    else
      out.emplace_back(key, scalar_text(*it));
  }
}

io::Json parse_like(const io::Json& current, const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    if (current.is_boolean()) {
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw std::invalid_argument("bool");
    }
    if (current.is_number_unsigned()) {
      if (!text.empty() && text[0] == '-') throw std::invalid_argument("negative");
      const unsigned long long v = std::stoull(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing");
      return v;
    }
    if (current.is_number_integer()) {
      const long long v = std::stoll(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing");
      return v;
    }
    if (current.is_number_float()) {
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing");
      return v;
    }
    return text;
  } catch (const std::exception&) {
    throw ConfigFieldError("invalid value '" + text + "' for config field '" + key + "'");
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::pair<std::string, std::string>> RunConfig::items() const {
  std::vector<std::pair<std::string, std::string>> out;
  flatten(to_tree(*this), "", out);
  return out;
}

std::string RunConfig::dump() const {
  std::string s;
  for (const auto& [k, v] : items()) s += k + " = " + v + "\n";
  return s;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  io::Json tree = to_tree(*this);
  io::Json* node = &tree;
  std::string rest = key;
  for (;;) {
    const auto dot = rest.find('.');
    const std::string head = rest.substr(0, dot);
    if (!node->is_object() || !node->contains(head)) throw ConfigFieldError("unknown config field '" + key + "'");
    node = &(*node)[head];
    if (dot == std::string::npos) break;
    rest = rest.substr(dot + 1);
  }
  if (node->is_object()) throw ConfigFieldError("config field '" + key + "' is a section, not a value");
  *node = parse_like(*node, key, value);
  try {
    from_tree(*this, tree);
  } catch (const std::exception& e) {
    throw ConfigFieldError("config field '" + key + "': " + e.what());
  }
}

void RunConfig::apply_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigFieldError("config line " + std::to_string(number) + " is not key = value: '" + line + "'");
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void RunConfig::apply_file(const std::filesystem::path& path) { apply_text(io::read_text(path)); }

std::uint64_t RunConfig::hash() const { return io::fnv1a(dump()); }

oracle::DatasetConfig RunConfig::dataset_config() const {
  oracle::DatasetConfig d = data;
  d.seed = seed;
  return d;
}

policy::TrainConfig RunConfig::train_config(std::uint64_t run_seed) const {
  policy::TrainConfig t = train;
  t.seed = run_seed;
  return t;
}

policy::ModelConfig RunConfig::model_config() const {
  policy::ModelConfig m = model;
  m.vocab_size = oracle::instruction_vocabulary().size();
  m.channels = data.landmark_vocab + 2;
  m.v_max = data.rollout.kinematics.v_max;
  m.omega_max = data.rollout.kinematics.omega_max;
  return m;
}

std::filesystem::path RunConfig::output_dir() const {
  std::filesystem::path p(output);
  if (p.is_relative())
    if (const char* root = std::getenv("HCM_OUTPUT_ROOT"); root && *root) return std::filesystem::path(root) / p;
  return p;
}

std::string code_version() { return "hcm 0.1.0"; }

}  // namespace hcm::cli
