#include "hcm/oracle/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "hcm/autodiff/rng.hpp"

namespace hcm::oracle {

using world::HighAction;
using world::Pose;
using world::World;

double Episode::progress(std::size_t t) const {
  if (waypoints.size() < 2 || waypoint_index.empty()) return 0.0;
  const std::size_t idx = waypoint_index[std::min(t, waypoint_index.size() - 1)];
  return std::clamp(static_cast<double>(idx) - 1.0, 0.0, static_cast<double>(waypoints.size() - 1)) /
         static_cast<double>(waypoints.size() - 1);
}

io::Json episode_to_json(const Episode& e) {
  io::Json j;
  j["id"] = e.id;
  j["split"] = e.split;
  j["world_ref"] = {{"seed", e.world_seed}, {"split_tag", world::to_string(e.world_split)}};
  j["instruction_text"] = e.instruction_text();
  j["instruction_tokens"] = e.instruction_tokens();
  io::Json paraphrases = io::Json::array();
  for (const auto& ins : e.instructions) paraphrases.push_back({{"text", ins.text}, {"tokens", ins.tokens}});
  j["instructions"] = paraphrases;
  j["goal_landmark"] = e.goal_landmark;
  j["start"] = {e.start.x, e.start.y, e.start.theta};
  j["goal"] = {e.goal.x, e.goal.y};
  io::Json wps = io::Json::array();
  for (const auto& p : e.waypoints) wps.push_back({p.x, p.y});
  j["waypoints"] = wps;
  io::Json high = io::Json::array();
  for (HighAction a : e.high_actions) high.push_back(static_cast<int>(a));
  j["high_actions"] = high;
  io::Json low = io::Json::array();
  for (const auto& a : e.low_actions) low.push_back({a.v, a.omega});
  j["low_actions"] = low;
  j["stop_labels"] = e.stop_labels;
  j["waypoint_index"] = e.waypoint_index;
  io::Json poses = io::Json::array();
  for (const auto& p : e.poses) poses.push_back({p.x, p.y, p.theta});
  j["poses"] = poses;
  j["geodesic_length"] = e.geodesic_length;
  return j;
}

Episode episode_from_json(const io::Json& j) {
  try {
    Episode e;
    e.id = j.at("id").get<std::string>();
    e.split = j.at("split").get<std::string>();
    e.world_seed = j.at("world_ref").at("seed").get<std::uint64_t>();
    e.world_split = world::parse_split_tag(j.at("world_ref").at("split_tag").get<std::string>());
    for (const auto& p : j.at("instructions"))
      e.instructions.push_back({p.at("text").get<std::string>(), p.at("tokens").get<std::vector<int>>()});
    if (e.instructions.empty())
      e.instructions.push_back({j.at("instruction_text").get<std::string>(), j.at("instruction_tokens").get<std::vector<int>>()});
    e.goal_landmark = j.at("goal_landmark").get<std::size_t>();
    const auto& s = j.at("start");
    e.start = {s[0].get<double>(), s[1].get<double>(), s[2].get<double>()};
    e.goal = {j.at("goal")[0].get<double>(), j.at("goal")[1].get<double>()};
    for (const auto& p : j.at("waypoints")) e.waypoints.push_back({p[0].get<double>(), p[1].get<double>()});
    for (const auto& a : j.at("high_actions")) {
      const int v = a.get<int>();
      if (v < 0 || v >= static_cast<int>(world::kHighActionCount)) throw DatasetError("high action label out of range");
      e.high_actions.push_back(static_cast<HighAction>(v));
    }
    for (const auto& a : j.at("low_actions")) e.low_actions.push_back({a[0].get<double>(), a[1].get<double>()});
    e.stop_labels = j.at("stop_labels").get<std::vector<int>>();
    e.waypoint_index = j.at("waypoint_index").get<std::vector<std::size_t>>();
    for (const auto& p : j.at("poses")) e.poses.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
    e.geodesic_length = j.at("geodesic_length").get<double>();
    return e;
  } catch (const io::Json::exception& ex) {
    throw DatasetError(std::string("malformed episode record: ") + ex.what());
  }
}

io::Json DatasetConfig::to_json() const {
  const auto& k = rollout.kinematics;
  io::Json j;
  j["seed"] = seed;
  j["world_size"] = world_size;
  j["cell_size"] = cell_size;
  j["landmark_count"] = landmark_count;
  j["landmark_vocab"] = landmark_vocab;
  j["world_seed_first"] = world_seed_first;
  j["world_seed_last"] = world_seed_last;
  j["train_episodes"] = train_episodes;
  j["val_seen_episodes"] = val_seen_episodes;
  j["val_unseen_episodes"] = val_unseen_episodes;
  j["min_geodesic"] = min_geodesic;
  j["max_geodesic"] = max_geodesic;
  j["max_oracle_steps"] = max_oracle_steps;
  j["inflation_margin"] = inflation_margin;
  j["retry_factor"] = retry_factor;
  j["k_rho"] = rollout.gains.k_rho;
  j["k_alpha"] = rollout.gains.k_alpha;
  j["advance_radius"] = rollout.advance_radius;
  j["heading_band"] = rollout.heading_band;
  j["hold_steps"] = rollout.hold_steps;
  j["step_budget"] = rollout.step_budget;
  j["v_max"] = k.v_max;
  j["omega_max"] = k.omega_max;
  j["dt"] = k.dt;
  j["robot_radius"] = k.robot_radius;
  j["omega_stop"] = k.omega_stop;
  j["v_stop"] = k.v_stop;
  j["n_stop"] = k.n_stop;
  return j;
}

DatasetConfig DatasetConfig::from_json(const io::Json& j) {
  DatasetConfig c;
  auto& k = c.rollout.kinematics;
  try {
    c.seed = j.at("seed").get<std::uint64_t>();
    c.world_size = j.at("world_size").get<double>();
    c.cell_size = j.at("cell_size").get<double>();
    c.landmark_count = j.at("landmark_count").get<std::size_t>();
    c.landmark_vocab = j.at("landmark_vocab").get<std::size_t>();
    c.world_seed_first = j.at("world_seed_first").get<std::uint64_t>();
    c.world_seed_last = j.at("world_seed_last").get<std::uint64_t>();
    c.train_episodes = j.at("train_episodes").get<std::size_t>();
    c.val_seen_episodes = j.at("val_seen_episodes").get<std::size_t>();
    c.val_unseen_episodes = j.at("val_unseen_episodes").get<std::size_t>();
    c.min_geodesic = j.at("min_geodesic").get<double>();
    c.max_geodesic = j.at("max_geodesic").get<double>();
    c.max_oracle_steps = j.at("max_oracle_steps").get<std::size_t>();
    c.inflation_margin = j.at("inflation_margin").get<double>();
    c.retry_factor = j.at("retry_factor").get<std::size_t>();
    c.rollout.gains.k_rho = j.at("k_rho").get<double>();
    c.rollout.gains.k_alpha = j.at("k_alpha").get<double>();
    c.rollout.advance_radius = j.at("advance_radius").get<double>();
    c.rollout.heading_band = j.at("heading_band").get<double>();
    c.rollout.hold_steps = j.at("hold_steps").get<std::size_t>();
    c.rollout.step_budget = j.at("step_budget").get<std::size_t>();
    k.v_max = j.at("v_max").get<double>();
    k.omega_max = j.at("omega_max").get<double>();
    k.dt = j.at("dt").get<double>();
    k.robot_radius = j.at("robot_radius").get<double>();
    k.omega_stop = j.at("omega_stop").get<double>();
    k.v_stop = j.at("v_stop").get<double>();
    k.n_stop = j.at("n_stop").get<std::size_t>();
  } catch (const io::Json::exception& e) {
    throw DatasetError(std::string("malformed dataset config: ") + e.what());
  }
  return c;
}

std::uint64_t DatasetConfig::hash() const { return io::fnv1a(io::dump_exact(to_json())); }

io::Json DatasetManifest::to_json() const {
  io::Json j;
  j["format"] = "hcm-dataset";
  j["version"] = 1;
  j["config_hash"] = io::hex64(config_hash);
  j["vocab_hash"] = io::hex64(vocab_hash);
  io::Json sp;
  for (const auto& name : kSplitNames) sp[name] = splits.count(name) ? splits.at(name) : std::vector<std::string>{};
  j["splits"] = sp;
  io::Json worlds;
  for (const auto& [tag, n] : split_world_seeds_count) worlds[tag] = n;
  j["world_counts"] = worlds;
  io::Json st;
  for (const auto& name : kSplitNames) {
    if (!stats.count(name)) continue;
    const auto& s = stats.at(name);
    st[name] = {{"episodes", s.episodes},
                {"candidates", s.candidates},
                {"planner_rejects", s.planner_rejects},
                {"filter_checked", s.filter_checked},
                {"filter_accepted", s.filter_accepted},
                {"long_rejects", s.long_rejects}};
  }
  j["stats"] = st;
  j["mean_steps"] = mean_steps;
  j["mean_geodesic"] = mean_geodesic;
  io::Json hist;
  std::size_t total = 0;
  for (auto c : action_histogram) total += c;
  for (std::size_t a = 0; a < world::kHighActionCount; ++a) hist[world::to_string(static_cast<HighAction>(a))] = action_histogram[a];
  j["action_histogram"] = hist;
  j["forward_fraction"] = total ? static_cast<double>(action_histogram[0]) / static_cast<double>(total) : 0.0;
  j["acceptance_rate"] = acceptance_rate;
  return j;
}

namespace {

std::uint64_t parse_hex(const std::string& s) { return std::stoull(s, nullptr, 16); }

}  // namespace

DatasetManifest DatasetManifest::from_json(const io::Json& j) {
  DatasetManifest m;
  try {
    if (j.at("format").get<std::string>() != "hcm-dataset") throw DatasetError("not a dataset manifest");
    m.config_hash = parse_hex(j.at("config_hash").get<std::string>());
    m.vocab_hash = parse_hex(j.at("vocab_hash").get<std::string>());
    for (auto it = j.at("splits").begin(); it != j.at("splits").end(); ++it)
      m.splits[it.key()] = it.value().get<std::vector<std::string>>();
    for (auto it = j.at("world_counts").begin(); it != j.at("world_counts").end(); ++it)
      m.split_world_seeds_count[it.key()] = it.value().get<std::uint64_t>();
    for (auto it = j.at("stats").begin(); it != j.at("stats").end(); ++it) {
      const auto& v = it.value();
      m.stats[it.key()] = {v.at("episodes").get<std::size_t>(),        v.at("candidates").get<std::size_t>(),
                           v.at("planner_rejects").get<std::size_t>(), v.at("filter_checked").get<std::size_t>(),
                           v.at("filter_accepted").get<std::size_t>(), v.at("long_rejects").get<std::size_t>()};
    }
    m.mean_steps = j.at("mean_steps").get<double>();
    m.mean_geodesic = j.at("mean_geodesic").get<double>();
    for (std::size_t a = 0; a < world::kHighActionCount; ++a)
      m.action_histogram[a] = j.at("action_histogram").at(world::to_string(static_cast<HighAction>(a))).get<std::size_t>();
    m.acceptance_rate = j.at("acceptance_rate").get<double>();
  } catch (const io::Json::exception& e) {
    throw DatasetError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

std::vector<const Episode*> Dataset::split(const std::string& name) const {
  std::vector<const Episode*> out;
  for (const auto& e : episodes)
    if (e.split == name) out.push_back(&e);
  return out;
}

const World& Dataset::world_for(const Episode& e) const {
  auto it = worlds.find(e.world_seed);
  if (it == worlds.end()) throw DatasetError("episode " + e.id + " references an unknown world");
  return it->second;
}

std::vector<std::uint64_t> world_seeds(const DatasetConfig& c, world::SplitTag tag) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t s = c.world_seed_first; s <= c.world_seed_last; ++s)
    if (world::split_for_seed(s) == tag) out.push_back(s);
  return out;
}

namespace {

World make_world(const DatasetConfig& c, std::uint64_t seed) {
  world::WorldOptions opts;
  opts.cell_size = c.cell_size;
  opts.landmark_vocab = c.landmark_vocab;
  return world::generate_world(seed, c.world_size, c.landmark_count, opts);
}

std::string episode_id(const std::string& split, std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", index);
  return split + "_" + buf;
}

}  // namespace

Dataset generate_dataset(const DatasetConfig& config) {
  Dataset d;
  d.config = config;
  const auto& vocab = instruction_vocabulary();
  for (std::uint64_t s = config.world_seed_first; s <= config.world_seed_last; ++s) d.worlds.emplace(s, make_world(config, s));
  std::map<std::uint64_t, PlanningGrid> grids;
  for (const auto& [s, w] : d.worlds) grids.emplace(s, inflate(w, config.inflation_radius()));

  const std::array<std::size_t, 3> targets{config.train_episodes, config.val_seen_episodes, config.val_unseen_episodes};
  std::size_t checked_total = 0, accepted_total = 0;
  for (std::size_t split = 0; split < kSplitNames.size(); ++split) {
    const std::string& name = kSplitNames[split];
    const auto tag = split == 2 ? world::SplitTag::Unseen : world::SplitTag::Seen;
    const auto seeds = world_seeds(config, tag);
    d.manifest.split_world_seeds_count[world::to_string(tag)] = seeds.size();
    if (seeds.empty() && targets[split] > 0)
      throw GenerationShortfall("split " + name + " has no " + world::to_string(tag) + " worlds in the seed range");
    SplitStats stats;
    std::vector<std::string> ids;
    const std::size_t budget = std::max<std::size_t>(1, targets[split] * config.retry_factor);
    while (ids.size() < targets[split]) {
      if (stats.candidates >= budget)
        throw GenerationShortfall("split " + name + " filled " + std::to_string(ids.size()) + " of " +
                                  std::to_string(targets[split]) + " episodes after " + std::to_string(budget) +
                                  " candidates; deficit " + std::to_string(targets[split] - ids.size()));
      const std::uint64_t candidate_seed = mix_seed(config.seed, (static_cast<std::uint64_t>(split) << 32) + stats.candidates);
      SplitMix64 rng(candidate_seed);
      const std::uint64_t wseed = seeds[stats.candidates % seeds.size()];
      ++stats.candidates;
      const World& w = d.worlds.at(wseed);
      const PlanningGrid& grid = grids.at(wseed);
      const auto& landmark = w.landmarks[rng.below(w.landmarks.size())];
      const auto [gx, gy] = w.landmark_goal(landmark);
      Pose start;
      bool found = false;
      for (int tries = 0; tries < 200 && !found; ++tries) {
        start = {rng.uniform(0, w.width_m()), rng.uniform(0, w.height_m()), rng.uniform(-std::numbers::pi, std::numbers::pi)};
        start.theta = world::normalize_angle(start.theta);
        found = !grid.is_blocked(w.cell_of(start.x), w.cell_of(start.y));
      }
      Plan plan;
      try {
        if (!found) throw NoPathError("no free start");
        plan = astar_plan(grid, {start.x, start.y}, {gx, gy});
      } catch (const NoPathError&) {
        ++stats.planner_rejects;
        continue;
      }
      if (plan.length < config.min_geodesic || plan.length > config.max_geodesic) {
        ++stats.planner_rejects;
        continue;
      }
      ++stats.filter_checked;
      if (!filter_navigable(w, start, plan.waypoints, config.rollout)) continue;
      ++stats.filter_accepted;
      const Demonstration demo = rollout_oracle(w, start, plan.waypoints, config.rollout);
      if (demo.steps() > config.max_oracle_steps) {
        ++stats.long_rejects;
        continue;
      }
      Episode e;
      e.id = episode_id(name, ids.size());
      e.split = name;
      e.world_seed = wseed;
      e.world_split = w.split;
      e.goal_landmark = landmark.landmark_class;
      for (std::size_t p = 0; p < kParaphrases; ++p)
        e.instructions.push_back(generate_instruction(w, plan.waypoints, start.theta, landmark.landmark_class, candidate_seed, p));
      e.start = start;
      e.goal = {gx, gy};
      e.waypoints = plan.waypoints;
      e.high_actions = demo.high_actions;
      e.low_actions = demo.low_actions;
      e.stop_labels = demo.stop_labels;
      e.waypoint_index = demo.waypoint_index;
      e.poses = demo.poses;
      e.geodesic_length = plan.length;
      ids.push_back(e.id);
      d.episodes.push_back(std::move(e));
    }
    stats.episodes = ids.size();
    checked_total += stats.filter_checked;
    accepted_total += stats.filter_accepted;
    d.manifest.splits[name] = ids;
    d.manifest.stats[name] = stats;
  }
  double steps = 0.0, geo = 0.0;
  for (const auto& e : d.episodes) {
    steps += static_cast<double>(e.steps());
    geo += e.geodesic_length;
    for (HighAction a : e.high_actions) ++d.manifest.action_histogram[static_cast<std::size_t>(a)];
  }
  if (!d.episodes.empty()) {
    d.manifest.mean_steps = steps / static_cast<double>(d.episodes.size());
    d.manifest.mean_geodesic = geo / static_cast<double>(d.episodes.size());
  }
  d.manifest.acceptance_rate = checked_total ? static_cast<double>(accepted_total) / static_cast<double>(checked_total) : 0.0;
  d.manifest.config_hash = config.hash();
  d.manifest.vocab_hash = vocab.hash();
  // keep only worlds that episodes use
  std::map<std::uint64_t, World> used;
  for (const auto& e : d.episodes) used.emplace(e.world_seed, d.worlds.at(e.world_seed));
  d.worlds = std::move(used);
  return d;
}

void write_dataset(const Dataset& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "worlds");
  std::string lines;
  for (const auto& e : d.episodes) lines += io::dump_exact(episode_to_json(e)) + "\n";
  io::write_text(dir / "episodes.jsonl", lines);
  io::write_text(dir / "manifest.json", io::dump_exact_pretty(d.manifest.to_json()) + "\n");
  io::write_text(dir / "vocab.json", io::dump_exact_pretty(instruction_vocabulary().to_json()) + "\n");
  io::write_text(dir / "config.json", io::dump_exact_pretty(d.config.to_json()) + "\n");
  for (const auto& [seed, w] : d.worlds) world::save_world(w, (dir / "worlds" / ("world_" + std::to_string(seed) + ".json")).string());
}

DatasetManifest emit_dataset(const DatasetConfig& config, const std::filesystem::path& dir) {
  Dataset d = generate_dataset(config);
  write_dataset(d, dir);
  return d.manifest;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  for (const char* f : {"episodes.jsonl", "manifest.json", "vocab.json", "config.json"})
    if (!std::filesystem::exists(dir / f)) throw DatasetError("dataset file missing: " + (dir / f).string());
  Dataset d;
  d.config = DatasetConfig::from_json(io::read_json(dir / "config.json"));
  d.manifest = DatasetManifest::from_json(io::read_json(dir / "manifest.json"));
  const Vocabulary stored = Vocabulary::from_json(io::read_json(dir / "vocab.json"));
  if (stored.hash() != instruction_vocabulary().hash())
    throw DatasetError("dataset vocabulary does not match the instruction vocabulary of this build");
  std::ifstream in(dir / "episodes.jsonl");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    d.episodes.push_back(episode_from_json(io::Json::parse(line)));
  }
  for (const auto& e : d.episodes) {
    if (d.worlds.count(e.world_seed)) continue;
    World w = make_world(d.config, e.world_seed);
    const auto path = dir / "worlds" / ("world_" + std::to_string(e.world_seed) + ".json");
    if (std::filesystem::exists(path) && io::dump_exact(world::world_to_json(w)) != io::dump_exact(io::read_json(path)))
      throw DatasetError("world " + std::to_string(e.world_seed) + " does not match its regenerated layout");
    d.worlds.emplace(e.world_seed, std::move(w));
  }
  return d;
}

std::vector<std::string> validate_episode(const World& w, const Episode& e, const DatasetConfig& c) {
  std::vector<std::string> errors;
  auto fail = [&](const std::string& msg) { errors.push_back(e.id + ": " + msg); };
  const auto& k = c.rollout.kinematics;
  const std::size_t n = e.steps();
  if (e.high_actions.size() != n || e.stop_labels.size() != n || e.waypoint_index.size() != n)
    fail("per-step label lengths differ");
  if (e.poses.size() != n + 1) fail("pose trace length is not steps + 1");
  if (e.waypoints.size() < 2) fail("fewer than two waypoints");
  for (std::size_t i = 1; i < e.waypoints.size(); ++i) {
    if (distance(e.waypoints[i - 1], e.waypoints[i]) > 1.0 + 1e-9) fail("waypoints " + std::to_string(i) + " more than 1 m apart");
    if (!segment_collision_free(w, e.waypoints[i - 1], e.waypoints[i], k.robot_radius))
      fail("waypoint segment " + std::to_string(i) + " is not collision-free");
  }
  if ((e.split == "val_unseen") != (e.world_split == world::SplitTag::Unseen) || w.split != e.world_split)
    fail("split does not match the world split tag");
  // open-loop replay of the stored commands
  Pose p = e.start;
  std::size_t collisions = 0;
  double worst = 0.0;
  for (std::size_t t = 0; t < n && e.poses.size() == n + 1; ++t) {
    const Pose next = world::step_dynamics(p, e.low_actions[t], k.dt);
    if (world::check_collision(w, next, k.robot_radius))
      ++collisions;
    else
      p = next;
    worst = std::max({worst, std::abs(p.x - e.poses[t + 1].x), std::abs(p.y - e.poses[t + 1].y),
                      std::abs(world::normalize_angle(p.theta - e.poses[t + 1].theta))});
  }
  if (collisions) fail("replay collides " + std::to_string(collisions) + " times");
  if (worst > 1e-9) fail("replay deviates from the stored poses by " + std::to_string(worst));
  if (world::distance_to_goal(p, e.goal) >= world::success_threshold(w)) fail("replay ends outside the success threshold");
  if (!world::kinematic_stop(e.low_actions, k)) fail("replay does not end in a kinematic stop");
  if (!filter_navigable(w, e.start, e.waypoints, c.rollout)) fail("navigability filter rejects the episode");
  const auto& vocab = instruction_vocabulary();
  for (const auto& ins : e.instructions) {
    if (ins.tokens.size() > kMaxInstructionTokens) fail("instruction longer than 24 tokens");
    for (int t : ins.tokens)
      if (t <= kPadToken || static_cast<std::size_t>(t) >= vocab.size()) fail("token id outside the vocabulary");
    try {
      if (vocab.encode(ins.text) != ins.tokens) fail("instruction tokens do not match the text");
    } catch (const VocabularyError& ex) {
      fail(ex.what());
    }
  }
  return errors;
}

}  // namespace hcm::oracle
