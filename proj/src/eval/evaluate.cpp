#include "hcm/eval/evaluate.hpp"

#include <cstdio>
#include <numeric>

namespace hcm::eval {

namespace {

const char* termination_name(world::Termination t) {
  switch (t) {
    case world::Termination::ExplicitStop: return "explicit_stop";
    case world::Termination::KinematicStop: return "kinematic_stop";
    case world::Termination::MaxSteps: return "max_steps";
  }
  return "max_steps";
}

world::Termination parse_termination(const std::string& s) {
  if (s == "explicit_stop") return world::Termination::ExplicitStop;
  if (s == "kinematic_stop") return world::Termination::KinematicStop;
  return world::Termination::MaxSteps;
}

}  // namespace

io::Json MetricsReport::to_json() const {
  io::Json eps = io::Json::array();
  for (const auto& e : per_episode) {
    io::Json j = {{"id", e.id},
                  {"success", e.success},
                  {"nav_error", e.nav_error},
                  {"spl", e.spl},
                  {"ndtw", e.ndtw},
                  {"trajectory_length", e.trajectory_length},
                  {"geodesic_length", e.geodesic_length},
                  {"steps", e.steps},
                  {"collisions", e.collisions},
                  {"termination", termination_name(e.termination)}};
    if (!e.poses.empty()) {
      io::Json poses = io::Json::array();
      for (const auto& p : e.poses) poses.push_back({p.x, p.y, p.theta});
      j["poses"] = std::move(poses);
    }
    eps.push_back(std::move(j));
  }
  return {{"policy", policy}, {"split", split}, {"episodes", episodes}, {"sr", sr}, {"spl", spl},
          {"ndtw", ndtw},     {"tl", tl},       {"ne", ne},             {"per_episode", std::move(eps)}};
}

MetricsReport MetricsReport::from_json(const io::Json& j) {
  MetricsReport r;
  r.policy = j.at("policy").get<std::string>();
  r.split = j.at("split").get<std::string>();
  r.episodes = j.at("episodes").get<std::size_t>();
  r.sr = j.at("sr").get<double>();
  r.spl = j.at("spl").get<double>();
  r.ndtw = j.at("ndtw").get<double>();
  r.tl = j.at("tl").get<double>();
  r.ne = j.at("ne").get<double>();
  for (const auto& e : j.at("per_episode")) {
    EpisodeResult x;
    x.id = e.at("id").get<std::string>();
    x.success = e.at("success").get<bool>();
    x.nav_error = e.at("nav_error").get<double>();
    x.spl = e.at("spl").get<double>();
    x.ndtw = e.at("ndtw").get<double>();
    x.trajectory_length = e.at("trajectory_length").get<double>();
    x.geodesic_length = e.at("geodesic_length").get<double>();
    x.steps = e.at("steps").get<std::size_t>();
    x.collisions = e.at("collisions").get<std::size_t>();
    x.termination = parse_termination(e.at("termination").get<std::string>());
    if (e.contains("poses"))
      for (const auto& p : e.at("poses")) x.poses.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
    r.per_episode.push_back(std::move(x));
  }
  return r;
}

std::string table_header() {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-20s %6s %6s %6s %7s %7s", "", "SR", "SPL", "NDTW", "TL", "NE");
  return buf;
}

std::string table_row(const std::string& label, const MetricsReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-20s %6.3f %6.3f %6.3f %7.2f %7.2f", label.c_str(), r.sr, r.spl, r.ndtw, r.tl,
                r.ne);
  return buf;
}

std::string MetricsReport::to_table() const {
  return table_header() + "\n" + table_row(policy + " " + split, *this) + "\n";
}

MetricsReport evaluate(const oracle::Dataset& data, const std::string& split, DatasetPolicy& policy,
                       const EvalOptions& options) {
  bool known = false;
  for (const auto& s : oracle::kSplitNames) known = known || s == split;
  if (!known) throw oracle::DatasetError("unknown split '" + split + "'");
  auto episodes = data.split(split);
  if (options.limit != 0 && episodes.size() > options.limit) episodes.resize(options.limit);

  const world::Kinematics& k = data.config.rollout.kinematics;
  MetricsReport report;
  report.split = split;
  std::vector<SplTerm> spl_terms;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const oracle::Episode& e = *episodes[i];
    const world::World& w = data.world_for(e);
    const double d_a = world::success_threshold(w);
    policy.prepare(e);
    const auto& tokens = e.instructions.at(std::min(options.paraphrase, e.instructions.size() - 1)).tokens;
    const world::Trajectory traj =
        world::run_episode(w, policy, e.start, tokens, {options.max_steps, k}, mix_seed(options.seed, i));
    EpisodeResult r;
    r.id = e.id;
    r.success = world::is_success(traj, e.goal, d_a, k);
    r.nav_error = nav_error(traj, e.goal);
    r.trajectory_length = path_length(traj.poses);
    r.geodesic_length = e.geodesic_length;
    spl_terms.push_back({r.success, e.geodesic_length, r.trajectory_length});
    r.spl = spl_term(spl_terms.back());
    r.ndtw = ndtw(resample_path(pose_path(traj.poses), options.resample),
                  resample_path(pose_path(e.poses), options.resample), d_a);
    r.steps = traj.steps();
    r.collisions = traj.collisions;
    r.termination = traj.termination;
    if (options.keep_poses) r.poses = traj.poses;
    report.per_episode.push_back(std::move(r));
  }
  report.episodes = report.per_episode.size();
  if (report.episodes > 0) {
    const double n = static_cast<double>(report.episodes);
    for (const auto& r : report.per_episode) {
      report.sr += r.success ? 1.0 : 0.0;
      report.ndtw += r.ndtw;
      report.tl += r.trajectory_length;
      report.ne += r.nav_error;
    }
    report.sr /= n;
    report.ndtw /= n;
    report.tl /= n;
    report.ne /= n;
    report.spl = spl(spl_terms);
  }
  return report;
}

world::PolicyOutput OracleReplayPolicy::act(const world::Observation&, std::size_t step) {
  if (!episode_ || step >= episode_->low_actions.size()) return {{0.0, 0.0}, true};
  return {episode_->low_actions[step], false};
}

RandomPolicy::RandomPolicy(std::array<std::size_t, world::kHighActionCount> histogram, world::Kinematics k,
                           std::size_t hold)
    : k_(k), hold_(hold == 0 ? 1 : hold) {
  const double total = static_cast<double>(std::accumulate(histogram.begin(), histogram.end(), std::size_t{0}));
  double acc = 0.0;
  for (std::size_t i = 0; i < histogram.size(); ++i) {
    acc += total > 0.0 ? static_cast<double>(histogram[i]) / total : 1.0 / static_cast<double>(histogram.size());
    cdf_[i] = acc;
  }
  cdf_.back() = 1.0;
}

void RandomPolicy::reset(const world::EpisodeContext& ctx) { rng_ = SplitMix64(ctx.seed); }

world::PolicyOutput RandomPolicy::act(const world::Observation&, std::size_t step) {
  if (step % hold_ == 0) {
    const double u = rng_.uniform();
    std::size_t a = 0;
    while (a + 1 < cdf_.size() && u >= cdf_[a]) ++a;
    current_ = static_cast<world::HighAction>(a);
  }
  const double span = static_cast<double>(hold_) * k_.dt;
  switch (current_) {
    case world::HighAction::Forward: return {{world::kForwardStep / span, 0.0}, false};
    case world::HighAction::TurnLeft: return {{0.0, world::kTurnStep / span}, false};
    case world::HighAction::TurnRight: return {{0.0, -world::kTurnStep / span}, false};
    case world::HighAction::Stop: break;
  }
  return {{0.0, 0.0}, true};
}

}  // namespace hcm::eval
