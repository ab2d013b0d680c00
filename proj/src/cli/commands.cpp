#include "hcm/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hcm::cli {

namespace {

eval::EvalOptions eval_options(const RunConfig& c, std::uint64_t seed) {
  eval::EvalOptions o;
  o.max_steps = c.eval.max_steps;
  o.limit = c.eval.limit;
  o.seed = seed;
  o.keep_poses = c.eval.dump_trajectories;
  return o;
}

void write_report(const eval::MetricsReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  io::write_text(dir / ("eval_" + r.split + ".json"), io::dump_exact_pretty(r.to_json()) + "\n");
  io::write_text(dir / ("eval_" + r.split + ".txt"), r.to_table());
}

std::vector<policy::Variant> configured_variants(const RunConfig& c) {
  std::vector<policy::Variant> out;
  std::stringstream ss(c.ablate.variants);
  std::string name;
  while (std::getline(ss, name, ','))
    if (!name.empty()) out.push_back(policy::parse_variant(name));
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(const char* f, double a, double b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

}  // namespace

std::filesystem::path dataset_dir(const RunConfig& c) { return c.output_dir() / "dataset"; }

std::filesystem::path run_dir(const RunConfig& c, policy::Variant v, std::uint64_t run_seed) {
  return c.output_dir() / "runs" / (policy::to_string(v) + "_seed" + std::to_string(run_seed));
}

bool cmd_gen_data(const RunConfig& c, std::ostream& log) {
  const oracle::DatasetConfig dc = c.dataset_config();
  const auto dir = dataset_dir(c);
  const auto manifest_path = dir / "manifest.json";
  if (std::filesystem::exists(manifest_path)) {
    const auto m = oracle::DatasetManifest::from_json(io::read_json(manifest_path));
    if (m.config_hash == dc.hash()) {
      log << "dataset " << dir.string() << " is up to date (config " << io::hex64(m.config_hash) << ")\n";
      return false;
    }
    log << "dataset config changed, regenerating\n";
  }
  const oracle::DatasetManifest m = oracle::emit_dataset(dc, dir);
  std::ostringstream summary;
  for (const auto& name : oracle::kSplitNames) {
    const auto& s = m.stats.at(name);
    summary << name << ": " << s.episodes << " episodes, " << s.candidates << " candidates, " << s.planner_rejects
            << " planner rejects, " << s.filter_accepted << "/" << s.filter_checked << " navigable, "
            << s.long_rejects << " too long\n";
  }
  summary << "mean steps " << m.mean_steps << ", mean geodesic " << m.mean_geodesic << " m, acceptance rate "
          << m.acceptance_rate << "\n";
  io::write_text(dir / "stats.txt", summary.str());
  log << summary.str();
  return true;
}

oracle::Dataset load_checked_dataset(const RunConfig& c) {
  const auto dir = dataset_dir(c);
  if (!std::filesystem::exists(dir / "manifest.json"))
    throw oracle::DatasetError("no dataset at " + dir.string() + "; run gen-data first");
  oracle::Dataset d = oracle::load_dataset(dir);
  if (d.manifest.config_hash != c.dataset_config().hash())
    throw oracle::DatasetError("dataset at " + dir.string() + " was generated from a different config; rerun gen-data");
  return d;
}

std::filesystem::path cmd_train(const RunConfig& c, const oracle::Dataset& data, policy::Variant v,
                                std::uint64_t run_seed, std::ostream& log) {
  const auto dir = run_dir(c, v, run_seed);
  if (std::filesystem::exists(dir / "model.json")) {
    const auto prior = policy::CheckpointInfo::from_json(io::read_json(dir / "model.json"));
    if (prior.dataset_hash != data.manifest.config_hash)
      throw oracle::DatasetError("run " + dir.string() + " was trained on dataset " + io::hex64(prior.dataset_hash) +
                                 " but the current dataset is " + io::hex64(data.manifest.config_hash) +
                                 "; remove the run directory to retrain");
  }
  std::filesystem::create_directories(dir);
  const policy::TrainConfig tc = c.train_config(run_seed);
  log << "training " << policy::to_string(v) << " seed " << run_seed << "\n";
  std::ofstream curve(dir / "train_log.jsonl", std::ios::trunc);
  policy::TrainResult r = policy::train_variant(v, c.model_config(), tc, data, [&](const policy::EpochRecord& e) {
    const io::Json j = {{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"val_seen_sr", e.val_seen_sr},
                        {"val_seen_spl", e.val_seen_spl}};
    curve << io::dump_exact(j) << "\n";
    curve.flush();
    log << "  epoch " << e.epoch << " loss " << e.train_loss << " val_seen sr " << e.val_seen_sr << " spl "
        << e.val_seen_spl << " (" << static_cast<int>(e.seconds) << " s)\n";
    log.flush();
  });
  policy::CheckpointInfo info;
  info.kind = v;
  info.model = r.model->config();
  info.train = tc;
  info.dataset_hash = data.manifest.config_hash;
  info.vocab_hash = data.manifest.vocab_hash;
  info.best_epoch = r.best_epoch;
  info.curve = r.curve;
  policy::save_model(*r.model, info, dir);
  io::write_text(dir / "config.txt", c.dump());
  const io::Json manifest = {{"code_version", code_version()},
                             {"variant", policy::to_string(v)},
                             {"run_seed", run_seed},
                             {"master_seed", c.seed},
                             {"run_config_hash", io::hex64(c.hash())},
                             {"checkpoint_config_hash", io::hex64(info.config_hash())},
                             {"dataset_hash", io::hex64(data.manifest.config_hash)},
                             {"vocab_hash", io::hex64(data.manifest.vocab_hash)},
                             {"best_epoch", r.best_epoch}};
  io::write_text(dir / "run.json", io::dump_exact_pretty(manifest) + "\n");
  return dir;
}

eval::MetricsReport cmd_eval(const RunConfig& c, const oracle::Dataset& data, const std::string& checkpoint,
                             const std::string& split, const std::filesystem::path& out_dir, std::ostream& log) {
  if (std::find(oracle::kSplitNames.begin(), oracle::kSplitNames.end(), split) == oracle::kSplitNames.end())
    throw UsageError("unknown split '" + split + "' (expected train, val_seen or val_unseen)");
  const auto options = eval_options(c, c.seed);
  eval::MetricsReport r;
  if (checkpoint == "oracle") {
    eval::OracleReplayPolicy p;
    r = eval::evaluate(data, split, p, options);
  } else if (checkpoint == "random") {
    eval::RandomPolicy p(data.manifest.action_histogram, data.config.rollout.kinematics);
    r = eval::evaluate(data, split, p, options);
  } else if (checkpoint == "stationary") {
    eval::StationaryPolicy p;
    r = eval::evaluate(data, split, p, options);
  } else {
    if (!std::filesystem::exists(std::filesystem::path(checkpoint) / "model.json"))
      throw oracle::DatasetError("no checkpoint at " + checkpoint);
    const policy::LoadedModel m = policy::load_model(checkpoint);
    if (m.info.dataset_hash != data.manifest.config_hash)
      log << "warning: checkpoint was trained on dataset " << io::hex64(m.info.dataset_hash) << "\n";
    policy::ModelPolicy p(*m.model);
    r = eval::evaluate(data, split, p, options);
    r.policy = policy::to_string(m.info.kind);
  }
  if (r.policy.empty()) r.policy = checkpoint;
  write_report(r, out_dir);
  log << r.to_table();
  return r;
}

eval::MetricsReport median_report(const std::vector<eval::MetricsReport>& runs) {
  eval::MetricsReport m;
  if (runs.empty()) return m;
  m.policy = runs.front().policy;
  m.split = runs.front().split;
  m.episodes = runs.front().episodes;
  auto pick = [&](auto field) {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.*field);
    return median(v);
  };
  m.sr = pick(&eval::MetricsReport::sr);
  m.spl = pick(&eval::MetricsReport::spl);
  m.ndtw = pick(&eval::MetricsReport::ndtw);
  m.tl = pick(&eval::MetricsReport::tl);
  m.ne = pick(&eval::MetricsReport::ne);
  return m;
}

AblationResult cmd_ablate(const RunConfig& c, const oracle::Dataset& data, std::ostream& log) {
  AblationResult res;
  const auto variants = configured_variants(c);
  const auto out = c.output_dir() / "ablate";
  for (policy::Variant v : variants) {
    const std::string name = policy::to_string(v);
    res.rows.push_back(name);
    for (std::size_t s = 0; s < c.ablate.seeds; ++s) {
      const std::uint64_t run_seed = c.seed + s;
      const auto dir = run_dir(c, v, run_seed);
      try {
        bool reuse = false;
        if (std::filesystem::exists(dir / "model.json")) {
          policy::CheckpointInfo want;
          want.kind = v;
          want.model = c.model_config();
          want.train = c.train_config(run_seed);
          const auto have = policy::CheckpointInfo::from_json(io::read_json(dir / "model.json"));
          reuse = have.config_hash() == want.config_hash() && have.dataset_hash == data.manifest.config_hash;
        }
        if (reuse)
          log << "reusing " << dir.string() << "\n";
        else
          cmd_train(c, data, v, run_seed, log);
        RunConfig ec = c;
        ec.seed = run_seed;
        res.seen[name].push_back(cmd_eval(ec, data, dir.string(), "val_seen", dir, log));
        res.unseen[name].push_back(cmd_eval(ec, data, dir.string(), "val_unseen", dir, log));
      } catch (const std::exception& e) {
        res.failures.push_back(name + " seed " + std::to_string(run_seed) + ": " + e.what());
        log << "FAILED " << res.failures.back() << "\n";
      }
    }
  }
  res.rows.push_back("random");
  for (std::size_t s = 0; s < c.ablate.seeds; ++s) {
    RunConfig ec = c;
    ec.seed = c.seed + s;
    const auto dir = out / ("random_seed" + std::to_string(ec.seed));
    res.seen["random"].push_back(cmd_eval(ec, data, "random", "val_seen", dir, log));
    res.unseen["random"].push_back(cmd_eval(ec, data, "random", "val_unseen", dir, log));
  }
  for (const auto& [name, runs] : res.seen) res.median_seen[name] = median_report(runs);
  for (const auto& [name, runs] : res.unseen) res.median_unseen[name] = median_report(runs);

  std::ostringstream table;
  char head[256];
  std::snprintf(head, sizeof head, "%-18s | %-38s | %-38s\n", "", "val_seen  SR    SPL   NDTW     TL     NE",
                "val_unseen  SR    SPL   NDTW     TL     NE");
  table << head;
  for (const auto& name : res.rows) {
    if (!res.median_seen.count(name)) {
      table << name << ": no completed runs\n";
      continue;
    }
    const auto& a = res.median_seen[name];
    const auto& b = res.median_unseen[name];
    char line[256];
    std::snprintf(line, sizeof line, "%-18s |    %6.3f %6.3f %6.3f %6.2f %6.2f |      %6.3f %6.3f %6.3f %6.2f %6.2f\n",
                  name.c_str(), a.sr, a.spl, a.ndtw, a.tl, a.ne, b.sr, b.spl, b.ndtw, b.tl, b.ne);
    table << line;
  }
  res.table = table.str();

  auto have = [&](const std::string& n) { return res.median_unseen.count(n) != 0; };
  auto u = [&](const std::string& n) { return res.median_unseen.at(n); };
  if (have("hcm") && have("hcm_flattened"))
    res.trends.push_back({"hcm unseen SR > flattened unseen SR", u("hcm").sr > u("hcm_flattened").sr,
                          fmt("%.3f vs %.3f", u("hcm").sr, u("hcm_flattened").sr)});
  if (have("hcm") && have("hcm_early_fusion"))
    res.trends.push_back({"hcm unseen SR > early-fusion unseen SR", u("hcm").sr > u("hcm_early_fusion").sr,
                          fmt("%.3f vs %.3f", u("hcm").sr, u("hcm_early_fusion").sr)});
  if (have("hcm_no_vision") && have("random"))
    res.trends.push_back({"no-vision unseen SR within 0.05 of random",
                          std::abs(u("hcm_no_vision").sr - u("random").sr) <= 0.05 + 1e-12,
                          fmt("%.3f vs %.3f", u("hcm_no_vision").sr, u("random").sr)});
  if (have("hcm")) {
    double best = -1.0;
    std::string best_name;
    for (const char* flat : {"seq2seq", "pm", "cma"})
      if (have(flat) && u(flat).spl > best) {
        best = u(flat).spl;
        best_name = flat;
      }
    if (!best_name.empty())
      res.trends.push_back({"hcm unseen SPL > best flat baseline (" + best_name + ") unseen SPL",
                            u("hcm").spl > best, fmt("%.3f vs %.3f", u("hcm").spl, best)});
  }

  std::filesystem::create_directories(out);
  io::Json j;
  for (const auto& name : res.rows) {
    if (!res.median_seen.count(name)) continue;
    j["median"][name] = {{"val_seen", res.median_seen[name].to_json()}, {"val_unseen", res.median_unseen[name].to_json()}};
    j["median"][name]["val_seen"].erase("per_episode");
    j["median"][name]["val_unseen"].erase("per_episode");
  }
  for (const auto& t : res.trends) j["trends"].push_back({{"name", t.name}, {"pass", t.pass}, {"detail", t.detail}});
  j["failures"] = res.failures;
  io::write_text(out / "results.json", io::dump_exact_pretty(j) + "\n");
  std::string trend_text;
  for (const auto& t : res.trends) trend_text += std::string(t.pass ? "PASS " : "FAIL ") + t.name + " (" + t.detail + ")\n";
  io::write_text(out / "table.txt", res.table + trend_text);
  log << res.table << trend_text;
  for (const auto& f : res.failures) log << "run failure: " << f << "\n";
  return res;
}

std::string cmd_inspect(const oracle::Dataset& data, const std::string& episode_id, std::size_t step) {
  const oracle::Episode* e = nullptr;
  for (const auto& x : data.episodes)
    if (x.id == episode_id) e = &x;
  if (!e) throw UsageError("no episode '" + episode_id + "'");
  if (step > e->steps()) throw UsageError("step " + std::to_string(step) + " is past the episode end");
  std::ostringstream out;
  out << "episode " << e->id << " (" << e->split << ", world " << e->world_seed << ")\n";
  for (std::size_t i = 0; i < e->instructions.size(); ++i) out << "instruction " << i << ": " << e->instructions[i].text << "\n";
  out << "start (" << e->start.x << ", " << e->start.y << ", " << e->start.theta << ") goal (" << e->goal.x << ", "
      << e->goal.y << ")\n";
  out << "steps " << e->steps() << ", geodesic " << e->geodesic_length << " m, waypoints " << e->waypoints.size() << "\n";
  const world::Pose& p = e->poses[step];
  out << "step " << step << " pose (" << p.x << ", " << p.y << ", " << p.theta << ")";
  if (step < e->steps())
    out << " high " << world::to_string(e->high_actions[step]) << " low (" << e->low_actions[step].v << ", "
        << e->low_actions[step].omega << ") stop " << e->stop_labels[step];
  out << "\n" << world::observation_to_text(world::render_observation(data.world_for(*e), p));
  return out.str();
}

}  // namespace hcm::cli
