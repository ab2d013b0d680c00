// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hcm/cli/commands.hpp"
#include "model_cases.hpp"
#include "reference.hpp"

using namespace hcm;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0, double e = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d, e);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

void report(int n, const std::string& title, const Outcome& o) {
  std::cout << "criterion " << n << " " << (o.pass ? "PASS" : "FAIL") << "  " << title << ": " << o.detail
            << std::endl;
}

// 1: finite-difference checks of ops, blocks and the two-step model.
Outcome gradients() {
  const auto t0 = Clock::now();
  double op_err = 0.0, block_err = 0.0, model_err = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (const auto& c : reference::op_cases(seed)) op_err = std::max(op_err, ad::grad_check(c.f, c.shape, c.x));
    block_err = std::max(block_err, reference::block_gradient_error(seed));
    for (policy::Variant v : policy::all_variants())
      model_err = std::max(model_err, reference::model_gradient_error(v, seed + 1));
  }
  const double secs = seconds_since(t0);
  return {op_err < 1e-4 && block_err < 1e-4 && model_err < 1e-4 && secs < 120.0,
          fmt("max rel err ops %.2e, blocks %.2e, model %.2e over 10 seeds; %.1f s (limit 120 s)", op_err, block_err,
              model_err, secs)};
}

// 2: A* against an independent Dijkstra on random small worlds.
Outcome planner() {
  std::size_t worlds = 0, compared = 0, mismatches = 0, blocked_cells = 0, unsafe_segments = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    SplitMix64 rng(mix_seed(seed, 0x61636365));
    const int width = 8 + static_cast<int>(rng.below(8)), height = 8 + static_cast<int>(rng.below(8));
    world::World w = reference::open_room(width, height, 0.25);
    for (int y = 1; y < height - 1; ++y)
      for (int x = 1; x < width - 1; ++x)
        if (rng.bernoulli(0.08)) w.at_mut(x, y) = world::kWall;
    const double robot = 0.18, radius = robot + 0.12;
    const oracle::PlanningGrid grid = oracle::inflate(w, radius);
    std::vector<std::pair<int, int>> open;
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        if (!grid.is_blocked(x, y)) open.push_back({x, y});
    if (open.size() < 2) continue;
    ++worlds;
    for (int trial = 0; trial < 5; ++trial) {
      const auto [sx, sy] = open[rng.below(open.size())];
      const auto [gx, gy] = open[rng.below(open.size())];
      const reference::OracleCost expect = reference::dijkstra(w, radius, sx, sy, gx, gy);
      const oracle::Point2 s{w.cell_center(sx), w.cell_center(sy)}, g{w.cell_center(gx), w.cell_center(gy)};
      ++compared;
      if (!expect.reachable) {
        try {
          oracle::astar_plan(grid, s, g);
          ++mismatches;
        } catch (const oracle::NoPathError&) {
        }
        continue;
      }
      const oracle::Plan plan = oracle::astar_plan(grid, s, g);
      if (plan.cost != oracle::grid_path_cost(expect.straight, expect.diagonal, w.cell_size)) ++mismatches;
      for (const auto& [x, y] : plan.cells) blocked_cells += grid.is_blocked(x, y) ? 1 : 0;
      for (std::size_t i = 1; i < plan.waypoints.size(); ++i)
        unsafe_segments += oracle::segment_collision_free(w, plan.waypoints[i - 1], plan.waypoints[i], robot) ? 0 : 1;
    }
  }
  return {worlds == 50 && mismatches == 0 && blocked_cells == 0 && unsafe_segments == 0,
          fmt("%.0f queries on %.0f worlds <= 15x15: %.0f cost mismatches, %.0f blocked cells, %.0f colliding segments",
              static_cast<double>(compared), static_cast<double>(worlds), static_cast<double>(mismatches), static_cast<double>(blocked_cells),
              static_cast<double>(unsafe_segments))};
}

// 3: default dataset generation time, re-validation and open-loop replay.
Outcome dataset_soundness(const cli::RunConfig& rc, oracle::Dataset& out) {
  const auto t0 = Clock::now();
  cli::cmd_gen_data(rc, std::cout);
  const double gen_secs = seconds_since(t0);
  out = cli::load_checked_dataset(rc);
  std::size_t violations = 0;
  for (const auto& e : out.episodes) violations += oracle::validate_episode(out.world_for(e), e, out.config).size();
  std::size_t total = 0, succeeded = 0, collisions = 0;
  eval::OracleReplayPolicy replay;
  for (const auto& split : oracle::kSplitNames) {
    const auto r = eval::evaluate(out, split, replay);
    for (const auto& e : r.per_episode) {
      ++total;
      succeeded += e.success ? 1 : 0;
      collisions += e.collisions;
    }
  }
  const bool pass = total == out.episodes.size() && succeeded == total && collisions == 0 && violations == 0 &&
                    gen_secs < 300.0;
  std::ostringstream s;
  s << total << " episodes, replay success " << succeeded << "/" << total << ", collisions " << collisions
    << ", invariant violations " << violations << ", navigability acceptance rate "
    << fmt("%.3f", out.manifest.acceptance_rate) << ", generation " << fmt("%.1f", gen_secs) << " s (limit 300 s)";
  return {pass, s.str()};
}

// 4: metric oracles.
Outcome metrics() {
  SplitMix64 rng(404);
  auto random_path = [&](std::size_t n) {
    std::vector<oracle::Point2> p;
    for (std::size_t i = 0; i < n; ++i) p.push_back({rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)});
    return p;
  };
  double worst = 0.0;
  std::size_t pairs = 0;
  for (int rep = 0; rep < 3; ++rep)
    for (std::size_t n = 1; n <= 8; ++n)
      for (std::size_t m = 1; m <= 8; ++m) {
        const auto q = random_path(m), r = random_path(n);
        worst = std::max(worst, std::abs(eval::dtw(q, r) - reference::brute_dtw(q, r)));
        const double expect = std::exp(-reference::brute_dtw(q, r) / (static_cast<double>(r.size()) * 2.0));
        worst = std::max(worst, std::abs(eval::ndtw(q, r, 2.0) - expect));
        ++pairs;
      }
  world::Trajectory t;
  t.poses = {{0.0, 0.0, 0.0}, {3.0, 4.0, 0.0}};
  const std::vector<oracle::Point2> path{{0, 0}, {1, 0}, {2, 1}};
  const bool hand = eval::nav_error(t, {0.0, 0.0}) == 5.0 && eval::ndtw(path, path, 3.0) == 1.0 &&
                    eval::spl({{true, 7.0, 7.0}}) == 1.0 && eval::spl({{false, 7.0, 7.0}}) == 0.0 &&
                    eval::spl({{true, 10.0, 20.0}}) == 0.5;
  return {worst < 1e-9 && hand, fmt("%.0f path pairs, max |DP - brute force| %.1e (limit 1e-9); hand cases ",
                                    static_cast<double>(pairs), worst) +
                                    (hand ? "exact" : "WRONG")};
}

// 5: learning signal of the hierarchical agent.
Outcome learning(const cli::RunConfig& rc, const oracle::Dataset& data, double& train_secs) {
  const fs::path run = cli::run_dir(rc, policy::Variant::Hcm, rc.seed);
  const auto t0 = Clock::now();
  cli::cmd_train(rc, data, policy::Variant::Hcm, rc.seed, std::cout);
  train_secs = seconds_since(t0);
  std::ostringstream null_log;
  const auto seen = cli::cmd_eval(rc, data, run.string(), "val_seen", run, null_log);
  const auto unseen = cli::cmd_eval(rc, data, run.string(), "val_unseen", run, null_log);
  const fs::path base = rc.output_dir() / "baselines";
  const auto oracle_r = cli::cmd_eval(rc, data, "oracle", "val_unseen", base / "oracle", null_log);
  const auto random_r = cli::cmd_eval(rc, data, "random", "val_unseen", base / "random", null_log);
  const bool pass = seen.sr >= 0.8 && unseen.sr >= 0.3 && oracle_r.sr == 1.0 && random_r.sr <= 0.15 &&
                    train_secs <= 1800.0;
  std::ostringstream s;
  s << "hcm SR seen " << fmt("%.3f", seen.sr) << " (>= 0.8), unseen " << fmt("%.3f", unseen.sr)
    << " (>= 0.3); oracle SR " << fmt("%.3f", oracle_r.sr) << " (= 1.0); random SR " << fmt("%.3f", random_r.sr)
    << " (<= 0.15); training " << fmt("%.0f", train_secs) << " s (limit 1800 s)";
  return {pass, s.str()};
}

// 6: directional claims on 3-seed medians.
Outcome trends(const cli::RunConfig& rc, const oracle::Dataset& data) {
  const cli::AblationResult res = cli::cmd_ablate(rc, data, std::cout);
  std::cout << res.table;
  bool pass = res.failures.empty() && res.trends.size() == 4;
  std::ostringstream s;
  const char* tags[] = {"(a)", "(b)", "(c)", "(d)"};
  for (std::size_t i = 0; i < res.trends.size(); ++i) {
    pass = pass && res.trends[i].pass;
    s << (i ? "; " : "") << (i < 4 ? tags[i] : "") << " " << res.trends[i].name << " " << res.trends[i].detail
      << (res.trends[i].pass ? " ok" : " FAILED");
  }
  for (const auto& f : res.failures) s << "; run failure: " << f;
  return {pass, s.str()};
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 7: same config and seed give identical files and reports.
Outcome determinism(const cli::RunConfig& rc, const fs::path& work, bool have_model) {
  std::size_t files = 0, differing = 0;
  std::vector<fs::path> dirs;
  for (const char* name : {"det_a", "det_b"}) {
    cli::RunConfig c = rc;
    c.output = (work / name).string();
    fs::remove_all(c.output_dir());
    cli::cmd_gen_data(c, std::cout);
    dirs.push_back(cli::dataset_dir(c));
  }
  for (const auto& entry : fs::recursive_directory_iterator(dirs[0])) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const fs::path other = dirs[1] / fs::relative(entry.path(), dirs[0]);
    if (!fs::exists(other) || read_bytes(entry.path()) != read_bytes(other)) ++differing;
  }
  std::size_t b_files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dirs[1])) b_files += entry.is_regular_file() ? 1 : 0;

  std::vector<std::string> reports;
  for (int rep = 0; rep < 2; ++rep) {
    cli::RunConfig c = rc;
    c.output = (work / (rep ? "det_b" : "det_a")).string();
    const oracle::Dataset d = cli::load_checked_dataset(c);
    eval::RandomPolicy random(d.manifest.action_histogram, d.config.rollout.kinematics);
    std::string joined = io::dump_exact(eval::evaluate(d, "val_unseen", random).to_json());
    if (have_model) {
      const policy::LoadedModel lm = policy::load_model(cli::run_dir(rc, policy::Variant::Hcm, rc.seed));
      policy::ModelPolicy agent(*lm.model);
      eval::EvalOptions eo;
      eo.max_steps = rc.eval.max_steps;
      joined += io::dump_exact(eval::evaluate(d, "val_unseen", agent, eo).to_json());
    }
    reports.push_back(joined);
  }
  const bool same_reports = reports[0] == reports[1];
  std::ostringstream s;
  s << files << " dataset files compared, " << differing << " differ" << (b_files != files ? " (file count differs)" : "")
    << "; MetricsReport JSON " << (same_reports ? "identical" : "DIFFERENT") << " across runs ("
    << (have_model ? "random and trained hcm" : "random") << ")";
  return {files > 0 && differing == 0 && b_files == files && same_reports, s.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance run"};
  std::string config_file = HCM_DEFAULT_ACCEPTANCE_CONFIG;
  std::string work = "acceptance_work";
  std::vector<int> only;
  app.add_option("-c,--config", config_file, "key = value config for the learning criteria");
  app.add_option("-w,--work", work, "working directory");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);

  auto wanted = [&](int n) { return only.empty() || std::find(only.begin(), only.end(), n) != only.end(); };
  const fs::path work_dir = fs::absolute(work);
  fs::create_directories(work_dir);

  cli::RunConfig rc;
  // generation criteria use the default dataset; the learning criteria add the config file on top
  rc.output = (work_dir / "default").string();
  cli::RunConfig desk = rc;
  desk.apply_file(config_file);
  desk.output = (work_dir / "desk").string();
  if (desk.dataset_config().hash() != rc.dataset_config().hash())
    std::cout << "note: the config file changes the dataset; criteria 5-7 use its dataset\n";

  int failed = 0;
  auto run = [&](int n, const std::string& title, auto&& body) {
    if (!wanted(n)) return;
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    report(n, title, o);
  };

  oracle::Dataset data;
  double train_secs = 0.0;
  bool have_model = false;
  run(1, "gradient checks", [] { return gradients(); });
  run(2, "planner oracle", [] { return planner(); });
  run(3, "dataset soundness", [&] { return dataset_soundness(rc, data); });
  run(4, "metric oracles", [] { return metrics(); });
  const bool need_desk = wanted(5) || wanted(6) || wanted(7);
  if (need_desk) {
    try {
      cli::cmd_gen_data(desk, std::cout);
      data = cli::load_checked_dataset(desk);
    } catch (const std::exception& e) {
      std::cout << "desk dataset unavailable: " << e.what() << "\n";
    }
  }
  run(5, "learning signal", [&] {
    Outcome o = learning(desk, data, train_secs);
    have_model = true;
    return o;
  });
  run(6, "trend reproduction", [&] { return trends(desk, data); });
  if (!have_model) have_model = fs::exists(cli::run_dir(desk, policy::Variant::Hcm, desk.seed) / "model.json");
  run(7, "determinism", [&] { return determinism(desk, work_dir, have_model); });
  std::cout << (failed ? "acceptance: " + std::to_string(failed) + " criteria failed" : std::string("acceptance: all passed"))
            << std::endl;
  return failed ? 1 : 0;
}
