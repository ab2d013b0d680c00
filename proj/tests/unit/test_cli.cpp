#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "hcm/cli/commands.hpp"

using namespace hcm;
using namespace hcm::cli;
namespace fs = std::filesystem;

namespace {

RunConfig small_run(const fs::path& out) {
  RunConfig c;
  c.output = out.string();
  c.set("data.world_seed_last", "20");
  c.set("data.train_episodes", "8");
  c.set("data.val_seen_episodes", "4");
  c.set("data.val_unseen_episodes", "4");
  return c;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hcm_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config fields parse by type and errors name the field") {
  RunConfig c;
  c.set("model.d_model", "64");
  CHECK(c.model.d_model == 64);
  c.set("train.lambda", "0.25");
  CHECK(c.train.lambda == 0.25);
  c.set("eval.dump_trajectories", "true");
  CHECK(c.eval.dump_trajectories);
  try {
    c.set("model.width", "3");
    FAIL("expected an error");
  } catch (const ConfigFieldError& e) {
    CHECK(std::string(e.what()).find("model.width") != std::string::npos);
  }
  try {
    c.set("train.epochs", "many");
    FAIL("expected an error");
  } catch (const ConfigFieldError& e) {
    CHECK(std::string(e.what()).find("train.epochs") != std::string::npos);
  }
  CHECK_THROWS_AS(c.set("train.epochs", "-1"), ConfigFieldError);
  CHECK_THROWS_AS(c.set("model", "1"), ConfigFieldError);
  // hidden fields follow the dataset
  CHECK_THROWS_AS(c.set("model.vocab_size", "10"), ConfigFieldError);
}

TEST_CASE("config dump round-trips through apply_text and drives the hash") {
  RunConfig a;
  a.set("seed", "7");
  a.set("model.heads", "2");
  a.set("ablate.variants", "hcm,seq2seq");
  RunConfig b;
  b.apply_text("# comment\n" + a.dump() + "\n");
  CHECK(b.dump() == a.dump());
  CHECK(b.hash() == a.hash());
  b.set("train.lr", "0.002");
  CHECK(b.hash() != a.hash());
  CHECK_THROWS_AS(b.apply_text("model.heads 2\n"), ConfigFieldError);
  // the master seed reaches the sub-configs
  CHECK(a.dataset_config().seed == 7);
  CHECK(a.train_config(9).seed == 9);
  CHECK(a.model_config().vocab_size == oracle::instruction_vocabulary().size());
}

TEST_CASE("gen-data is idempotent and the dataset is checked against the config") {
  const fs::path root = scratch("gen");
  RunConfig c = small_run(root);
  std::ostringstream log;
  CHECK(cmd_gen_data(c, log));
  const auto stamp = fs::last_write_time(dataset_dir(c) / "manifest.json");
  CHECK_FALSE(cmd_gen_data(c, log));
  CHECK(fs::last_write_time(dataset_dir(c) / "manifest.json") == stamp);
  CHECK(fs::exists(dataset_dir(c) / "stats.txt"));
  const oracle::Dataset d = load_checked_dataset(c);
  CHECK(d.split("train").size() == 8);

  RunConfig other = c;
  other.set("data.min_geodesic", "3.5");
  CHECK_THROWS_AS(load_checked_dataset(other), oracle::DatasetError);
  RunConfig missing = c;
  missing.output = (root / "nothing").string();
  CHECK_THROWS_AS(load_checked_dataset(missing), oracle::DatasetError);
  fs::remove_all(root);
}

TEST_CASE("eval of built-in baselines writes reports and rejects unknown splits") {
  const fs::path root = scratch("eval");
  RunConfig c = small_run(root);
  std::ostringstream log;
  cmd_gen_data(c, log);
  const oracle::Dataset d = load_checked_dataset(c);
  const auto r = cmd_eval(c, d, "oracle", "val_seen", root / "oracle", log);
  CHECK(r.sr == 1.0);
  CHECK(fs::exists(root / "oracle" / "eval_val_seen.json"));
  CHECK(fs::exists(root / "oracle" / "eval_val_seen.txt"));
  CHECK_THROWS_AS(cmd_eval(c, d, "oracle", "test", root / "oracle", log), UsageError);
  CHECK_THROWS_AS(cmd_eval(c, d, root.string() + "/no_such_run", "val_seen", root, log), oracle::DatasetError);
  CHECK_THROWS_AS(cmd_inspect(d, "val_seen_9999", 0), UsageError);
  CHECK(cmd_inspect(d, "val_seen_0000", 0).find("val_seen_0000") != std::string::npos);
  fs::remove_all(root);
}

TEST_CASE("run directories are named by variant and seed") {
  RunConfig c;
  c.output = "/tmp/x";
  CHECK(run_dir(c, policy::Variant::HcmEarlyFusion, 3) == fs::path("/tmp/x/runs/hcm_early_fusion_seed3"));
}

TEST_CASE("median report takes the element-wise median") {
  std::vector<eval::MetricsReport> runs(3);
  const double sr[] = {0.1, 0.5, 0.3}, tl[] = {9.0, 3.0, 4.0};
  for (int i = 0; i < 3; ++i) {
    runs[i].sr = sr[i];
    runs[i].tl = tl[i];
  }
  const auto m = median_report(runs);
  CHECK(m.sr == 0.3);
  CHECK(m.tl == 4.0);
  CHECK(median_report({}).episodes == 0);
}
