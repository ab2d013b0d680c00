#include <iostream>

#include <CLI11.hpp>

#include "hcm/cli/commands.hpp"

using namespace hcm;

namespace {

struct Common {
  std::string config_file;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config_file, "key = value config file");
  app->add_option("-s,--set", c.overrides, "override one field, key=value (repeatable)");
  app->add_option("--seed", c.seed, "master seed");
  app->add_option("-o,--output", c.output, "output directory (relative paths resolve under $HCM_OUTPUT_ROOT)");
}

cli::RunConfig resolve(const Common& c) {
  cli::RunConfig rc;
  if (!c.config_file.empty()) rc.apply_file(c.config_file);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw cli::ConfigFieldError("override '" + kv + "' is not key=value");
    rc.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) rc.seed = *c.seed;
  if (c.output) rc.output = *c.output;
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical cross-modal navigation agent: data, training and evaluation"};
  app.require_subcommand(1);

  Common gen_opts, train_opts, eval_opts, ablate_opts, inspect_opts, config_opts;
  auto* gen = app.add_subcommand("gen-data", "generate the episode dataset");
  add_common(gen, gen_opts);

  auto* train = app.add_subcommand("train", "train one agent variant");
  add_common(train, train_opts);
  std::string variant = "hcm";
  std::optional<std::uint64_t> run_seed;
  train->add_option("-v,--variant", variant, "hcm, seq2seq, pm, cma, hcm_no_vision, hcm_early_fusion, hcm_flattened");
  train->add_option("--run-seed", run_seed, "training seed (defaults to the master seed)");

  auto* evaluate = app.add_subcommand("eval", "evaluate a checkpoint or baseline on a split");
  add_common(evaluate, eval_opts);
  std::string checkpoint, split = "val_unseen", out_dir;
  evaluate->add_option("-k,--checkpoint", checkpoint, "run directory, or oracle | random | stationary")->required();
  evaluate->add_option("--split", split, "train, val_seen or val_unseen");
  evaluate->add_option("--out", out_dir, "report directory (defaults to the run directory)");

  auto* ablate = app.add_subcommand("ablate", "train and compare every variant over several seeds");
  add_common(ablate, ablate_opts);

  auto* inspect = app.add_subcommand("inspect", "print an episode and its observation at one step");
  add_common(inspect, inspect_opts);
  std::string episode_id;
  std::size_t step = 0;
  inspect->add_option("-e,--episode", episode_id, "episode id")->required();
  inspect->add_option("--step", step, "control step");

  auto* show = app.add_subcommand("config", "print the resolved configuration");
  add_common(show, config_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      cli::cmd_gen_data(resolve(gen_opts), std::cout);
    } else if (*train) {
      const auto rc = resolve(train_opts);
      const auto data = cli::load_checked_dataset(rc);
      const auto dir = cli::cmd_train(rc, data, policy::parse_variant(variant), run_seed.value_or(rc.seed), std::cout);
      std::cout << "wrote " << dir.string() << "\n";
    } else if (*evaluate) {
      const auto rc = resolve(eval_opts);
      const auto data = cli::load_checked_dataset(rc);
      std::filesystem::path out = out_dir;
      if (out.empty())
        out = (checkpoint == "oracle" || checkpoint == "random" || checkpoint == "stationary")
                  ? rc.output_dir() / "baselines" / checkpoint
                  : std::filesystem::path(checkpoint);
      cli::cmd_eval(rc, data, checkpoint, split, out, std::cout);
    } else if (*ablate) {
      const auto rc = resolve(ablate_opts);
      const auto data = cli::load_checked_dataset(rc);
      const auto res = cli::cmd_ablate(rc, data, std::cout);
      bool ok = res.failures.empty();
      for (const auto& t : res.trends) ok = ok && t.pass;
      return ok ? 0 : 1;
    } else if (*inspect) {
      const auto rc = resolve(inspect_opts);
      std::cout << cli::cmd_inspect(cli::load_checked_dataset(rc), episode_id, step);
    } else if (*show) {
      const auto rc = resolve(config_opts);
      std::cout << rc.dump() << "# hash " << io::hex64(rc.hash()) << "\n";
    }
  } catch (const cli::ConfigFieldError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const cli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const nn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
