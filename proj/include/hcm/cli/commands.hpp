#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "hcm/cli/run_config.hpp"
#include "hcm/eval/evaluate.hpp"

namespace hcm::cli {

/// Exit codes: 0 success, 1 runtime failure or failed assertion, 2 usage error.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::filesystem::path dataset_dir(const RunConfig& c);
std::filesystem::path run_dir(const RunConfig& c, policy::Variant v, std::uint64_t run_seed);

/// Writes the dataset unless one with the same config hash is already there.
/// Returns true when files were written.
bool cmd_gen_data(const RunConfig& c, std::ostream& log);

/// Loads the dataset under the output directory and checks it against the config.
oracle::Dataset load_checked_dataset(const RunConfig& c);

/// Trains one variant and writes checkpoint, sidecar, log and run manifest.
std::filesystem::path cmd_train(const RunConfig& c, const oracle::Dataset& data, policy::Variant v,
                                std::uint64_t run_seed, std::ostream& log);

/// `checkpoint` is a run directory or one of the built-in baselines "oracle",
/// "random", "stationary". Writes eval_<split>.json and eval_<split>.txt into
/// `out_dir`.
eval::MetricsReport cmd_eval(const RunConfig& c, const oracle::Dataset& data, const std::string& checkpoint,
                             const std::string& split, const std::filesystem::path& out_dir, std::ostream& log);

struct TrendCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct AblationResult {
  std::vector<std::string> rows;  // variant names in table order, then "random"
  std::map<std::string, std::vector<eval::MetricsReport>> seen, unseen;  // per seed
  std::map<std::string, eval::MetricsReport> median_seen, median_unseen;
  std::vector<TrendCheck> trends;
  std::vector<std::string> failures;
  std::string table;
};

/// Element-wise median of the aggregate metrics.
eval::MetricsReport median_report(const std::vector<eval::MetricsReport>& runs);

/// Trains and evaluates every configured variant over the configured seeds,
/// reusing finished runs, and checks the directional claims.
AblationResult cmd_ablate(const RunConfig& c, const oracle::Dataset& data, std::ostream& log);

/// Text view of an episode and the observation at `step`.
std::string cmd_inspect(const oracle::Dataset& data, const std::string& episode_id, std::size_t step);

}  // namespace hcm::cli
