#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hcm/oracle/dataset.hpp"
#include "hcm/policy/train.hpp"

namespace hcm::cli {

/// Unknown key or unparsable value; the message names the field.
class ConfigFieldError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct EvalSettings {
  std::size_t max_steps = 1000;
  std::size_t limit = 0;
  bool dump_trajectories = false;
};

struct AblateSettings {
  std::size_t seeds = 3;
  std::string variants = "hcm,seq2seq,pm,cma,hcm_no_vision,hcm_early_fusion,hcm_flattened";
};

/// Every setting of every command. Keys are "section.name"; the master seed
/// and the output directory sit at the top level.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string output = "runs";
  oracle::DatasetConfig data;
  policy::ModelConfig model;
  policy::TrainConfig train;
  EvalSettings eval;
  AblateSettings ablate;

  /// Canonical key=value dump, one line per field in a fixed order.
  std::string dump() const;
  std::vector<std::pair<std::string, std::string>> items() const;
  void set(const std::string& key, const std::string& value);
  /// Applies "key = value" lines; '#' starts a comment.
  void apply_text(const std::string& text);
  void apply_file(const std::filesystem::path& path);
  std::uint64_t hash() const;

  /// Sub-configs with the master seed applied.
  oracle::DatasetConfig dataset_config() const;
  policy::TrainConfig train_config(std::uint64_t run_seed) const;
  policy::ModelConfig model_config() const;

  /// output, resolved against $HCM_OUTPUT_ROOT when that is set and output is relative.
  std::filesystem::path output_dir() const;
};

std::string code_version();

}  // namespace hcm::cli
