#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "hcm/eval/evaluate.hpp"
#include "hcm/nn/optim.hpp"
#include "hcm/oracle/dataset.hpp"
#include "hcm/policy/loss.hpp"

namespace hcm::policy {

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t truncation = 100;
  double lambda = 0.5;
  double lr = 1e-3;
  double clip_norm = 10.0;
  std::uint64_t seed = 1;
  /// Stop after this many epochs without a val-seen SPL improvement; 0 never stops early.
  std::size_t patience = 5;
  /// Val-seen episodes used for model selection; 0 means all.
  std::size_t val_limit = 0;
  std::size_t eval_max_steps = 1000;
  /// Cycle through the instruction paraphrases from epoch to epoch.
  bool rotate_paraphrases = true;
  /// Probability of replacing the teacher-forced previous actions of a step
  /// with the start token and the neutral command.
  double prev_action_dropout = 0.0;

  io::Json to_json() const;
  static TrainConfig from_json(const io::Json& j);
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean per control step
  double val_seen_sr = 0.0;
  double val_seen_spl = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  std::unique_ptr<Model> model;  // parameters of the selected epoch
  std::vector<EpochRecord> curve;
  std::size_t best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Teacher-forced supervision of step t of an oracle episode.
StepInput teacher_input(const oracle::Episode& e, std::size_t t, const ModelConfig& c);
StepTarget teacher_target(const oracle::Episode& e, std::size_t t, const ModelConfig& c);

/// Builds the whole teacher-forced episode in one graph and returns the joint
/// loss; used by gradient checks and as the TBPTT reference.
Tensor episode_loss(Graph& g, const Model& model, const world::World& w, const oracle::Episode& e, double lambda,
                    std::size_t steps = 0, std::size_t paraphrase = 0);

/// One pass over `episodes` with TBPTT and Adam; returns the mean step loss.
double train_epoch(Model& model, nn::Adam& adam, const oracle::Dataset& data,
                   const std::vector<const oracle::Episode*>& episodes, const TrainConfig& config,
                   std::size_t paraphrase, std::size_t epoch = 1);

/// Trains `kind` on the train split with model selection on val-seen SPL.
TrainResult train_variant(Variant kind, const ModelConfig& model_config, const TrainConfig& config,
                          const oracle::Dataset& data, const EpochCallback& on_epoch = {});

struct CheckpointInfo {
  Variant kind = Variant::Hcm;
  ModelConfig model;
  TrainConfig train;
  std::uint64_t dataset_hash = 0;
  std::uint64_t vocab_hash = 0;
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> curve;

  std::uint64_t config_hash() const;
  io::Json to_json() const;
  static CheckpointInfo from_json(const io::Json& j);
};

/// Writes checkpoint.json (parameters) and model.json (sidecar) into dir.
void save_model(const Model& model, const CheckpointInfo& info, const std::filesystem::path& dir);
struct LoadedModel {
  std::unique_ptr<Model> model;
  CheckpointInfo info;
};
LoadedModel load_model(const std::filesystem::path& dir);

/// Closed-loop driver for a trained model. The sub-goal is the argmax of the
/// high-level distribution; a hierarchical agent stops when that argmax is
/// Stop and p_stop > 0.5, a flat agent when p_stop > 0.5.
class ModelPolicy : public eval::DatasetPolicy {
 public:
  explicit ModelPolicy(const Model& model) : model_(model) {}
  void reset(const world::EpisodeContext& ctx) override;
  world::PolicyOutput act(const world::Observation& obs, std::size_t step) override;

  /// Last step's raw outputs, for inspection.
  const std::vector<double>& last_high_probs() const { return last_high_; }
  double last_stop_prob() const { return last_stop_; }

 private:
  const Model& model_;
  std::vector<int> tokens_;
  std::vector<std::vector<double>> state_;
  std::size_t prev_high_ = kStartAction;
  std::array<double, 2> prev_low_{-1.0, 0.0};
  std::vector<double> last_high_;
  double last_stop_ = 0.0;
};

}  // namespace hcm::policy
