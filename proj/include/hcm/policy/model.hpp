#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hcm/io/json.hpp"
#include "hcm/nn/lstm.hpp"
#include "hcm/nn/transformer.hpp"
#include "hcm/world/observation.hpp"

namespace hcm::policy {

using ad::Graph;
using ad::Tensor;

enum class Variant { Hcm, Seq2Seq, Pm, Cma, HcmNoVision, HcmEarlyFusion, HcmFlattened };

std::string to_string(Variant v);
/// Throws nn::ConfigError for an unknown name.
Variant parse_variant(const std::string& name);
const std::vector<Variant>& all_variants();
/// Separate high-level and low-level policies joined by the sub-goal.
bool is_hierarchical(Variant v);

struct ModelConfig {
  std::size_t d_model = 256;
  std::size_t heads = 4;
  std::size_t ff = 1024;
  std::size_t encoder_depth = 1;
  std::size_t high_hidden = 256;
  std::size_t low_hidden = 256;
  std::size_t low_layers = 2;
  std::size_t action_embed = 32;
  std::size_t vocab_size = 43;
  std::size_t channels = 10;  // semantic channels of rgb_like
  double v_max = 0.5;
  double omega_max = 1.5707963267948966;

  io::Json to_json() const;
  static ModelConfig from_json(const io::Json& j);
};

/// Inputs of one control step besides the observation.
struct StepInput {
  /// Previous high-level action; kStartAction at t = 0.
  std::size_t prev_high = 4;
  /// Sub-goal handed to the low policy. Empty means the argmax of this step's
  /// high-level distribution (inference).
  std::optional<world::HighAction> subgoal;
  /// Previous low-level command in head units (v_norm, ω_norm).
  std::array<double, 2> prev_low{-1.0, 0.0};
};

inline constexpr std::size_t kStartAction = world::kHighActionCount;
inline constexpr std::size_t kMaxTokens = 24;

struct StepOutput {
  Tensor high_probs;  // [1×4]; absent for variants without high-level output
  Tensor velocity;    // [1×2] (v_norm, ω_norm) in [−1, 1]
  Tensor stop;        // [1×1] p_stop
  Tensor progress;    // [1×1]; progress-monitor variant only
  world::HighAction subgoal = world::HighAction::Forward;
};

/// Per-graph language side: padded token embeddings plus positional encoding
/// and the query projections of each encoder's first block.
struct InstructionContext {
  Tensor queries;  // [24×d]
  nn::ProjectedQueries rgb_queries;
  nn::ProjectedQueries depth_queries;
  Tensor summary;  // [1×d]; flat variants
};

/// Normalized head targets: v_norm = 2v/v_max − 1, ω_norm = ω/ω_max.
std::array<double, 2> normalize_action(const world::LowAction& a, double v_max, double omega_max);
world::LowAction denormalize_action(double v_norm, double omega_norm, double v_max, double omega_max);

/// Pads with id 0 or truncates to 24 tokens. Throws std::invalid_argument
/// naming the first id outside [0, vocab_size).
std::vector<std::size_t> pad_instruction(const std::vector<int>& tokens, std::size_t vocab_size);

class Model {
 public:
  Model(Variant kind, const ModelConfig& config, std::uint64_t seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  Variant kind() const { return kind_; }
  const ModelConfig& config() const { return config_; }
  ad::ParameterStore& store() { return store_; }
  const ad::ParameterStore& store() const { return store_; }

  /// Learned embedding rows of the padded instruction, [24×d].
  Tensor encode_instruction(Graph& g, const std::vector<int>& tokens) const;
  InstructionContext prepare(Graph& g, const std::vector<int>& tokens) const;

  /// Recurrent state layout: high (h, c) then one (h, c) per low layer for
  /// hierarchical variants; a single (h, c) otherwise.
  std::vector<ad::Shape> state_shapes() const;
  std::vector<Tensor> initial_state(Graph& g) const;

  /// One control step of both policies (or the single flat policy); advances
  /// `state` in place.
  StepOutput step(Graph& g, const InstructionContext& ctx, const world::Observation& obs, const StepInput& in,
                  std::vector<Tensor>& state) const;

  // Parameter groups, exposed for tests.
  struct Parts {
    nn::Embedding tokens;
    nn::Linear rgb_proj, depth_proj;
    ad::Parameter* rgb_position = nullptr;
    ad::Parameter* depth_position = nullptr;
    nn::CrossModalEncoder rgb_encoder, depth_encoder;
    nn::Linear visual;  // W_i, b_i
    nn::Embedding prev_action;
    nn::LstmParams high_lstm;
    nn::Linear action_head;  // W_a, b_a
    nn::Embedding subgoal;
    std::vector<nn::LstmParams> low_lstm;
    nn::Linear velocity_head;  // g_a
    nn::Linear stop_head;      // g_s
    nn::Linear summary;        // flat variants: instruction summary
    nn::LstmParams flat_lstm;
    nn::Linear progress_head;  // pm
  };
  const Parts& parts() const { return p_; }

 private:
  Tensor grid_features(Graph& g, const world::Observation& obs, bool rgb) const;
  Tensor pooled_visual(Graph& g, const world::Observation& obs) const;
  StepOutput hierarchical_step(Graph& g, const InstructionContext& ctx, const world::Observation& obs,
                               const StepInput& in, std::vector<Tensor>& state) const;
  StepOutput flat_step(Graph& g, const InstructionContext& ctx, const world::Observation& obs, const StepInput& in,
                       std::vector<Tensor>& state) const;

  Variant kind_;
  ModelConfig config_;
  ad::ParameterStore store_;
  Parts p_;
};

}  // namespace hcm::policy
