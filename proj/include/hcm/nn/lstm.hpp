#pragma once

#include <vector>

#include "hcm/nn/layers.hpp"

namespace hcm::nn {

/// Gate layout along the 4·d_h axis: input, forget, candidate, output.
struct LstmParams {
  Parameter* w_input = nullptr;   // d_in × 4d_h
  Parameter* w_hidden = nullptr;  // d_h × 4d_h
  Parameter* bias = nullptr;      // 4d_h
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;

  LstmParams() = default;
  /// Forget-gate bias starts at `forget_bias`.
  LstmParams(ParameterStore& store, const std::string& name, std::size_t input_size, std::size_t hidden_size,
             SplitMix64& rng, double forget_bias = 1.0);
};

struct LstmState {
  Tensor hidden;  // [1×d_h]
  Tensor cell;    // [1×d_h]
};

LstmState zero_state(Graph& g, std::size_t hidden_size);

/// One cell update; the output is the new hidden vector.
LstmState lstm_step(Graph& g, Tensor input, const LstmState& state, const LstmParams& p);

}  // namespace hcm::nn
