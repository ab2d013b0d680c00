#include "hcm/nn/lstm.hpp"

namespace hcm::nn {

LstmParams::LstmParams(ParameterStore& store, const std::string& name, std::size_t input_size_,
                       std::size_t hidden_size_, SplitMix64& rng, double forget_bias)
    : input_size(input_size_), hidden_size(hidden_size_) {
  w_input = &store.create_uniform(name + ".w_input", {input_size, 4 * hidden_size}, rng);
  w_hidden = &store.create_uniform(name + ".w_hidden", {hidden_size, 4 * hidden_size}, rng);
  bias = &store.create(name + ".bias", {4 * hidden_size});
  for (std::size_t j = hidden_size; j < 2 * hidden_size; ++j) bias->value()[j] = forget_bias;
}

LstmState zero_state(Graph& g, std::size_t hidden_size) {
  return {g.constant({1, hidden_size}, std::vector<double>(hidden_size, 0.0)),
          g.constant({1, hidden_size}, std::vector<double>(hidden_size, 0.0))};
}

LstmState lstm_step(Graph& g, Tensor input, const LstmState& state, const LstmParams& p) {
  if (input.shape() != ad::Shape{1, p.input_size})
    throw ad::DimensionError("lstm_step: input " + ad::to_string(input.shape()) + " vs expected [1x" +
                             std::to_string(p.input_size) + "]");
  const std::size_t h = p.hidden_size;
  Tensor gates = ad::add_row(
      ad::add(ad::matmul(input, g.param(*p.w_input)), ad::matmul(state.hidden, g.param(*p.w_hidden))),
      g.param(*p.bias));
  Tensor in_gate = ad::sigmoid(ad::slice_last(gates, 0, h));
  Tensor forget_gate = ad::sigmoid(ad::slice_last(gates, h, 2 * h));
  Tensor candidate = ad::tanh(ad::slice_last(gates, 2 * h, 3 * h));
  Tensor out_gate = ad::sigmoid(ad::slice_last(gates, 3 * h, 4 * h));
  Tensor cell = ad::add(ad::mul(forget_gate, state.cell), ad::mul(in_gate, candidate));
  Tensor hidden = ad::mul(out_gate, ad::tanh(cell));
  return {hidden, cell};
}

}  // namespace hcm::nn
