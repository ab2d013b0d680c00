#include "hcm/nn/layers.hpp"

#include <cmath>

namespace hcm::nn {

Linear::Linear(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out, SplitMix64& rng) {
  weight = &store.create_uniform(name + ".weight", {in, out}, rng);
  // bias draws share the weight's fan-in bound
  bias = &store.create(name + ".bias", {out});
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  for (double& v : bias->value()) v = rng.uniform(-bound, bound);
}

Tensor Linear::operator()(Graph& g, Tensor x) const { return ad::linear(x, g.param(*weight), g.param(*bias)); }

LayerNormParams::LayerNormParams(ParameterStore& store, const std::string& name, std::size_t width) {
  gain = &store.create_constant(name + ".gain", {width}, 1.0);
  bias = &store.create_constant(name + ".bias", {width}, 0.0);
}

Tensor LayerNormParams::operator()(Graph& g, Tensor x) const {
  return ad::layer_norm(x, g.param(*gain), g.param(*bias));
}

Embedding::Embedding(ParameterStore& store, const std::string& name, std::size_t rows, std::size_t width,
                     SplitMix64& rng) {
  table = &store.create(name + ".table", {rows, width});
  for (double& v : table->value()) v = rng.uniform(-1.0, 1.0);
}

Tensor Embedding::operator()(Graph& g, std::span<const std::size_t> ids) const {
  return ad::embed_lookup(g.param(*table), ids);
}

Tensor Embedding::row(Graph& g, std::size_t id) const {
  const std::size_t ids[1] = {id};
  return ad::embed_lookup(g.param(*table), ids);
}

}  // namespace hcm::nn
