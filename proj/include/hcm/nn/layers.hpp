#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hcm/autodiff/graph.hpp"
#include "hcm/autodiff/ops.hpp"
#include "hcm/autodiff/parameters.hpp"
#include "hcm/autodiff/rng.hpp"

namespace hcm::nn {

using ad::Graph;
using ad::Parameter;
using ad::ParameterStore;
using ad::Tensor;

/// Raised for hyperparameter combinations that cannot be built.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Affine map y = x·W + b.
struct Linear {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;

  Linear() = default;
  Linear(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out, SplitMix64& rng);
  Tensor operator()(Graph& g, Tensor x) const;
  std::size_t in_features() const { return weight->shape()[0]; }
  std::size_t out_features() const { return weight->shape()[1]; }
};

struct LayerNormParams {
  Parameter* gain = nullptr;
  Parameter* bias = nullptr;

  LayerNormParams() = default;
  LayerNormParams(ParameterStore& store, const std::string& name, std::size_t width);
  Tensor operator()(Graph& g, Tensor x) const;
};

/// Learned lookup table.
struct Embedding {
  Parameter* table = nullptr;

  Embedding() = default;
  Embedding(ParameterStore& store, const std::string& name, std::size_t rows, std::size_t width, SplitMix64& rng);
  Tensor operator()(Graph& g, std::span<const std::size_t> ids) const;
  Tensor row(Graph& g, std::size_t id) const;
};

}  // namespace hcm::nn
