#pragma once

#include <functional>
#include <span>
#include <vector>

#include "hcm/autodiff/graph.hpp"
#include "hcm/autodiff/parameters.hpp"

namespace hcm::ad {

/// Builds a scalar from one input leaf inside a fresh graph.
using ScalarFn = std::function<Tensor(Graph&, Tensor)>;
/// Builds a scalar from the parameters of a store inside a fresh graph.
using ParamLossFn = std::function<Tensor(Graph&)>;

/// max_i |analytic_i − numeric_i| / max(1, |analytic_i|)
double max_relative_error(std::span<const double> analytic, std::span<const double> numeric);

std::vector<double> analytic_gradient(const ScalarFn& f, const Shape& shape, std::span<const double> x);
std::vector<double> numeric_gradient(const ScalarFn& f, const Shape& shape, std::span<const double> x, double eps);

/// Central-difference check of f at x.
double grad_check(const ScalarFn& f, const Shape& shape, std::span<const double> x, double eps = 1e-5);

/// Central-difference check over every scalar of every parameter in `store`.
/// `stride` > 1 probes every stride-th coordinate only.
double grad_check_parameters(ParameterStore& store, const ParamLossFn& loss, double eps = 1e-5,
                             std::size_t stride = 1);

}  // namespace hcm::ad
