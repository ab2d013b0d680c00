#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "hcm/autodiff/graph.hpp"

namespace hcm::nn {

inline constexpr std::size_t kDefaultTruncation = 100;

/// Recurrent values handed from one window to the next. Only values cross the
/// boundary, so no gradient flows back past it.
struct CarriedState {
  std::vector<ad::Shape> shapes;
  std::vector<std::vector<double>> values;
};

struct TbpttWindow {
  std::size_t begin = 0;
  std::size_t end = 0;
  double loss = 0.0;
};

struct TbpttHooks {
  /// Called once per window before the first step (optional).
  std::function<void(ad::Graph&, std::size_t begin)> begin_window;
  /// Advances `state` in place for step t and returns that step's scalar loss,
  /// or an empty Tensor when the step contributes none.
  std::function<ad::Tensor(ad::Graph&, std::size_t t, std::vector<ad::Tensor>& state)> step;
  /// Called after backward() and parameter gradient accumulation (optional);
  /// typically applies the optimizer.
  std::function<void(ad::Graph&, const TbpttWindow&)> end_window;
};

/// Runs a length-step sequence in windows of `truncation` steps. Each window
/// is its own graph whose loss is backpropagated into Parameter::grad().
std::vector<TbpttWindow> tbptt_train(std::size_t length, std::size_t truncation, const CarriedState& initial,
                                     const TbpttHooks& hooks);

}  // namespace hcm::nn
