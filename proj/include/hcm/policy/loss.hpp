#pragma once

#include <array>
#include <vector>

#include "hcm/policy/model.hpp"

namespace hcm::policy {

/// Supervision for one control step; velocity is already in head units.
struct StepTarget {
  world::HighAction high = world::HighAction::Forward;
  std::array<double, 2> velocity{-1.0, 0.0};
  double stop = 0.0;
  double progress = 0.0;
};

/// Loss of one step: λ·NLL(high) + (1−λ)·(‖velocity − target‖² + BCE(stop)).
/// Terms whose output is absent are skipped; a progress output adds
/// 0.5·(1−λ)·(progress − target)². Throws nn::ConfigError unless λ ∈ [0, 1].
Tensor step_loss(const StepOutput& out, const StepTarget& target, double lambda);

/// Sum of step_loss over a sequence.
Tensor joint_loss(const std::vector<StepOutput>& outs, const std::vector<StepTarget>& targets, double lambda);

}  // namespace hcm::policy
