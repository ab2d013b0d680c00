#include "hcm/policy/loss.hpp"

#include <cmath>

namespace hcm::policy {

namespace {

void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw nn::ConfigError("lambda must lie in [0, 1], got " + std::to_string(lambda));
}

}  // namespace

Tensor step_loss(const StepOutput& out, const StepTarget& target, double lambda) {
  check_lambda(lambda);
  const Tensor low = ad::add(ad::squared_error(out.velocity, target.velocity), ad::bce(out.stop, target.stop));
  Tensor loss = ad::scale(low, 1.0 - lambda);
  if (out.high_probs.valid())
    loss = ad::add(loss, ad::scale(ad::nll(out.high_probs, static_cast<std::size_t>(target.high)), lambda));
  if (out.progress.valid()) {
    const double t[1] = {target.progress};
    loss = ad::add(loss, ad::scale(ad::squared_error(out.progress, t), 0.5 * (1.0 - lambda)));
  }
  return loss;
}

Tensor joint_loss(const std::vector<StepOutput>& outs, const std::vector<StepTarget>& targets, double lambda) {
  check_lambda(lambda);
  if (outs.size() != targets.size() || outs.empty())
    throw ad::ContractError("joint_loss: " + std::to_string(outs.size()) + " outputs for " +
                            std::to_string(targets.size()) + " targets");
  Tensor total = step_loss(outs[0], targets[0], lambda);
  for (std::size_t t = 1; t < outs.size(); ++t) total = ad::add(total, step_loss(outs[t], targets[t], lambda));
  return total;
}

}  // namespace hcm::policy
