#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "hcm/autodiff/parameters.hpp"

namespace hcm::nn {

/// Thrown when a gradient contains NaN or infinity; names the parameter.
class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Global gradient-norm clip; 0 disables.
  double clip_norm = 0.0;
};

class Adam {
 public:
  explicit Adam(AdamHyper hyper = {}) : hyper_(hyper) {}

  /// Applies one update from Parameter::grad() and zeroes the gradients.
  void step(ad::ParameterStore& store);
  std::uint64_t steps() const { return t_; }
  const AdamHyper& hyper() const { return hyper_; }
  void set_lr(double lr) { hyper_.lr = lr; }

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  AdamHyper hyper_;
  std::uint64_t t_ = 0;
  std::unordered_map<const ad::Parameter*, Moments> moments_;
};

/// p ← p − lr·g, then zeroes the gradients.
void sgd_step(ad::ParameterStore& store, double lr);

/// Throws NonFiniteGradient if any gradient entry is not finite.
void check_finite_gradients(const ad::ParameterStore& store);
double gradient_norm(const ad::ParameterStore& store);

}  // namespace hcm::nn
