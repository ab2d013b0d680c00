#include "hcm/nn/optim.hpp"

#include <cmath>

namespace hcm::nn {

void check_finite_gradients(const ad::ParameterStore& store) {
  for (const ad::Parameter* p : store.all())
    for (std::size_t i = 0; i < p->size(); ++i)
      if (!std::isfinite(p->grad()[i]))
        throw NonFiniteGradient("non-finite gradient in parameter '" + p->name() + "' at index " + std::to_string(i));
}

double gradient_norm(const ad::ParameterStore& store) {
  double total = 0.0;
  for (const ad::Parameter* p : store.all())
    for (double g : p->grad()) total += g * g;
  return std::sqrt(total);
}

void Adam::step(ad::ParameterStore& store) {
  check_finite_gradients(store);
  double factor = 1.0;
  if (hyper_.clip_norm > 0.0) {
    const double norm = gradient_norm(store);
    if (norm > hyper_.clip_norm) factor = hyper_.clip_norm / norm;
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(hyper_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(hyper_.beta2, static_cast<double>(t_));
  for (ad::Parameter* p : store.all()) {
    auto& mom = moments_[p];
    if (mom.m.empty()) {
      mom.m.assign(p->size(), 0.0);
      mom.v.assign(p->size(), 0.0);
    }
    auto& value = p->value();
    auto& grad = p->grad();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i] * factor;
      mom.m[i] = hyper_.beta1 * mom.m[i] + (1.0 - hyper_.beta1) * g;
      mom.v[i] = hyper_.beta2 * mom.v[i] + (1.0 - hyper_.beta2) * g * g;
      const double m_hat = mom.m[i] / bc1;
      const double v_hat = mom.v[i] / bc2;
      value[i] -= hyper_.lr * m_hat / (std::sqrt(v_hat) + hyper_.eps);
    }
    p->zero_grad();
  }
}

void sgd_step(ad::ParameterStore& store, double lr) {
  check_finite_gradients(store);
  for (ad::Parameter* p : store.all()) {
    for (std::size_t i = 0; i < p->size(); ++i) p->value()[i] -= lr * p->grad()[i];
    p->zero_grad();
  }
}

}  // namespace hcm::nn
