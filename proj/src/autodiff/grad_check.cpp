#include "hcm/autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace hcm::ad {

double max_relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  if (analytic.size() != numeric.size()) throw DimensionError("max_relative_error: length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double err = std::abs(analytic[i] - numeric[i]) / std::max(1.0, std::abs(analytic[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

std::vector<double> analytic_gradient(const ScalarFn& f, const Shape& shape, std::span<const double> x) {
  Graph g;
  Tensor leaf = g.variable(shape, std::vector<double>(x.begin(), x.end()));
  Tensor out = f(g, leaf);
  g.backward(out);
  if (!leaf.requires_grad() || g.node(leaf.id()).grad.empty()) return std::vector<double>(x.size(), 0.0);
  auto gr = g.grad(leaf);
  return {gr.begin(), gr.end()};
}

std::vector<double> numeric_gradient(const ScalarFn& f, const Shape& shape, std::span<const double> x, double eps) {
  std::vector<double> point(x.begin(), x.end());
  std::vector<double> out(x.size());
  auto eval = [&] {
    Graph g;
    Tensor leaf = g.constant(shape, point);
    return f(g, leaf).item();
  };
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double keep = point[i];
    point[i] = keep + eps;
    const double up = eval();
    point[i] = keep - eps;
    const double down = eval();
    point[i] = keep;
    out[i] = (up - down) / (2.0 * eps);
  }
  return out;
}

double grad_check(const ScalarFn& f, const Shape& shape, std::span<const double> x, double eps) {
  return max_relative_error(analytic_gradient(f, shape, x), numeric_gradient(f, shape, x, eps));
}

double grad_check_parameters(ParameterStore& store, const ParamLossFn& loss, double eps, std::size_t stride) {
  store.zero_grad();
  {
    Graph g;
    Tensor l = loss(g);
    g.backward(l);
    g.accumulate_parameter_grads();
  }
  std::vector<double> analytic, numeric;
  std::size_t counter = 0;
  for (Parameter* p : store.all()) {
    for (std::size_t i = 0; i < p->size(); ++i, ++counter) {
      if (counter % std::max<std::size_t>(stride, 1) != 0) continue;
      const double keep = p->value()[i];
      p->value()[i] = keep + eps;
      double up;
      {
        Graph g;
        up = loss(g).item();
      }
      p->value()[i] = keep - eps;
      double down;
      {
        Graph g;
        down = loss(g).item();
      }
      p->value()[i] = keep;
      analytic.push_back(p->grad()[i]);
      numeric.push_back((up - down) / (2.0 * eps));
    }
  }
  store.zero_grad();
  return max_relative_error(analytic, numeric);
}

}  // namespace hcm::ad
