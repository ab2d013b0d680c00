#include "hcm/nn/tbptt.hpp"

#include <algorithm>

#include "hcm/autodiff/ops.hpp"

namespace hcm::nn {

std::vector<TbpttWindow> tbptt_train(std::size_t length, std::size_t truncation, const CarriedState& initial,
                                     const TbpttHooks& hooks) {
  if (truncation == 0) throw ad::ContractError("tbptt: truncation length must be at least 1");
  if (initial.shapes.size() != initial.values.size()) throw ad::ContractError("tbptt: malformed carried state");
  std::vector<TbpttWindow> trace;
  CarriedState carried = initial;
  for (std::size_t begin = 0; begin < length; begin += truncation) {
    const std::size_t end = std::min(length, begin + truncation);
    ad::Graph g;
    std::vector<ad::Tensor> state;
    for (std::size_t i = 0; i < carried.values.size(); ++i) state.push_back(g.constant(carried.shapes[i], carried.values[i]));
    if (hooks.begin_window) hooks.begin_window(g, begin);
    ad::Tensor total;
    for (std::size_t t = begin; t < end; ++t) {
      ad::Tensor piece = hooks.step(g, t, state);
      if (!piece.valid()) continue;
      total = total.valid() ? ad::add(total, piece) : piece;
    }
    TbpttWindow w{begin, end, 0.0};
    if (total.valid()) {
      w.loss = total.item();
      g.backward(total);
      g.accumulate_parameter_grads();
    }
    if (hooks.end_window) hooks.end_window(g, w);
    trace.push_back(w);
    carried.shapes.clear();
    carried.values.clear();
    for (const auto& s : state) {
      carried.shapes.push_back(s.shape());
      carried.values.emplace_back(s.data().begin(), s.data().end());
    }
  }
  return trace;
}

}  // namespace hcm::nn
