#include "hcm/autodiff/graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hcm::ad {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << "x";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kConstant: return "constant";
    case OpKind::kVariable: return "variable";
    case OpKind::kParameter: return "parameter";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kMatMulNT: return "matmul_nt";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kAddRow: return "add_row";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kRelu: return "relu";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kLayerNorm: return "layer_norm";
    case OpKind::kConcat: return "concat";
    case OpKind::kSlice: return "slice";
    case OpKind::kMeanOuter: return "mean_pool";
    case OpKind::kEmbedLookup: return "embed_lookup";
    case OpKind::kReshape: return "reshape";
    case OpKind::kSum: return "sum";
    case OpKind::kNll: return "nll";
    case OpKind::kBce: return "bce";
    case OpKind::kSquaredError: return "squared_error";
  }
  return "?";
}

Parameter::Parameter(std::string name, Shape shape)
    : name_(std::move(name)), shape_(std::move(shape)), value_(numel(shape_), 0.0), grad_(numel(shape_), 0.0) {}

void Parameter::zero_grad() { std::fill(grad_.begin(), grad_.end(), 0.0); }

Graph& Tensor::graph() const {
  if (!graph_) throw ContractError("use of an empty tensor handle");
  return *graph_;
}
const Shape& Tensor::shape() const { return graph().node(id_).shape; }
std::size_t Tensor::size() const { return graph().node(id_).value.size(); }
std::span<const double> Tensor::data() const { return graph().node(id_).value; }
bool Tensor::requires_grad() const { return graph().node(id_).requires_grad; }

double Tensor::item() const {
  auto d = data();
  if (d.size() != 1) throw DimensionError("item() on tensor of shape " + to_string(shape()));
  return d[0];
}

Tensor Graph::emit(Node node) {
  if (numel(node.shape) != node.value.size())
    throw DimensionError(std::string(op_name(node.op)) + ": value size does not match shape " + to_string(node.shape));
  for (int in : node.inputs) node.requires_grad = node.requires_grad || nodes_[static_cast<std::size_t>(in)].requires_grad;
  nodes_.push_back(std::move(node));
  backward_done_ = false;
  return Tensor(this, static_cast<int>(nodes_.size() - 1));
}

Tensor Graph::constant(Shape shape, std::vector<double> value) {
  Node n;
  n.op = OpKind::kConstant;
  n.shape = std::move(shape);
  n.value = std::move(value);
  return emit(std::move(n));
}

Tensor Graph::constant(Shape shape, std::span<const double> value) {
  return constant(std::move(shape), std::vector<double>(value.begin(), value.end()));
}

Tensor Graph::variable(Shape shape, std::vector<double> value) {
  Node n;
  n.op = OpKind::kVariable;
  n.shape = std::move(shape);
  n.value = std::move(value);
  n.requires_grad = true;
  return emit(std::move(n));
}

Tensor Graph::param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Tensor(this, it->second);
  Node n;
  n.op = OpKind::kParameter;
  n.shape = p.shape();
  n.value = p.value();
  n.param = &p;
  n.requires_grad = true;
  Tensor t = emit(std::move(n));
  param_nodes_.emplace(&p, t.id());
  return t;
}

void Graph::clear() {
  nodes_.clear();
  param_nodes_.clear();
  backward_done_ = false;
}

std::span<const double> Graph::grad(Tensor t) const {
  const Node& n = node(t.id());
  if (n.grad.empty()) throw ContractError("no gradient recorded for node " + std::to_string(t.id()));
  return n.grad;
}

void Graph::accumulate_parameter_grads() {
  for (auto& n : nodes_) {
    if (n.op != OpKind::kParameter || n.grad.empty()) continue;
    auto& g = n.param->grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
  }
}

void Graph::backward(Tensor loss) {
  if (&loss.graph() != this) throw ContractError("backward: loss belongs to a different graph");
  Node& root = node(loss.id());
  if (root.value.size() != 1)
    throw ContractError("backward: loss must be scalar, got shape " + to_string(root.shape));
  if (backward_done_) throw ContractError("backward: graph already differentiated");
  for (auto& n : nodes_) n.grad.clear();
  root.grad.assign(1, 1.0);
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.empty() || !n.requires_grad) continue;
    backward_node(n);
  }
  backward_done_ = true;
}

namespace {

std::vector<double>& grad_buffer(Graph::Node& n) {
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

struct AxisSplit {
  std::size_t outer, n, inner;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s{1, shape[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

void Graph::backward_node(Node& n) {
  const auto& gy = n.grad;
  auto input = [&](std::size_t k) -> Node& { return nodes_[static_cast<std::size_t>(n.inputs[k])]; };
  auto wants = [&](std::size_t k) { return input(k).requires_grad; };

  switch (n.op) {
    case OpKind::kConstant:
    case OpKind::kVariable:
    case OpKind::kParameter:
      break;

    case OpKind::kMatMul: {
      Node& a = input(0);
      Node& b = input(1);
      const std::size_t m = a.shape[0], k = a.shape[1], cols = b.shape[1];
      if (wants(0)) {
        auto& ga = grad_buffer(a);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            const double* brow = &b.value[p * cols];
            const double* grow = &gy[i * cols];
            for (std::size_t j = 0; j < cols; ++j) acc += grow[j] * brow[j];
            ga[i * k + p] += acc;
          }
      }
      if (wants(1)) {
        auto& gb = grad_buffer(b);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const double av = a.value[i * k + p];
            if (av == 0.0) continue;
            double* gbrow = &gb[p * cols];
            const double* grow = &gy[i * cols];
            for (std::size_t j = 0; j < cols; ++j) gbrow[j] += av * grow[j];
          }
      }
      break;
    }

    case OpKind::kMatMulNT: {
      Node& a = input(0);
      Node& b = input(1);
      const std::size_t m = a.shape[0], k = a.shape[1], rows_b = b.shape[0];
      if (wants(0)) {
        auto& ga = grad_buffer(a);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < rows_b; ++j) {
            const double g = gy[i * rows_b + j];
            const double* brow = &b.value[j * k];
            double* garow = &ga[i * k];
            for (std::size_t p = 0; p < k; ++p) garow[p] += g * brow[p];
          }
      }
      if (wants(1)) {
        auto& gb = grad_buffer(b);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < rows_b; ++j) {
            const double g = gy[i * rows_b + j];
            const double* arow = &a.value[i * k];
            double* gbrow = &gb[j * k];
            for (std::size_t p = 0; p < k; ++p) gbrow[p] += g * arow[p];
          }
      }
      break;
    }

    case OpKind::kTranspose: {
      Node& a = input(0);
      if (!wants(0)) break;
      auto& ga = grad_buffer(a);
      const std::size_t r = a.shape[0], c = a.shape[1];
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += gy[j * r + i];
      break;
    }

    case OpKind::kAdd:
    case OpKind::kSub: {
      const double sign_b = n.op == OpKind::kAdd ? 1.0 : -1.0;
      if (wants(0)) {
        auto& ga = grad_buffer(input(0));
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
      }
      if (wants(1)) {
        auto& gb = grad_buffer(input(1));
        for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += sign_b * gy[i];
      }
      break;
    }

    case OpKind::kMul: {
      Node& a = input(0);
      Node& b = input(1);
      if (wants(0)) {
        auto& ga = grad_buffer(a);
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * b.value[i];
      }
      if (wants(1)) {
        auto& gb = grad_buffer(b);
        for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * a.value[i];
      }
      break;
    }

    case OpKind::kScale: {
      if (!wants(0)) break;
      auto& ga = grad_buffer(input(0));
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += n.scalar * gy[i];
      break;
    }

    case OpKind::kAddRow: {
      const std::size_t cols = input(1).value.size();
      if (wants(0)) {
        auto& gx = grad_buffer(input(0));
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
      }
      if (wants(1)) {
        auto& gb = grad_buffer(input(1));
        for (std::size_t i = 0; i < gy.size(); ++i) gb[i % cols] += gy[i];
      }
      break;
    }

    case OpKind::kTanh: {
      auto& gx = grad_buffer(input(0));
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * (1.0 - n.value[i] * n.value[i]);
      break;
    }
    case OpKind::kSigmoid: {
      auto& gx = grad_buffer(input(0));
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * n.value[i] * (1.0 - n.value[i]);
      break;
    }
    case OpKind::kRelu: {
      Node& x = input(0);
      auto& gx = grad_buffer(x);
      for (std::size_t i = 0; i < gy.size(); ++i)
        if (x.value[i] > 0.0) gx[i] += gy[i];
      break;
    }

    case OpKind::kSoftmax: {
      auto& gx = grad_buffer(input(0));
      const auto s = split_at(n.shape, n.axis);
      for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t in = 0; in < s.inner; ++in) {
          const std::size_t base = o * s.n * s.inner + in;
          double dot = 0.0;
          for (std::size_t j = 0; j < s.n; ++j) dot += gy[base + j * s.inner] * n.value[base + j * s.inner];
          for (std::size_t j = 0; j < s.n; ++j) {
            const std::size_t idx = base + j * s.inner;
            gx[idx] += n.value[idx] * (gy[idx] - dot);
          }
        }
      break;
    }

    case OpKind::kLayerNorm: {
      // saved = [x̂ (numel), 1/σ (rows)]
      Node& gain = input(1);
      const std::size_t d = n.shape.back();
      const std::size_t rows = n.value.size() / d;
      const double* xhat = n.saved.data();
      const double* inv_std = n.saved.data() + n.value.size();
      if (wants(1)) {
        auto& gg = grad_buffer(gain);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < d; ++j) gg[j] += gy[r * d + j] * xhat[r * d + j];
      }
      if (wants(2)) {
        auto& gb = grad_buffer(input(2));
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < d; ++j) gb[j] += gy[r * d + j];
      }
      if (wants(0)) {
        auto& gx = grad_buffer(input(0));
        for (std::size_t r = 0; r < rows; ++r) {
          double mean_g = 0.0, mean_gx = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            const double g = gy[r * d + j] * gain.value[j];
            mean_g += g;
            mean_gx += g * xhat[r * d + j];
          }
          mean_g /= static_cast<double>(d);
          mean_gx /= static_cast<double>(d);
          for (std::size_t j = 0; j < d; ++j) {
            const double g = gy[r * d + j] * gain.value[j];
            gx[r * d + j] += inv_std[r] * (g - mean_g - xhat[r * d + j] * mean_gx);
          }
        }
      }
      break;
    }

    case OpKind::kConcat: {
      const auto s = split_at(n.shape, n.axis);
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        Node& part = input(k);
        const std::size_t chunk = part.shape[n.axis] * s.inner;
        if (part.requires_grad) {
          auto& gp = grad_buffer(part);
          for (std::size_t o = 0; o < s.outer; ++o)
            for (std::size_t i = 0; i < chunk; ++i) gp[o * chunk + i] += gy[o * s.n * s.inner + offset + i];
        }
        offset += chunk;
      }
      break;
    }

    case OpKind::kSlice: {
      Node& x = input(0);
      auto& gx = grad_buffer(x);
      const std::size_t width = x.shape.back();
      const std::size_t out_w = n.shape.back();
      const std::size_t begin = n.axis;
      const std::size_t rows = n.value.size() / out_w;
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < out_w; ++j) gx[r * width + begin + j] += gy[r * out_w + j];
      break;
    }

    case OpKind::kMeanOuter: {
      auto& gx = grad_buffer(input(0));
      const std::size_t c = n.value.size();
      const std::size_t rows = gx.size() / c;
      const double w = 1.0 / static_cast<double>(rows);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < c; ++j) gx[r * c + j] += w * gy[j];
      break;
    }

    case OpKind::kEmbedLookup: {
      auto& gt = grad_buffer(input(0));
      const std::size_t d = n.shape.back();
      for (std::size_t r = 0; r < n.index.size(); ++r)
        for (std::size_t j = 0; j < d; ++j) gt[n.index[r] * d + j] += gy[r * d + j];
      break;
    }

    case OpKind::kReshape: {
      auto& gx = grad_buffer(input(0));
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
      break;
    }

    case OpKind::kSum: {
      auto& gx = grad_buffer(input(0));
      for (double& g : gx) g += gy[0];
      break;
    }

    case OpKind::kNll: {
      Node& p = input(0);
      auto& gp = grad_buffer(p);
      const std::size_t t = n.index[0];
      if (p.value[t] > n.scalar) gp[t] += -gy[0] / p.value[t];
      break;
    }

    case OpKind::kBce: {
      Node& p = input(0);
      auto& gp = grad_buffer(p);
      const double eps = n.saved[0];
      const double prob = p.value[0];
      if (prob > eps && prob < 1.0 - eps) gp[0] += gy[0] * (-n.scalar / prob + (1.0 - n.scalar) / (1.0 - prob));
      break;
    }

    case OpKind::kSquaredError: {
      Node& p = input(0);
      auto& gp = grad_buffer(p);
      for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += gy[0] * 2.0 * (p.value[i] - n.saved[i]);
      break;
    }
  }
}

}  // namespace hcm::ad
