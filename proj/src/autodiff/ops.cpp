#include "hcm/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hcm::ad {
namespace {

using Node = Graph::Node;

Graph& same_graph(Tensor a, Tensor b) {
  if (&a.graph() != &b.graph()) throw ContractError("operands belong to different graphs");
  return a.graph();
}

[[noreturn]] void mismatch(const char* op, Tensor a, Tensor b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + to_string(a.shape()) + " and " +
                       to_string(b.shape()));
}

void require_rank2(const char* op, Tensor a) {
  if (a.shape().size() != 2)
    throw DimensionError(std::string(op) + ": expected a matrix, got shape " + to_string(a.shape()));
}

Node make(OpKind op, Shape shape, std::initializer_list<Tensor> inputs) {
  Node n;
  n.op = op;
  n.shape = std::move(shape);
  for (const auto& t : inputs) n.inputs.push_back(t.id());
  return n;
}

template <typename F>
Tensor unary(OpKind op, Tensor x, F f) {
  Node n = make(op, x.shape(), {x});
  auto v = x.data();
  n.value.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) n.value[i] = f(v[i]);
  return x.graph().emit(std::move(n));
}

}  // namespace

Tensor matmul(Tensor a, Tensor b) {
  Graph& g = same_graph(a, b);
  require_rank2("matmul", a);
  require_rank2("matmul", b);
  if (a.shape()[1] != b.shape()[0]) mismatch("matmul", a, b);
  const std::size_t m = a.shape()[0], k = a.shape()[1], cols = b.shape()[1];
  Node n = make(OpKind::kMatMul, {m, cols}, {a, b});
  n.value.assign(m * cols, 0.0);
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* out = &n.value[i * cols];
    for (std::size_t p = 0; p < k; ++p) {
      const double x = av[i * k + p];
      if (x == 0.0) continue;
      const double* brow = &bv[p * cols];
      for (std::size_t j = 0; j < cols; ++j) out[j] += x * brow[j];
    }
  }
  return g.emit(std::move(n));
}

Tensor matmul_nt(Tensor a, Tensor b) {
  Graph& g = same_graph(a, b);
  require_rank2("matmul_nt", a);
  require_rank2("matmul_nt", b);
  if (a.shape()[1] != b.shape()[1]) mismatch("matmul_nt", a, b);
  const std::size_t m = a.shape()[0], k = a.shape()[1], rows_b = b.shape()[0];
  Node n = make(OpKind::kMatMulNT, {m, rows_b}, {a, b});
  n.value.resize(m * rows_b);
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < rows_b; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += av[i * k + p] * bv[j * k + p];
      n.value[i * rows_b + j] = acc;
    }
  return g.emit(std::move(n));
}

Tensor transpose(Tensor a) {
  require_rank2("transpose", a);
  const std::size_t r = a.shape()[0], c = a.shape()[1];
  Node n = make(OpKind::kTranspose, {c, r}, {a});
  n.value.resize(r * c);
  auto av = a.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) n.value[j * r + i] = av[i * c + j];
  return a.graph().emit(std::move(n));
}

namespace {
template <typename F>
Tensor binary(OpKind op, const char* name, Tensor a, Tensor b, F f) {
  Graph& g = same_graph(a, b);
  if (a.shape() != b.shape()) mismatch(name, a, b);
  Node n = make(op, a.shape(), {a, b});
  auto av = a.data();
  auto bv = b.data();
  n.value.resize(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) n.value[i] = f(av[i], bv[i]);
  return g.emit(std::move(n));
}
}  // namespace

Tensor add(Tensor a, Tensor b) { return binary(OpKind::kAdd, "add", a, b, [](double x, double y) { return x + y; }); }
Tensor sub(Tensor a, Tensor b) { return binary(OpKind::kSub, "sub", a, b, [](double x, double y) { return x - y; }); }
Tensor mul(Tensor a, Tensor b) { return binary(OpKind::kMul, "mul", a, b, [](double x, double y) { return x * y; }); }

Tensor scale(Tensor a, double factor) {
  Tensor out = unary(OpKind::kScale, a, [factor](double x) { return factor * x; });
  out.graph().node(out.id()).scalar = factor;
  return out;
}

Tensor add_row(Tensor x, Tensor b) {
  Graph& g = same_graph(x, b);
  const std::size_t cols = x.shape().empty() ? 0 : x.shape().back();
  if (b.size() != cols || cols == 0) mismatch("add_row", x, b);
  Node n = make(OpKind::kAddRow, x.shape(), {x, b});
  auto xv = x.data();
  auto bv = b.data();
  n.value.resize(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) n.value[i] = xv[i] + bv[i % cols];
  return g.emit(std::move(n));
}

Tensor linear(Tensor x, Tensor w, Tensor b) { return add_row(matmul(x, w), b); }

Tensor tanh(Tensor x) { return unary(OpKind::kTanh, x, [](double v) { return std::tanh(v); }); }

Tensor sigmoid(Tensor x) {
  return unary(OpKind::kSigmoid, x, [](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

Tensor relu(Tensor x) { return unary(OpKind::kRelu, x, [](double v) { return v > 0.0 ? v : 0.0; }); }

Tensor softmax(Tensor x, std::size_t axis) {
  const Shape& shape = x.shape();
  if (axis >= shape.size() || shape[axis] == 0)
    throw DimensionError("softmax: invalid axis " + std::to_string(axis) + " for shape " + to_string(shape));
  std::size_t outer = 1, inner = 1;
  const std::size_t len = shape[axis];
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  Node n = make(OpKind::kSoftmax, shape, {x});
  n.axis = axis;
  auto xv = x.data();
  n.value.resize(xv.size());
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      double mx = xv[base];
      for (std::size_t j = 1; j < len; ++j) mx = std::max(mx, xv[base + j * inner]);
      double total = 0.0;
      for (std::size_t j = 0; j < len; ++j) {
        const double e = std::exp(xv[base + j * inner] - mx);
        n.value[base + j * inner] = e;
        total += e;
      }
      for (std::size_t j = 0; j < len; ++j) n.value[base + j * inner] /= total;
    }
  return x.graph().emit(std::move(n));
}

Tensor softmax(Tensor x) {
  if (x.shape().empty()) throw DimensionError("softmax: scalar input");
  return softmax(x, x.shape().size() - 1);
}

Tensor layer_norm(Tensor x, Tensor gain, Tensor bias, double eps) {
  Graph& g = same_graph(x, gain);
  same_graph(x, bias);
  if (x.shape().empty()) throw DimensionError("layer_norm: scalar input");
  const std::size_t d = x.shape().back();
  if (d < 2) throw DimensionError("layer_norm: normalized width must be at least 2, got shape " + to_string(x.shape()));
  if (gain.size() != d) mismatch("layer_norm", x, gain);
  if (bias.size() != d) mismatch("layer_norm", x, bias);
  const std::size_t total = x.size();
  const std::size_t rows = total / d;
  Node n = make(OpKind::kLayerNorm, x.shape(), {x, gain, bias});
  n.value.resize(total);
  n.saved.resize(total + rows);
  auto xv = x.data();
  auto gv = gain.data();
  auto bv = bias.data();
  for (std::size_t r = 0; r < rows; ++r) {
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += xv[r * d + j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = xv[r * d + j] - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double inv_std = 1.0 / std::sqrt(var + eps);
    n.saved[total + r] = inv_std;
    for (std::size_t j = 0; j < d; ++j) {
      const double xh = (xv[r * d + j] - mean) * inv_std;
      n.saved[r * d + j] = xh;
      n.value[r * d + j] = gv[j] * xh + bv[j];
    }
  }
  return g.emit(std::move(n));
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no operands");
  Graph& g = parts[0].graph();
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) throw DimensionError("concat: axis out of range for shape " + to_string(first));
  Shape out = first;
  out[axis] = 0;
  for (const auto& p : parts) {
    same_graph(parts[0], p);
    const Shape& s = p.shape();
    if (s.size() != first.size()) mismatch("concat", parts[0], p);
    for (std::size_t i = 0; i < s.size(); ++i)
      if (i != axis && s[i] != first[i]) mismatch("concat", parts[0], p);
    out[axis] += s[axis];
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= out[i];
  for (std::size_t i = axis + 1; i < out.size(); ++i) inner *= out[i];
  Node n;
  n.op = OpKind::kConcat;
  n.shape = out;
  n.axis = axis;
  n.value.resize(numel(out));
  std::size_t offset = 0;
  const std::size_t row = out[axis] * inner;
  for (const auto& p : parts) {
    n.inputs.push_back(p.id());
    const std::size_t chunk = p.shape()[axis] * inner;
    auto pv = p.data();
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(pv.begin() + static_cast<std::ptrdiff_t>(o * chunk), chunk,
                  n.value.begin() + static_cast<std::ptrdiff_t>(o * row + offset));
    offset += chunk;
  }
  return g.emit(std::move(n));
}

Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

Tensor slice_last(Tensor x, std::size_t begin, std::size_t end) {
  if (x.shape().empty()) throw DimensionError("slice: scalar input");
  const std::size_t width = x.shape().back();
  if (begin >= end || end > width)
    throw DimensionError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") outside shape " + to_string(x.shape()));
  Shape out = x.shape();
  out.back() = end - begin;
  Node n = make(OpKind::kSlice, out, {x});
  n.axis = begin;
  const std::size_t rows = x.size() / width;
  auto xv = x.data();
  n.value.resize(rows * (end - begin));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = begin; j < end; ++j) n.value[r * (end - begin) + (j - begin)] = xv[r * width + j];
  return x.graph().emit(std::move(n));
}

Tensor mean_pool_spatial(Tensor x) {
  if (x.shape().size() < 2) throw DimensionError("mean_pool: need at least rank 2, got " + to_string(x.shape()));
  const std::size_t c = x.shape().back();
  const std::size_t rows = x.size() / c;
  Node n = make(OpKind::kMeanOuter, {1, c}, {x});
  n.value.assign(c, 0.0);
  auto xv = x.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < c; ++j) n.value[j] += xv[r * c + j];
  for (auto& v : n.value) v /= static_cast<double>(rows);
  return x.graph().emit(std::move(n));
}

Tensor mean_rows(Tensor x) { return mean_pool_spatial(x); }

Tensor embed_lookup(Tensor table, std::span<const std::size_t> ids) {
  require_rank2("embed_lookup", table);
  const std::size_t vocab = table.shape()[0], d = table.shape()[1];
  Node n = make(OpKind::kEmbedLookup, {ids.size(), d}, {table});
  n.index.assign(ids.begin(), ids.end());
  n.value.resize(ids.size() * d);
  auto tv = table.data();
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= vocab)
      throw DimensionError("embed_lookup: id " + std::to_string(ids[r]) + " outside table of shape " +
                           to_string(table.shape()));
    std::copy_n(tv.begin() + static_cast<std::ptrdiff_t>(ids[r] * d), d,
                n.value.begin() + static_cast<std::ptrdiff_t>(r * d));
  }
  return table.graph().emit(std::move(n));
}

Tensor reshape(Tensor x, Shape shape) {
  if (numel(shape) != x.size())
    throw DimensionError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  Node n = make(OpKind::kReshape, std::move(shape), {x});
  auto xv = x.data();
  n.value.assign(xv.begin(), xv.end());
  return x.graph().emit(std::move(n));
}

Tensor sum(Tensor x) {
  Node n = make(OpKind::kSum, {}, {x});
  double s = 0.0;
  for (double v : x.data()) s += v;
  n.value = {s};
  return x.graph().emit(std::move(n));
}

Tensor nll(Tensor probs, std::size_t target, double eps) {
  if (target >= probs.size())
    throw DimensionError("nll: target " + std::to_string(target) + " outside shape " + to_string(probs.shape()));
  Node n = make(OpKind::kNll, {}, {probs});
  n.index = {target};
  n.scalar = eps;
  n.value = {-std::log(std::max(probs.data()[target], eps))};
  return probs.graph().emit(std::move(n));
}

Tensor bce(Tensor prob, double target, double eps) {
  if (prob.size() != 1) throw DimensionError("bce: expected a single probability, got " + to_string(prob.shape()));
  Node n = make(OpKind::kBce, {}, {prob});
  n.scalar = target;
  n.saved = {eps};
  const double p = std::clamp(prob.data()[0], eps, 1.0 - eps);
  n.value = {-(target * std::log(p) + (1.0 - target) * std::log(1.0 - p))};
  return prob.graph().emit(std::move(n));
}

Tensor squared_error(Tensor pred, std::span<const double> target) {
  if (pred.size() != target.size())
    throw DimensionError("squared_error: prediction " + to_string(pred.shape()) + " vs target of " +
                         std::to_string(target.size()) + " values");
  Node n = make(OpKind::kSquaredError, {}, {pred});
  n.saved.assign(target.begin(), target.end());
  double s = 0.0;
  auto pv = pred.data();
  for (std::size_t i = 0; i < pv.size(); ++i) s += (pv[i] - target[i]) * (pv[i] - target[i]);
  n.value = {s};
  return pred.graph().emit(std::move(n));
}

}  // namespace hcm::ad
