#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace hcm::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// Raised when operand shapes are incompatible; the message names both shapes.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an API precondition that is not about shapes is violated.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A named trainable array. Owned by a ParameterStore; graphs hold copies of
/// the value and write gradients back through accumulate_parameter_grads().
class Parameter {
 public:
  Parameter(std::string name, Shape shape);

  const std::string& name() const { return name_; }
  const Shape& shape() const { return shape_; }
  std::size_t size() const { return value_.size(); }

  std::vector<double>& value() { return value_; }
  const std::vector<double>& value() const { return value_; }
  std::vector<double>& grad() { return grad_; }
  const std::vector<double>& grad() const { return grad_; }

  void zero_grad();

 private:
  std::string name_;
  Shape shape_;
  std::vector<double> value_;
  std::vector<double> grad_;
};

class Graph;

/// Handle to an immutable value recorded in a Graph.
class Tensor {
 public:
  Tensor() = default;

  bool valid() const { return graph_ != nullptr; }
  Graph& graph() const;
  int id() const { return id_; }

  const Shape& shape() const;
  std::size_t size() const;
  std::span<const double> data() const;
  double operator[](std::size_t i) const { return data()[i]; }
  /// Value of a single-element tensor.
  double item() const;
  bool requires_grad() const;

 private:
  friend class Graph;
  Tensor(Graph* graph, int id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  int id_ = -1;
};

enum class OpKind : std::uint8_t {
  kConstant,
  kVariable,
  kParameter,
  kMatMul,
  kMatMulNT,
  kTranspose,
  kAdd,
  kSub,
  kMul,
  kScale,
  kAddRow,
  kTanh,
  kSigmoid,
  kRelu,
  kSoftmax,
  kLayerNorm,
  kConcat,
  kSlice,
  kMeanOuter,
  kEmbedLookup,
  kReshape,
  kSum,
  kNll,
  kBce,
  kSquaredError,
};

const char* op_name(OpKind kind);

/// Append-only computation record. Every input id precedes its consumer, so a
/// single reverse sweep visits each node exactly once.
class Graph {
 public:
  struct Node {
    OpKind op = OpKind::kConstant;
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    std::vector<int> inputs;
    std::vector<double> saved;
    std::vector<std::size_t> index;
    double scalar = 0.0;
    std::size_t axis = 0;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Tensor constant(Shape shape, std::vector<double> value);
  Tensor constant(Shape shape, std::span<const double> value);
  /// Leaf that receives a gradient but is not tied to a Parameter.
  Tensor variable(Shape shape, std::vector<double> value);
  /// Leaf bound to a parameter. Repeated calls within one graph return the
  /// same node so gradients from every use accumulate in one place.
  Tensor param(Parameter& p);

  /// Reverse sweep from a scalar loss. Gradients accumulate in node order,
  /// last node first, which makes the result deterministic.
  void backward(Tensor loss);
  std::span<const double> grad(Tensor t) const;
  /// Adds every parameter leaf's gradient into its Parameter::grad().
  void accumulate_parameter_grads();

  void clear();
  std::size_t size() const { return nodes_.size(); }

  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

  /// Records a new node; used by the op implementations.
  Tensor emit(Node node);

 private:
  void backward_node(Node& n);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
  bool backward_done_ = false;
};

}  // namespace hcm::ad
