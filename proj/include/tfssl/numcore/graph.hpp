#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tfssl/numcore/tensor.hpp"

namespace tfssl::numcore {

enum class NodeKind { kInput, kParam, kConstant, kOp };

struct Node;
using NodeFn = std::function<void(Node&)>;

struct Node {
  NodeKind kind = NodeKind::kOp;
  std::string op;    // primitive id for kOp nodes
  std::string name;  // for inputs and params
  std::size_t id = 0;
  bool requires_grad = false;
  bool save_aux = true;  // false when nothing will run backward
  std::vector<std::shared_ptr<Node>> inputs;
  Tensor value;
  Tensor grad;  // empty until something flows into it
  Tensor aux;   // intermediates the primitive saves for its backward
  NodeFn forward;
  NodeFn backward;

  const Tensor& in(std::size_t i) const { return inputs[i]->value; }
  // Gradient slot of input i, zero-initialized on first use. Callers must
  // check inputs[i]->requires_grad first.
  Tensor& in_grad(std::size_t i);
};

class Graph;

// Handle to a node. Cheap to copy.
class Var {
 public:
  Var() = default;
  Var(std::shared_ptr<Node> node, Graph* graph)
      : node_(std::move(node)), graph_(graph) {}

  const Tensor& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t dim(std::size_t axis) const { return node_->value.dim(axis); }
  Graph& graph() const { return *graph_; }
  Node& node() const { return *node_; }
  const std::shared_ptr<Node>& ptr() const { return node_; }
  explicit operator bool() const { return node_ != nullptr; }

 private:
  std::shared_ptr<Node> node_;
  Graph* graph_ = nullptr;
};

// Reverse-mode autodiff tape. Nodes are evaluated as they are added; the
// insertion order is the topological order. A graph built with
// record = false keeps no tape: intermediates are freed as soon as their
// handles go away, and Backward/Forward are unavailable.
class Graph {
 public:
  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var Input(const std::string& name, Tensor value);
  Var Param(const std::string& name, Tensor value);
  Var Constant(Tensor value);

  // Adds a primitive node, runs its forward immediately and checks the
  // result for NaN/Inf.
  Var Apply(std::string op, std::vector<Var> inputs, NodeFn forward, NodeFn backward);

  void MarkOutput(const std::string& name, Var v);

  // Re-evaluates every node in insertion order with new input values and
  // returns the marked outputs.
  std::map<std::string, Tensor> Forward(const std::map<std::string, Tensor>& inputs);

  // Gradients of a scalar loss with respect to every parameter, by name.
  // Parameters the loss does not depend on get zero gradients.
  std::map<std::string, Tensor> Backward(const Var& loss);

  bool recording() const { return record_; }
  std::size_t num_nodes() const { return tape_.size(); }
  const std::vector<std::shared_ptr<Node>>& nodes() const { return tape_; }
  const std::vector<std::shared_ptr<Node>>& params() const { return params_; }

 private:
  Var AddLeaf(NodeKind kind, const std::string& name, Tensor value, bool requires_grad);

  bool record_;
  std::size_t next_id_ = 0;
  std::vector<std::shared_ptr<Node>> tape_;
  std::vector<std::shared_ptr<Node>> params_;
  std::map<std::string, std::shared_ptr<Node>> inputs_;
  std::map<std::string, std::shared_ptr<Node>> outputs_;
};

}  // namespace tfssl::numcore
