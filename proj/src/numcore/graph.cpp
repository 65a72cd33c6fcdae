#include "tfssl/numcore/graph.hpp"

#include "tfssl/error.hpp"
#include "tfssl/numcore/params.hpp"

namespace tfssl::numcore {

Tensor& Node::in_grad(std::size_t i) {
  Node& n = *inputs[i];
  if (n.grad.size() != n.value.size() || n.grad.shape() != n.value.shape()) {
    n.grad = Tensor(n.value.shape(), 0.0);
  }
  return n.grad;
}

Var Graph::AddLeaf(NodeKind kind, const std::string& name, Tensor value,
                   bool requires_grad) {
  Require(value.AllFinite(), ErrorKind::kNumeric, "non-finite value for leaf '" + name + "'");
  auto node = std::make_shared<Node>();
  node->kind = kind;
  node->name = name;
  node->id = next_id_++;
  node->requires_grad = requires_grad && record_;
  node->value = std::move(value);
  if (record_) tape_.push_back(node);
  return Var(node, this);
}

Var Graph::Input(const std::string& name, Tensor value) {
  Require(!inputs_.contains(name), ErrorKind::kInvalidArgument,
          "duplicate graph input '" + name + "'");
  Var v = AddLeaf(NodeKind::kInput, name, std::move(value), false);
  if (record_) inputs_[name] = v.ptr();
  return v;
}

Var Graph::Param(const std::string& name, Tensor value) {
  Var v = AddLeaf(NodeKind::kParam, name, std::move(value), true);
  params_.push_back(v.ptr());
  return v;
}

Var Graph::Constant(Tensor value) {
  return AddLeaf(NodeKind::kConstant, "", std::move(value), false);
}

Var Graph::Apply(std::string op, std::vector<Var> inputs, NodeFn forward, NodeFn backward) {
  auto node = std::make_shared<Node>();
  node->kind = NodeKind::kOp;
  node->op = std::move(op);
  node->id = next_id_++;
  node->save_aux = record_;
  node->inputs.reserve(inputs.size());
  for (const Var& v : inputs) {
    Require(static_cast<bool>(v), ErrorKind::kInvalidArgument, "null input to " + node->op);
    Require(&v.graph() == this, ErrorKind::kInvalidArgument,
            "input to " + node->op + " belongs to another graph");
    node->requires_grad = node->requires_grad || v.node().requires_grad;
    node->inputs.push_back(v.ptr());
  }
  forward(*node);
  Require(node->value.AllFinite(), ErrorKind::kNumeric,
          "non-finite output from primitive '" + node->op + "'");
  if (record_) {
    node->forward = std::move(forward);
    node->backward = std::move(backward);
    tape_.push_back(node);
  } else {
    node->inputs.clear();
    node->aux = Tensor();
  }
  return Var(node, this);
}

void Graph::MarkOutput(const std::string& name, Var v) { outputs_[name] = v.ptr(); }

std::map<std::string, Tensor> Graph::Forward(const std::map<std::string, Tensor>& inputs) {
  Require(record_, ErrorKind::kInvalidArgument, "Forward needs a recording graph");
  for (const auto& [name, node] : inputs_) {
    auto it = inputs.find(name);
    Require(it != inputs.end(), ErrorKind::kInvalidArgument, "missing graph input '" + name + "'");
    Require(it->second.shape() == node->value.shape(), ErrorKind::kShape,
            "input '" + name + "' has shape " + ShapeString(it->second.shape()) +
                ", expected " + ShapeString(node->value.shape()));
  }
  for (const auto& node : tape_) {
    node->grad = Tensor();
    switch (node->kind) {
      case NodeKind::kInput:
        node->value = inputs.at(node->name);
        Require(node->value.AllFinite(), ErrorKind::kNumeric,
                "non-finite value for input '" + node->name + "'");
        break;
      case NodeKind::kOp:
        node->forward(*node);
        Require(node->value.AllFinite(), ErrorKind::kNumeric,
                "non-finite output from primitive '" + node->op + "'");
        break;
      default:
        break;
    }
  }
  std::map<std::string, Tensor> out;
  for (const auto& [name, node] : outputs_) out[name] = node->value;
  return out;
}

std::map<std::string, Tensor> Graph::Backward(const Var& loss) {
  Require(record_, ErrorKind::kInvalidArgument, "Backward needs a recording graph");
  Require(loss.value().size() == 1, ErrorKind::kShape,
          "loss must be scalar, got shape " + ShapeString(loss.shape()));
  for (const auto& node : tape_) node->grad = Tensor();
  loss.node().grad = Tensor(loss.shape(), 1.0);
  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) {
    Node& n = **it;
    if (n.kind != NodeKind::kOp || !n.requires_grad || n.grad.size() == 0) continue;
    Require(n.grad.AllFinite(), ErrorKind::kNumeric,
            "non-finite gradient at primitive '" + n.op + "'");
    n.backward(n);
  }
  std::map<std::string, Tensor> grads;
  for (const auto& p : params_) {
    Tensor g = p->grad.size() == p->value.size() ? p->grad : Tensor(p->value.shape(), 0.0);
    Require(g.AllFinite(), ErrorKind::kNumeric, "non-finite gradient for '" + p->name + "'");
    auto [it, inserted] = grads.emplace(p->name, g);
    if (!inserted) {
      // The same named parameter registered twice (e.g. tied weights).
      for (std::size_t i = 0; i < g.size(); ++i) it->second[i] += g[i];
    }
  }
  return grads;
}

Var ParamScope::operator()(const std::string& name) const {
  const std::string full = prefix_ + name;
  auto it = bound_->find(full);
  if (it != bound_->end()) return it->second;
  auto sit = store_->find(full);
  Require(sit != store_->end(), ErrorKind::kData, "missing parameter '" + full + "'");
  Var v = graph_->Param(full, sit->second);
  bound_->emplace(full, v);
  return v;
}

ParamScope ParamScope::Sub(const std::string& prefix) const {
  ParamScope s = *this;
  s.prefix_ = prefix_ + prefix;
  return s;
}

}  // namespace tfssl::numcore
