#pragma once

#include <map>
#include <memory>
#include <string>

#include "tfssl/numcore/graph.hpp"

namespace tfssl::numcore {

// Binds named tensors from a parameter store into a graph, registering each
// name at most once per graph. Sub() scopes share the same registry.
class ParamScope {
 public:
  ParamScope(Graph& graph, const TensorMap& store, std::string prefix = "")
      : graph_(&graph),
        store_(&store),
        prefix_(std::move(prefix)),
        bound_(std::make_shared<std::map<std::string, Var>>()) {}

  Var operator()(const std::string& name) const;
  ParamScope Sub(const std::string& prefix) const;
  Graph& graph() const { return *graph_; }
  const std::string& prefix() const { return prefix_; }

 private:
  Graph* graph_;
  const TensorMap* store_;
  std::string prefix_;
  std::shared_ptr<std::map<std::string, Var>> bound_;
};

}  // namespace tfssl::numcore
