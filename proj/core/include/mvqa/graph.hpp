#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mvqa/tensor.hpp"

namespace mvqa {

// A learnable tensor that outlives any single graph.
struct Parameter {
  std::string name;
  Tensor value;
  bool trainable = true;
  // Included in the L2 penalty.
  bool regularized = true;
  // Row 0 is the padding embedding: never regularized, never updated.
  bool pad_row = false;
};

class Graph;

// A tensor that carries a node id in a Graph.
class Var {
 public:
  Var() = default;

  bool valid() const { return graph_ != nullptr; }
  Graph& graph() const { return *graph_; }
  int id() const { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Graph;
  Var(Graph* graph, int id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  int id_ = -1;
};

// Gradients produced by Graph::backward, keyed by leaf node.
class GradientStore {
 public:
  const Tensor* find(Var leaf) const;
  const Tensor* find(const Parameter& param) const;
  std::size_t size() const { return by_node_.size(); }

  // Calls fn(Parameter&, const Tensor& grad) for every reached parameter.
  template <typename Fn>
  void for_each_parameter(Fn&& fn) const {
    for (const auto& [param, node] : params_) fn(*param, by_node_.at(node));
  }

 private:
  friend class Graph;
  std::unordered_map<int, Tensor> by_node_;
  std::vector<std::pair<Parameter*, int>> params_;
};

// View handed to an operation's backward function.
class BackwardContext {
 public:
  const Tensor& grad() const { return *grad_; }
  const Tensor& output() const;
  const Tensor& input(std::size_t i) const;
  // Accumulator for input i, or nullptr when input i needs no gradient.
  Tensor* input_grad(std::size_t i);

 private:
  friend class Graph;
  BackwardContext(Graph& g, int node, const Tensor* grad)
      : graph_(g), node_(node), grad_(grad) {}

  Graph& graph_;
  int node_;
  const Tensor* grad_;
};

// Append-only tape. Built fresh for every forward pass.
class Graph {
 public:
  using BackwardFn = std::function<void(BackwardContext&)>;

  explicit Graph(bool training = false, std::uint64_t seed = 0);
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  // Differentiable leaf owned by the graph.
  Var variable(Tensor value);
  // Differentiable leaf aliasing param.value; one node per parameter.
  Var parameter(Parameter& param);

  // Appends an operation node. `backward` may be empty for
  // non-differentiable outputs.
  Var record(std::string_view op, Tensor value, std::vector<Var> inputs,
             BackwardFn backward);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id_].requires_grad; }
  std::string_view op(Var v) const { return nodes_[v.id_].op; }
  std::size_t size() const { return nodes_.size(); }
  // Parameters with a leaf in this graph, in creation order.
  std::vector<Parameter*> parameters() const;

  bool training() const { return training_; }
  std::mt19937_64& rng() { return rng_; }

  // Reverse sweep from a scalar sink.
  GradientStore backward(Var sink);

 private:
  friend class BackwardContext;

  struct Node {
    std::string_view op;
    std::vector<int> inputs;
    Tensor value;
    const Tensor* alias = nullptr;
    Parameter* param = nullptr;
    bool leaf = false;
    bool requires_grad = false;
    BackwardFn backward;
  };

  const Tensor& node_value(int id) const {
    const Node& n = nodes_[id];
    return n.alias ? *n.alias : n.value;
  }
  void check_owned(Var v) const;

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
  std::vector<Tensor>* grads_ = nullptr;
  bool training_;
  std::mt19937_64 rng_;
};

}  // namespace mvqa
