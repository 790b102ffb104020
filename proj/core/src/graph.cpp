#include "mvqa/graph.hpp"

#include "mvqa/errors.hpp"

namespace mvqa {

const Tensor& Var::value() const {
  if (!graph_) throw ContractViolation("value() on an unbound Var");
  return graph_->value(*this);
}

const Tensor* GradientStore::find(Var leaf) const {
  auto it = by_node_.find(leaf.id());
  return it == by_node_.end() ? nullptr : &it->second;
}

const Tensor* GradientStore::find(const Parameter& param) const {
  for (const auto& [p, node] : params_)
    if (p == &param) return &by_node_.at(node);
  return nullptr;
}

const Tensor& BackwardContext::output() const {
  return graph_.node_value(node_);
}

const Tensor& BackwardContext::input(std::size_t i) const {
  return graph_.node_value(graph_.nodes_[node_].inputs[i]);
}

Tensor* BackwardContext::input_grad(std::size_t i) {
  int in = graph_.nodes_[node_].inputs[i];
  if (!graph_.nodes_[in].requires_grad) return nullptr;
  Tensor& g = (*graph_.grads_)[in];
  if (g.empty()) g = Tensor(graph_.node_value(in).shape());
  return &g;
}

Graph::Graph(bool training, std::uint64_t seed)
    : training_(training), rng_(seed) {}

Var Graph::constant(Tensor value) {
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  n.leaf = true;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Graph::variable(Tensor value) {
  Node n;
  n.op = "variable";
  n.value = std::move(value);
  n.leaf = true;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Graph::parameter(Parameter& param) {
  auto it = param_nodes_.find(&param);
  if (it != param_nodes_.end()) return Var(this, it->second);
  Node n;
  n.op = "parameter";
  n.alias = &param.value;
  n.param = &param;
  n.leaf = true;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  int id = static_cast<int>(nodes_.size() - 1);
  param_nodes_.emplace(&param, id);
  return Var(this, id);
}

std::vector<Parameter*> Graph::parameters() const {
  std::vector<Parameter*> out;
  for (const Node& n : nodes_)
    if (n.param) out.push_back(n.param);
  return out;
}

void Graph::check_owned(Var v) const {
  if (v.graph_ != this || v.id_ < 0 ||
      static_cast<std::size_t>(v.id_) >= nodes_.size())
    throw ContractViolation("Var does not belong to this graph");
}

Var Graph::record(std::string_view op, Tensor value, std::vector<Var> inputs,
                  BackwardFn backward) {
  Node n;
  n.op = op;
  n.value = std::move(value);
  n.inputs.reserve(inputs.size());
  for (const Var& v : inputs) {
    check_owned(v);
    n.inputs.push_back(v.id_);
    n.requires_grad = n.requires_grad || nodes_[v.id_].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

const Tensor& Graph::value(Var v) const {
  check_owned(v);
  return node_value(v.id_);
}

GradientStore Graph::backward(Var sink) {
  check_owned(sink);
  if (value(sink).size() != 1)
    throw ContractViolation("backward() needs a scalar sink, got shape " +
                            shape_string(value(sink).shape()));
  std::vector<Tensor> grads(nodes_.size());
  grads_ = &grads;
  GradientStore store;
  if (nodes_[sink.id_].requires_grad) {
    grads[sink.id_] = Tensor(value(sink).shape(), 1.0);
    for (int id = sink.id_; id >= 0; --id) {
      Node& n = nodes_[id];
      if (grads[id].empty()) continue;
      if (n.leaf) {
        if (n.param) store.params_.emplace_back(n.param, id);
        store.by_node_.emplace(id, std::move(grads[id]));
        continue;
      }
      if (n.backward) {
        BackwardContext ctx(*this, id, &grads[id]);
        n.backward(ctx);
      }
      grads[id] = Tensor();
    }
  }
  grads_ = nullptr;
  return store;
}

}  // namespace mvqa
