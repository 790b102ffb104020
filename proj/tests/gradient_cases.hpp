#pragma once

#include <string>
#include <vector>

#include "fixtures.hpp"
#include "mvqa/model.hpp"
#include "test_support.hpp"

namespace mvqa::test {

struct OpCase {
  std::string name;
  GraphFn fn;
  std::vector<Tensor> inputs;
  bool training = false;
};

// Every differentiable op on random inputs with extents <= 6.
inline std::vector<OpCase> op_gradient_cases(std::uint64_t seed = 17) {
  std::mt19937_64 rng(seed);
  auto rt = [&](Shape s) { return random_tensor(std::move(s), rng); };
  using V = const std::vector<Var>&;
  static const Mask m5 = Mask::prefix(5, 3), m4 = Mask::prefix(4, 2);
  static const Mask holes(std::vector<bool>{true, false, true});
  static const std::vector<std::size_t> ids{2, 0, 2, 3}, pos{3, 0};
  std::vector<OpCase> c;
  auto mm = [](Graph&, V x) { return ops::matmul(x[0], x[1]); };
  c.push_back({"matmul", mm, {rt({3, 4}), rt({4, 2})}});
  c.push_back({"matmul row vector", mm, {rt({4}), rt({4, 2})}});
  c.push_back({"matmul column vector", mm, {rt({3, 4}), rt({4})}});
  c.push_back({"matmul dot", mm, {rt({4}), rt({4})}});
  c.push_back({"transpose", [](Graph&, V x) { return ops::transpose(x[0]); }, {rt({2, 3})}});
  c.push_back({"add", [](Graph&, V x) { return ops::add(x[0], x[1]); }, {rt({3, 4}), rt({3, 4})}});
  c.push_back({"add broadcast", [](Graph&, V x) { return ops::add(x[0], x[1]); },
               {rt({3, 4}), rt({4})}});
  c.push_back({"sub", [](Graph&, V x) { return ops::sub(x[0], x[1]); }, {rt({5}), rt({5})}});
  c.push_back({"mul", [](Graph&, V x) { return ops::mul(x[0], x[1]); }, {rt({2, 3}), rt({2, 3})}});
  c.push_back({"scale", [](Graph&, V x) { return ops::scale(x[0], -2.5); }, {rt({2, 3})}});
  c.push_back({"tanh", [](Graph&, V x) { return ops::tanh(x[0]); }, {rt({2, 3})}});
  c.push_back({"sigmoid", [](Graph&, V x) { return ops::sigmoid(x[0]); }, {rt({2, 3})}});
  c.push_back({"affine", [](Graph&, V x) { return ops::affine(x[0], x[1], x[2]); },
               {rt({3, 4}), rt({4, 2}), rt({2})}});
  c.push_back({"affine vector", [](Graph&, V x) { return ops::affine(x[0], x[1], x[2]); },
               {rt({4}), rt({4, 2}), rt({2})}});
  c.push_back({"concat matrices", [](Graph&, V x) { return ops::concat({x[0], x[1], x[0]}); },
               {rt({3, 2}), rt({3, 4})}});
  c.push_back({"concat vectors", [](Graph&, V x) { return ops::concat({x[0], x[1]}); },
               {rt({2}), rt({5})}});
  c.push_back({"dropout", [](Graph&, V x) { return ops::dropout(x[0], 0.3); }, {rt({3, 4})}, true});
  c.push_back({"slice", [](Graph&, V x) { return ops::slice(x[0], 1, 2); }, {rt({3, 5})}});
  c.push_back({"row", [](Graph&, V x) { return ops::row(x[0], 2); }, {rt({3, 5})}});
  c.push_back({"gather_rows", [](Graph&, V x) { return ops::gather_rows(x[0], ids); },
               {rt({4, 3})}});
  c.push_back({"scatter_rows",
               [](Graph&, V x) {
                 std::vector<Var> rows{x[0], x[1]};
                 return ops::scatter_rows(rows, pos, 5);
               },
               {rt({3}), rt({3})}});
  c.push_back({"mask_rows", [](Graph&, V x) { return ops::mask_rows(x[0], holes); }, {rt({3, 2})}});
  c.push_back({"masked_softmax", [](Graph&, V x) { return ops::masked_softmax(x[0], m5); },
               {rt({5})}});
  c.push_back({"mean pool", [](Graph&, V x) { return ops::pool(x[0], m5, ops::PoolKind::kMean); },
               {rt({5, 3})}});
  c.push_back({"max pool", [](Graph&, V x) { return ops::pool(x[0], m5, ops::PoolKind::kMax); },
               {rt({5, 3})}});
  c.push_back({"masked_row_max", [](Graph&, V x) { return ops::masked_row_max(x[0], m5, m4); },
               {rt({5, 4})}});
  c.push_back({"sum", [](Graph&, V x) { return ops::sum(x[0]); }, {rt({3, 2})}});
  c.push_back({"sum_squares", [](Graph&, V x) { return ops::sum_squares(x[0], 1); }, {rt({3, 2})}});
  c.push_back({"weighted_sum",
               [](Graph&, V x) {
                 std::vector<Var> items{x[0], x[1], x[2]};
                 return ops::weighted_sum(items, x[3]);
               },
               {rt({4}), rt({4}), rt({4}), rt({3})}});
  c.push_back({"normalize_sum", [](Graph&, V x) { return ops::normalize_sum(x[0]); },
               {random_tensor({4}, rng, 0.5, 2.0)}});
  c.push_back({"pick", [](Graph&, V x) { return ops::pick(x[0], 1); }, {rt({3})}});
  c.push_back({"binary_softmax", [](Graph&, V x) { return ops::binary_softmax(x[0]); }, {rt({2})}});
  c.push_back({"binary_cross_entropy y=1",
               [](Graph&, V x) {
                 return ops::binary_cross_entropy(ops::pick(ops::binary_softmax(x[0]), 1), 1.0);
               },
               {rt({2})}});
  c.push_back({"binary_cross_entropy y=0",
               [](Graph&, V x) {
                 return ops::binary_cross_entropy(ops::pick(ops::binary_softmax(x[0]), 1), 0.0);
               },
               {rt({2})}});
  c.push_back({"unfold width 2", [](Graph&, V x) { return ops::unfold(x[0], 2); }, {rt({4, 2})}});
  c.push_back({"unfold width 3", [](Graph&, V x) { return ops::unfold(x[0], 3); }, {rt({4, 2})}});
  c.push_back({"lstm_cell", [](Graph&, V x) { return ops::lstm_cell(x[0], x[1], x[2], x[3]); },
               {rt({12}), rt({6}), rt({3, 12}), rt({12})}});
  c.push_back({"lstm_cell chained",
               [](Graph&, V x) {
                 Var s = ops::lstm_cell(x[0], x[1], x[2], x[3]);
                 return ops::lstm_cell(x[0], s, x[2], x[3]);
               },
               {rt({12}), rt({6}), rt({3, 12}), rt({12})}});
  c.push_back({"three-layer composite",
               [](Graph&, V x) {
                 Var h1 = ops::tanh(ops::affine(x[0], x[1], x[2]));
                 Var h2 = ops::sigmoid(ops::matmul(h1, x[3]));
                 return ops::sum(ops::mul(h2, h2));
               },
               {rt({3, 4}), rt({4, 5}), rt({5}), rt({5, 2})}});
  return c;
}

inline double batch_loss(const Model& model, const std::vector<QAInstance>& batch, double l2,
                         GradientStore* grads = nullptr) {
  Graph g(false);
  std::vector<LossTerm> terms;
  for (const auto& inst : batch)
    terms.push_back({model.forward(g, inst).positive, inst.label, 1.0});
  Var loss = ops::add(multitask_loss(g, terms), l2_penalty(g, l2));
  if (grads) *grads = g.backward(loss);
  return loss.value()[0];
}

struct EndToEndResult {
  double worst = 0.0;
  std::size_t checked = 0;
  std::string worst_name;
};

// Tiny two-task model; `samples` random scalars of every parameter
// tensor are compared against central differences.
inline EndToEndResult end_to_end_gradients(Variant variant, std::uint64_t seed,
                                           std::size_t per_task, int samples = 10) {
  ModelConfig c = tiny_config(variant, seed);
  c.knowledge_trainable = true;
  c.learn_view_weights = true;
  const auto words = tiny_vocab(12, "w");
  const auto know = tiny_vocab(9, "k");
  Model model(c, words, know);
  std::mt19937_64 rng(seed);
  std::vector<QAInstance> batch;
  for (std::size_t i = 0; i < per_task; ++i) {
    batch.push_back(random_instance(rng, c, "as", words.size(), know.size()));
    batch.push_back(random_instance(rng, c, "kbqa", words.size(), know.size()));
  }
  GradientStore grads;
  batch_loss(model, batch, 0.01, &grads);
  EndToEndResult r;
  const double step = 1e-5;
  for (Parameter* p : model.parameters().all()) {
    const Tensor* analytic = grads.find(*p);
    for (int s = 0; s < samples; ++s) {
      const std::size_t k = rng() % p->value.size();
      if (p->pad_row && k < p->value.cols()) continue;
      const double saved = p->value[k];
      p->value[k] = saved + step;
      const double up = batch_loss(model, batch, 0.01);
      p->value[k] = saved - step;
      const double down = batch_loss(model, batch, 0.01);
      p->value[k] = saved;
      const double numeric = (up - down) / (2 * step);
      const double err = relative_error(analytic ? (*analytic)[k] : 0.0, numeric, 1e-7);
      ++r.checked;
      if (err > r.worst) {
        r.worst = err;
        r.worst_name = p->name + "[" + std::to_string(k) + "]";
      }
    }
  }
  return r;
}

}  // namespace mvqa::test
