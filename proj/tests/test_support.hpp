#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "mvqa/graph.hpp"
#include "mvqa/ops.hpp"
#include "mvqa/tensor.hpp"

namespace mvqa::test {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& x : t.data()) x = u(rng);
  return t;
}

inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

using GraphFn = std::function<Var(Graph&, const std::vector<Var>&)>;

// Worst relative error between backprop and central differences over every
// element of every input. Non-scalar outputs are reduced with a fixed
// random projection.
inline double gradient_check(const GraphFn& fn, std::vector<Tensor> inputs,
                             double step = 1e-5, bool training = false,
                             std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  Tensor projection;
  auto eval = [&](Graph& g, std::vector<Var>& leaves) {
    leaves.clear();
    for (const auto& t : inputs) leaves.push_back(g.variable(t));
    Var out = fn(g, leaves);
    if (out.value().size() == 1) return out;
    if (projection.empty()) projection = random_tensor(out.shape(), rng);
    return ops::sum(ops::mul(out, g.constant(projection)));
  };
  std::vector<Var> leaves;
  Graph g(training, seed);
  Var out = eval(g, leaves);
  GradientStore grads = g.backward(out);
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Tensor* analytic = grads.find(leaves[i]);
    for (std::size_t k = 0; k < inputs[i].size(); ++k) {
      const double saved = inputs[i][k];
      inputs[i][k] = saved + step;
      Graph gp(training, seed);
      std::vector<Var> lp;
      const double up = eval(gp, lp).value()[0];
      inputs[i][k] = saved - step;
      Graph gm(training, seed);
      std::vector<Var> lm;
      const double down = eval(gm, lm).value()[0];
      inputs[i][k] = saved;
      const double numeric = (up - down) / (2 * step);
      const double a = analytic ? (*analytic)[k] : 0.0;
      worst = std::max(worst, relative_error(a, numeric));
    }
  }
  return worst;
}

}  // namespace mvqa::test
