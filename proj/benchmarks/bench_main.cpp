#include <benchmark/benchmark.h>

#include <random>

#include "mvqa/encoders.hpp"
#include "mvqa/model.hpp"
#include "mvqa/ops.hpp"
#include "mvqa/pipeline.hpp"

using namespace mvqa;

namespace {

Tensor random(Shape s, std::mt19937_64& rng) {
  Tensor t(std::move(s));
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (auto& x : t.data()) x = u(rng);
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  Tensor a = random({n, n}, rng), b = random({n, n}, rng);
  for (auto _ : state) {
    Graph g;
    benchmark::DoNotOptimize(ops::matmul(g.constant(a), g.constant(b)).value().data().data());
  }
  state.SetItemsProcessed(state.iterations() * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(40)->Arg(100)->Arg(200);

void BM_BiLstmForwardBackward(benchmark::State& state) {
  const auto len = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  ParameterSet ps;
  auto p = BiLstmParams::create(ps, "l", 64, 32, 0.1, rng);
  Tensor x = random({len, 64}, rng);
  for (auto _ : state) {
    Graph g;
    Var out = bilstm_encode(g.variable(x), Mask(len), p);
    benchmark::DoNotOptimize(g.backward(ops::sum(out)).size());
  }
}
BENCHMARK(BM_BiLstmForwardBackward)->Arg(10)->Arg(40);

// One optimizer step on a batch of the bundled synthetic corpus.
void BM_TrainStep(benchmark::State& state) {
  ModelConfig c = load_config(std::string(MVQA_SOURCE_DIR) + "/data/synthetic/small.conf");
  c.variant = state.range(0) ? Variant::kMva : Variant::kMtqa;
  Resources r = load_resources(c);
  Experiment e = prepare_experiment(c, r);
  Model model = build_model(c, e, r);
  Optimizer opt = Optimizer::from_config(c);
  const auto& data = e.train.at("as");
  std::size_t cursor = 0;
  for (auto _ : state) {
    Graph g(true, cursor);
    std::vector<LossTerm> terms;
    for (std::size_t i = 0; i < c.batch_size; ++i, ++cursor) {
      const QAInstance& inst = data[cursor % data.size()];
      terms.push_back({model.forward(g, inst).positive, inst.label, 1.0});
    }
    opt.step(g.backward(ops::add(multitask_loss(g, terms), l2_penalty(g, c.l2))));
  }
  state.SetItemsProcessed(state.iterations() * c.batch_size);
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
