#include <benchmark/benchmark.h>

#include "ovlab/ovlab.hpp"

namespace {

using namespace ovlab;

const MlpSpec kSpec{{20, 32, 32, 3}};

Batch make_batch(std::size_t m) {
  const Dataset d = gen_blobs(3, 20, m, 0, 0.5, 1);
  return Batch{d.train.x, d.train.t};
}

void BM_ForwardLogits(benchmark::State& state) {
  const Model model = init_model(kSpec, 1);
  const Batch b = make_batch(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(forward_logits(model, b.x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardLogits)->Arg(16)->Arg(128)->Arg(1000);

void BM_CeGrad(benchmark::State& state) {
  const Model model = init_model(kSpec, 1);
  const Batch b = make_batch(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ce_grad(model, b));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CeGrad)->Arg(16)->Arg(60)->Arg(128);

void BM_OvMean(benchmark::State& state) {
  const Dataset d = gen_blobs(3, 20, 3000, 0, 0.5, 2);
  const Model model = init_model(kSpec, 3);
  const OptimizerState opt = make_adam(1e-3, model.size());
  const auto batches =
      draw_ov_batches(d.train, 60, static_cast<std::size_t>(state.range(0)), 4);
  const CandidateUpdateSet cand = candidate_updates(model, opt, batches);
  const Matrix xs = ov_sample_inputs(d.train, 1000, 5);
  for (auto _ : state) benchmark::DoNotOptimize(ov_mean(model, cand, xs));
}
BENCHMARK(BM_OvMean)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_DecomposeZo(benchmark::State& state) {
  Rng rng(6);
  EnsembleOutputs e;
  for (int j = 0; j < 5; ++j) {
    ProbVector p(10);
    double s = 0.0;
    for (double& v : p) s += (v = rng.exponential());
    for (double& v : p) v /= s;
    e.outputs.push_back(p);
  }
  ProbVector t(10, 0.0);
  t[3] = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(decompose(LossKind::kZo, t, e));
}
BENCHMARK(BM_DecomposeZo);

}  // namespace

BENCHMARK_MAIN();
