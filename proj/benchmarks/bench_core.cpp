#include <benchmark/benchmark.h>

#include "nargis/gnn.hpp"
#include "nargis/losses.hpp"
#include "nargis/spectral.hpp"

namespace {

using namespace nargis;

Graph bench_graph(int per_block, Rng& rng) {
  return synth_sbm({per_block, per_block}, 0.05, 0.002, 16, 0.1, rng);
}

void BM_BackwardComposite(benchmark::State& state) {
  Rng rng = make_rng(1);
  const Tensor x = Tensor::glorot_uniform(256, 32, rng);
  Tensor w = Tensor::glorot_uniform(32, 8, rng);
  w.set_requires_grad(true);
  for (auto _ : state) {
    Tape tape;
    Tensor h = ops::relu(tape, ops::matmul(tape, x, w));
    Tensor loss = ops::mean(tape, ops::row_softmax(tape, h));
    GradMap grads = tape.backward(loss);
    benchmark::DoNotOptimize(grads);
  }
}
BENCHMARK(BM_BackwardComposite);

void BM_SpectralCluster(benchmark::State& state) {
  Rng rng = make_rng(2);
  const Graph g = bench_graph(100, rng);
  for (auto _ : state) {
    Rng local = make_rng(3);
    auto assign = spectral_cluster(g, 8, local);
    benchmark::DoNotOptimize(assign);
  }
}
BENCHMARK(BM_SpectralCluster);

void BM_GcnForward(benchmark::State& state) {
  Rng rng = make_rng(4);
  const Graph g = bench_graph(100, rng);
  const GnnParams params = init_gnn(GnnKind::kGcn, g.d, 16, g.c, 0.5, rng);
  const Tensor prop = propagation_matrix(GnnKind::kGcn, g.n, g.edges);
  for (auto _ : state) {
    Tape tape;
    Rng fwd = make_rng(5);
    Tensor post = forward_gnn(tape, params, prop, g.features, false, fwd);
    benchmark::DoNotOptimize(post);
  }
}
BENCHMARK(BM_GcnForward);

void BM_SurrogateScores(benchmark::State& state) {
  Rng rng = make_rng(6);
  const SurrogateAttackerParams p = init_surrogate_attacker(8, 10, rng);
  Tensor u = Tensor::glorot_uniform(512, 8, rng);
  Tensor v = Tensor::glorot_uniform(512, 8, rng);
  for (auto _ : state) {
    Tape tape;
    Tensor s = surrogate_attacker_scores(tape, p, u, v);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_SurrogateScores);

}  // namespace

BENCHMARK_MAIN();
