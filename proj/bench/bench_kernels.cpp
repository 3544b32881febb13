// Serial reference vs OpenMP kernels on the shapes used by the experiments.

#include <benchmark/benchmark.h>

#include "proxnet/algorithms.hpp"
#include "proxnet/data.hpp"
#include "proxnet/rng.hpp"

using namespace proxnet;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t seed) {
  RngStream rng(seed);
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

Exec exec_of(const benchmark::State& state) {
  return state.range(1) == 0 ? Exec::serial : Exec::parallel;
}

void BM_Mixing(benchmark::State& state) {
  const Index n = state.range(0);
  const MixingMatrix w = lazy(uniform_weights(build_ring(n)));
  const Matrix z = random_matrix(n, 784, 1);
  Matrix out(n, 784);
  for (auto _ : state) {
    w.op().apply(z, out, exec_of(state));
    benchmark::DoNotOptimize(out.data());
  }
}

struct SparseSetup {
  CompositeProblem problem;
  GradientSource grads;
  MixingMatrix w;

  explicit SparseSetup(Index n)
      : problem(agents(n), ProxOperator::l1(0.01), 0.1),
        grads(problem.objectives(), 16, 1),
        w(lazy(uniform_weights(build_ring(n)))) {}

  static std::vector<ObjectivePtr> agents(Index n) {
    const Dataset ds = synthetic_binary(2000, 50, 7, 1.0);
    const Partition part = partition_heterogeneous(ds, n);
    std::vector<ObjectivePtr> out;
    for (Index a = 0; a < n; ++a) out.push_back(std::make_shared<TanhLoss>(ds.subset(part.agent_indices[a])));
    return out;
  }
};

void BM_AgentGradients(benchmark::State& state) {
  const SparseSetup s(state.range(0));
  const Matrix x = random_matrix(state.range(0), 50, 2);
  Matrix g;
  std::uint64_t k = 0;
  for (auto _ : state) {
    kernels::agent_gradients(s.grads, x, k++, g, exec_of(state));
    benchmark::DoNotOptimize(g.data());
  }
}

void BM_Stationarity(benchmark::State& state) {
  const SparseSetup s(state.range(0));
  const Matrix x = random_matrix(state.range(0), 50, 3);
  for (auto _ : state) benchmark::DoNotOptimize(stationarity_measure(x, s.problem, exec_of(state)));
}

void BM_EdStep(benchmark::State& state) {
  const SparseSetup s(state.range(0));
  const StepContext ctx{s.problem, s.grads, exec_of(state)};
  SwarmState st = init_norm_ed(Matrix::Zero(state.range(0), 50), ctx);
  for (auto _ : state) step_norm_ed(st, s.w, 1.0 / 40, ctx);
}

}  // namespace

BENCHMARK(BM_Mixing)->ArgsProduct({{30, 50, 200}, {0, 1}});
BENCHMARK(BM_AgentGradients)->ArgsProduct({{30, 50}, {0, 1}});
BENCHMARK(BM_Stationarity)->ArgsProduct({{30, 50}, {0, 1}});
BENCHMARK(BM_EdStep)->ArgsProduct({{30, 50}, {0, 1}});

BENCHMARK_MAIN();
