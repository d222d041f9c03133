#include <random>

#include <benchmark/benchmark.h>

#include "vlsplit/orchestrator.hpp"
#include "vlsplit/qp.hpp"

using namespace vlsplit;

namespace {

Scenario default_scenario(std::uint64_t seed) {
  ScenarioParams p;
  p.seed = seed;
  return generate_scenario(p);
}

// Box-constrained QP with a random positive definite Hessian.
QpProblem random_box_qp(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = g(rng);
  QpProblem qp;
  qp.H = M.transpose() * M + Eigen::MatrixXd::Identity(n, n);
  qp.c = Eigen::VectorXd::NullaryExpr(n, [&] { return 5.0 * g(rng); });
  qp.A_in.resize(2 * n, n);
  qp.A_in << Eigen::MatrixXd::Identity(n, n), -Eigen::MatrixXd::Identity(n, n);
  qp.b_in = Eigen::VectorXd::Ones(2 * n);
  qp.A_eq.resize(0, n);
  qp.b_eq.resize(0);
  return qp;
}

void BM_BoxQp(benchmark::State& state) {
  const QpProblem qp = random_box_qp(static_cast<int>(state.range(0)), 7);
  for (auto _ : state) benchmark::DoNotOptimize(solve_qp(qp));
}
BENCHMARK(BM_BoxQp)->Arg(20)->Arg(60)->Arg(120);

void BM_Subproblem1(benchmark::State& state) {
  const Scenario s = default_scenario(1);
  const Weights w = Weights::from_time(0.5);
  for (auto _ : state) benchmark::DoNotOptimize(solve_subproblem1(s, w));
}
BENCHMARK(BM_Subproblem1)->Unit(benchmark::kMillisecond);

void BM_Subproblem2(benchmark::State& state) {
  const Scenario s = default_scenario(1);
  const Weights w = Weights::from_time(0.5);
  for (auto _ : state) benchmark::DoNotOptimize(solve_subproblem2(s, w));
}
BENCHMARK(BM_Subproblem2)->Unit(benchmark::kMillisecond);

void BM_AlternatingOptimization(benchmark::State& state) {
  const Scenario s = default_scenario(1);
  const Weights w = Weights::from_time(0.5);
  for (auto _ : state) benchmark::DoNotOptimize(alternating_optimize(s, w));
}
BENCHMARK(BM_AlternatingOptimization)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
