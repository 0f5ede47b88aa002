#include <benchmark/benchmark.h>

#include "decsgd/algorithms.hpp"
#include "decsgd/harness.hpp"
#include "decsgd/rng.hpp"
#include "decsgd/theory.hpp"
#include "decsgd/timemodel.hpp"
#include "decsgd/topology.hpp"

namespace {

using namespace decsgd;

RunConfig bench_config(const std::string& algorithm) {
  RunConfig c;
  c.algorithm = algorithm;
  c.topology = {"ring", 8};
  c.objective.d = 50;
  c.objective.zeta2 = 1.0;
  c.objective.bbar_norm = 0.2;
  c.noise.kind = "additive";
  c.noise.sigma = 1.0;
  c.tau = 5;
  c.alpha = 0.001;
  return c;
}

void BM_StepperIteration(benchmark::State& state,
                         const std::string& algorithm) {
  const RunConfig config = bench_config(algorithm);
  const Instance inst = build_instance(config);
  Hyperparams hp;
  hp.alpha = config.alpha;
  hp.tau = config.tau;
  hp.T = 1 << 20;
  hp.seed = config.seed;
  auto stepper = make_stepper(algorithm, *inst.suite, inst.noise, inst.mix,
                              inst.X0, hp);
  for (auto _ : state) {
    stepper->step();
    benchmark::DoNotOptimize(stepper->xbar());
  }
}

void BM_MixingMultiply(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const MixingMatrix mix = metropolis_weights(build_ring(n));
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(50, n);
  for (auto _ : state) {
    X = X * mix.W;
    benchmark::DoNotOptimize(X);
  }
}

void BM_Gaussian(benchmark::State& state) {
  RngStream rng(1, 0, 0, StreamPurpose::gradient);
  double acc = 0;
  for (auto _ : state) acc += rng.gaussian();
  benchmark::DoNotOptimize(acc);
}

void BM_BuildTimeline(benchmark::State& state) {
  const CostModel cm{5.0, 8};
  for (auto _ : state) {
    Timeline tl = build_timeline("oldsgd", 5, cm, 100);
    benchmark::DoNotOptimize(tl.makespan());
  }
}

void BM_TheoremRhs(benchmark::State& state) {
  TheoryConstants tc;
  tc.L = 1;
  tc.sigma2 = 1;
  tc.zeta2 = 1;
  tc.p = 0.35;
  tc.tau = 5;
  tc.n = 8;
  tc.f0 = 1;
  tc.fstar = 0;
  const double alpha = max_step_size(tc);
  for (auto _ : state)
    benchmark::DoNotOptimize(theorem1_rhs(tc, alpha, 20000));
}

BENCHMARK_CAPTURE(BM_StepperIteration, oldsgd, std::string("oldsgd"));
BENCHMARK_CAPTURE(BM_StepperIteration, olgt, std::string("olgt"));
BENCHMARK_CAPTURE(BM_StepperIteration, oled, std::string("oled"));
BENCHMARK(BM_MixingMultiply)->Arg(8)->Arg(32);
BENCHMARK(BM_Gaussian);
BENCHMARK(BM_BuildTimeline);
BENCHMARK(BM_TheoremRhs);

}  // namespace

BENCHMARK_MAIN();
