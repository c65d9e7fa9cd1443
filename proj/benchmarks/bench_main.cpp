#include "sdelab/ensemble.hpp"
#include "sdelab/rng.hpp"

#include <benchmark/benchmark.h>

using namespace sdelab;

namespace {

OptimizerFamily familyArg(std::int64_t i) { return static_cast<OptimizerFamily>(i); }

void BM_OptimizerStep(benchmark::State& state) {
  const std::size_t d = static_cast<std::size_t>(state.range(1));
  OptimizerConfig oc;
  oc.family = familyArg(state.range(0));
  oc.eta = 1e-3;
  oc.theta = isDecoupled(oc.family) ? 1.0 : 0.0;
  OptimizerState st = makeState(Vec(d, 0.5));
  Vec g(d);
  Rng rng(1);
  for (auto& x : g) x = rng.normal();
  for (auto _ : state) {
    stepInPlace(oc, st, g, 1.0);
    benchmark::DoNotOptimize(st.x.data());
  }
  state.SetLabel(toString(oc.family));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d));
}
BENCHMARK(BM_OptimizerStep)->ArgsProduct({{0, 1, 2, 3, 4, 5}, {2, 64}});

void BM_NoiseSample(benchmark::State& state) {
  const std::size_t d = 64;
  const Landscape f = makeQuadratic(Vec(d, 1.0));
  const NoiseModel n = state.range(0) == 0 ? NoiseModel{makeGaussianNoise(Vec(d, 0.1))}
                                           : NoiseModel{makeStudentNoise(3, Vec(d, 0.1))};
  const Vec x(d, 0.1);
  Vec out(d);
  Rng rng(2);
  for (auto _ : state) {
    sampleInto(n, f, x, rng, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d));
}
BENCHMARK(BM_NoiseSample)->Arg(0)->Arg(1);

void BM_EulerMaruyamaSignSgd(benchmark::State& state) {
  const Landscape f = makeQuadratic({1, 2});
  const NoiseModel n = makeGaussianNoise({0.1, 0.1});
  const SdeSystem sys = buildSignSgdSde(f, n, SignSgdVariant::Erf, 1e-3);
  Rng rng(3);
  const std::size_t steps = 1000;
  for (auto _ : state) {
    Vec x{0.1, 0.1};
    auto div = eulerMaruyamaVisit(sys, x, 1e-3, steps, rng, [](std::size_t, double, std::span<const double>) {});
    benchmark::DoNotOptimize(div);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(steps));
}
BENCHMARK(BM_EulerMaruyamaSignSgd);

void BM_EulerMaruyamaAdam(benchmark::State& state) {
  const Landscape f = makeQuadratic({10, 2});
  const NoiseModel n = makeGaussianNoise({0.1, 0.1});
  OptimizerConfig oc;
  oc.family = OptimizerFamily::Adam;
  oc.eta = 1e-2;
  const SdeSystem sys = buildAdamSde(f, n, oc, 0.0, SdeBaseline::Ours, oc.eta);
  Rng rng(4);
  const std::size_t steps = 1000;
  for (auto _ : state) {
    Vec s = sys.initialState(Vec{1.0, 1.0});
    auto div = eulerMaruyamaVisit(sys, s, oc.eta, steps, rng, [](std::size_t, double, std::span<const double>) {});
    benchmark::DoNotOptimize(div);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(steps));
}
BENCHMARK(BM_EulerMaruyamaAdam);

void BM_Ensemble(benchmark::State& state) {
  ExperimentSpec s;
  s.landscape = makeQuadratic({1, 2});
  s.noise = makeGaussianNoise({0.1, 0.1});
  OptimizerConfig oc;
  oc.family = OptimizerFamily::SignSgd;
  oc.eta = 1e-3;
  s.optimizer = oc;
  SdeSpec sde;
  sde.family = oc.family;
  sde.hyper = oc;
  s.sde = sde;
  s.runs = 100;
  s.steps = 1000;
  s.x0 = {0.1, 0.1};
  const Engine e = state.range(0) == 0 ? Engine::Discrete : Engine::Sde;
  for (auto _ : state) benchmark::DoNotOptimize(runEnsemble(s, e).lossMean.back());
  state.SetLabel(toString(e));
  state.SetItemsProcessed(state.iterations() * 100 * 1000);
}
BENCHMARK(BM_Ensemble)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
