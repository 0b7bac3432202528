#include <benchmark/benchmark.h>

#include <random>

#include "eventsnn/config.hpp"
#include "eventsnn/grad.hpp"
#include "eventsnn/lif.hpp"
#include "eventsnn/sim.hpp"
#include "eventsnn/train.hpp"

namespace {

using namespace eventsnn;

std::vector<double> uniform(std::size_t n, double lo, double hi, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> out(n);
  for (auto& x : out) x = d(rng);
  return out;
}

void BM_CrossingDoubleTau(benchmark::State& state) {
  const auto v = uniform(1024, -1.0, 0.99, 1);
  const auto i = uniform(1024, -2.0, 4.0, 2);
  const LifParams p;
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lif::next_crossing_double_tau(v[k & 1023], i[k & 1023], p));
    ++k;
  }
}
BENCHMARK(BM_CrossingDoubleTau);

void BM_CrossingEqualTau(benchmark::State& state) {
  const auto v = uniform(1024, -1.0, 0.99, 1);
  const auto i = uniform(1024, -2.0, 4.0, 2);
  LifParams p;
  p.tau_mem = 1.0;
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lif::next_crossing_equal_tau(v[k & 1023], i[k & 1023], p));
    ++k;
  }
}
BENCHMARK(BM_CrossingEqualTau);

void BM_CrossingSafeBatch(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto v = uniform(n, -1.0, 0.99, 3);
  const auto i = uniform(n, -2.0, 4.0, 4);
  const LifParams p;
  for (auto _ : state) benchmark::DoNotOptimize(lif::next_crossing_safe(v, i, p));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_CrossingSafeBatch)->Arg(123)->Arg(1024);

struct YinYangFixture {
  ExperimentConfig cfg = preset("eventprop-sim");
  Network net;
  std::vector<Sample> samples;
  int m = 0;
  YinYangFixture() {
    cfg.dataset.n_train = 64;
    cfg.dataset.n_test = 1;
    net = initial_network(cfg);
    samples = make_data(cfg.dataset).train;
    m = budget_for(cfg, net);
  }
};

void BM_SimulateYinYang(benchmark::State& state) {
  static const YinYangFixture fx;
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate(fx.net, fx.samples[k % fx.samples.size()].inputs, fx.m, fx.cfg.sim.t_max));
    ++k;
  }
}
BENCHMARK(BM_SimulateYinYang);

void BM_Backward(benchmark::State& state) {
  static const YinYangFixture fx;
  ExperimentConfig cfg = fx.cfg;
  cfg.train.estimator = state.range(0) ? GradientEstimator::fud : GradientEstimator::eventprop;
  std::vector<EventTrace> traces;
  for (const auto& s : fx.samples) traces.push_back(simulate(fx.net, s.inputs, fx.m, cfg.sim.t_max));
  std::size_t k = 0;
  for (auto _ : state) {
    const auto idx = k % traces.size();
    benchmark::DoNotOptimize(trace_gradient(traces[idx], fx.net, cfg, fx.samples[idx].label));
    ++k;
  }
  state.SetLabel(state.range(0) ? "fud" : "eventprop");
}
BENCHMARK(BM_Backward)->Arg(0)->Arg(1);

}  // namespace

BENCHMARK_MAIN();
