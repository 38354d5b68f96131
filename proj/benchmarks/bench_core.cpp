#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "neqresponse/fluctuations.hpp"
#include "neqresponse/markov.hpp"
#include "neqresponse/pathspace.hpp"

using namespace neqresponse;

namespace {

// Ring with nearest-neighbour hops plus a few random chords.
Generator random_ring(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> rate(0.2, 2.0);
  std::uniform_int_distribution<std::size_t> state(0, n - 1);
  std::vector<Transition> ts;
  for (std::size_t i = 0; i < n; ++i) {
    ts.push_back({i, (i + 1) % n, rate(rng)});
    ts.push_back({(i + 1) % n, i, rate(rng)});
  }
  for (std::size_t k = 0; k < n / 4; ++k) {
    const std::size_t x = state(rng), y = state(rng);
    if (x != y && y != (x + 1) % n && x != (y + 1) % n) ts.push_back({x, y, rate(rng)});
  }
  return Generator::build(StateSpace::indexed(n), ts);
}

void BM_Stationary(benchmark::State& state) {
  const Generator g = random_ring(std::size_t(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(stationary_distribution(g));
}
BENCHMARK(BM_Stationary)->Arg(16)->Arg(128)->Arg(512);

void BM_Propagate(benchmark::State& state) {
  const auto n = std::size_t(state.range(0));
  const Generator g = random_ring(n, 2);
  const Distribution start = Distribution::point_mass(n, 0);
  for (auto _ : state) benchmark::DoNotOptimize(propagate(g, start, 5.0));
}
BENCHMARK(BM_Propagate)->Arg(16)->Arg(128)->Arg(1024);

void BM_SamplePath(benchmark::State& state) {
  const Generator g = random_ring(64, 3);
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_path(g, 0, double(state.range(0)), RngStream{5, i++}));
}
BENCHMARK(BM_SamplePath)->Arg(1)->Arg(10)->Arg(100);

void BM_RateFunction(benchmark::State& state) {
  const auto n = std::size_t(state.range(0));
  const Generator g = random_ring(n, 4);
  Vector weights = Vector::LinSpaced(Eigen::Index(n), 1.0, 2.0);
  const Distribution mu(weights / weights.sum());
  for (auto _ : state) benchmark::DoNotOptimize(dv_rate_function(g, mu));
}
BENCHMARK(BM_RateFunction)->Arg(8)->Arg(32)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
