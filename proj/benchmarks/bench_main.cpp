#include <benchmark/benchmark.h>

#include "mutforest/emergence.hpp"
#include "mutforest/model_io.hpp"
#include "mutforest/mutation_law.hpp"
#include "mutforest/sim_continuous.hpp"
#include "mutforest/sim_discrete.hpp"

namespace mutforest {
namespace {

const std::filesystem::path kModels = MUTFOREST_MODELS_DIR;

ProgenyLaw diamond() { return load_model(kModels / "nu_diamond.json").law; }
ProgenyLaw triangle() { return load_model(kModels / "nu_triangle.json").law; }

void BM_ConvolvePower(benchmark::State& state) {
  const auto law = diamond();
  const auto n = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(convolve_power(law.law(0), n));
}
BENCHMARK(BM_ConvolvePower)->Arg(8)->Arg(32)->Arg(128);

void BM_MutationProgeny(benchmark::State& state) {
  const auto law = diamond();
  MutationProgenyOptions opts;
  opts.eps = std::pow(10.0, -static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mutation_progeny(law, 0, opts));
}
BENCHMARK(BM_MutationProgeny)->Arg(6)->Arg(8)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_SampleForest(benchmark::State& state) {
  const SampleConfig cfg{diamond(), {state.range(0), 0}, 10'000'000};
  const ProgenySampler sampler(cfg.law);
  std::uint64_t r = 0;
  for (auto _ : state) {
    auto rng = make_rng(1, r++, Stream::forest);
    benchmark::DoNotOptimize(sample_forest(cfg, sampler, rng));
  }
}
BENCHMARK(BM_SampleForest)->Arg(1)->Arg(100);

void BM_CensusWalk(benchmark::State& state) {
  const SampleConfig cfg{diamond(), {state.range(0), 0}, 10'000'000};
  const ProgenySampler sampler(cfg.law);
  std::uint64_t r = 0;
  for (auto _ : state) {
    auto rng = make_rng(1, r++, Stream::walk);
    benchmark::DoNotOptimize(sample_census_walk(cfg, sampler, rng));
  }
}
BENCHMARK(BM_CensusWalk)->Arg(1)->Arg(100);

void BM_Lamperti(benchmark::State& state) {
  const auto law = triangle();
  const Rates rates{{2.0, 1.0}};
  const double horizon = static_cast<double>(state.range(0));
  std::uint64_t r = 0;
  for (auto _ : state) {
    auto rng = make_rng(1, r++, Stream::ct_lamperti);
    benchmark::DoNotOptimize(simulate_lamperti(law, rates, {1, 0}, horizon, rng));
  }
}
BENCHMARK(BM_Lamperti)->Arg(2)->Arg(6);

void BM_Direct(benchmark::State& state) {
  const auto law = triangle();
  const Rates rates{{2.0, 1.0}};
  const double horizon = static_cast<double>(state.range(0));
  std::uint64_t r = 0;
  for (auto _ : state) {
    auto rng = make_rng(1, r++, Stream::ct_direct);
    benchmark::DoNotOptimize(simulate_direct(law, rates, {1, 0}, horizon, rng));
  }
}
BENCHMARK(BM_Direct)->Arg(2)->Arg(6);

void BM_TauRepresentation(benchmark::State& state) {
  const auto chain = make_binary_chain({{1.0, 1.0}, {1.0, 1.0}});
  std::uint64_t r = 0;
  for (auto _ : state) {
    auto rng = make_rng(1, r++, Stream::tau_representation);
    benchmark::DoNotOptimize(sample_tau_representation(chain, 2, rng));
  }
}
BENCHMARK(BM_TauRepresentation);

}  // namespace
}  // namespace mutforest

BENCHMARK_MAIN();
