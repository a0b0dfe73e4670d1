// Serial reference vs OpenMP curve generation on the default 5-45 V/nm grid.

#include <benchmark/benchmark.h>

#include <omp.h>

#include "pfikit/curves.hpp"
#include "pfikit/species.hpp"

using namespace pfikit;

namespace {

const SpeciesParams& species(int i) {
  static const auto all = resolve_species("si_clusters.json");
  return all.at(static_cast<size_t>(i));
}

const std::vector<double>& fields() {
  static const auto f = curves::FieldGrid{}.points();
  return f;
}

void BM_CurveSerial(benchmark::State& state) {
  const auto& s = species(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(curves::generate_curve_serial(s, {}, {}, fields()));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(fields().size()));
  state.SetLabel(s.name);
}

void BM_CurveOpenMP(benchmark::State& state) {
  const auto& s = species(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(curves::generate_curve(s, {}, {}, fields()));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(fields().size()));
  state.SetLabel(s.name + " threads=" + std::to_string(omp_get_max_threads()));
}

}  // namespace

BENCHMARK(BM_CurveSerial)->DenseRange(0, 3)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CurveOpenMP)->DenseRange(0, 3)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
