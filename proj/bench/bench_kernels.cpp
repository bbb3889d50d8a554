#include <benchmark/benchmark.h>

#include <random>

#include "bindlab/kernels.hpp"
#include "bindlab/localization.hpp"
#include "bindlab/svm.hpp"

using namespace bindlab;

namespace {

BasisSet make_basis(int n, std::size_t k) {
  CandidateSampler s(n, CandidateOptions{}, 11);
  BasisSet b(n);
  for (std::size_t i = 0; i < k; ++i) b.add(s.next());
  return b;
}

Exec exec_of(const benchmark::State& st) { return st.range(1) ? Exec::parallel : Exec::serial; }

void BM_Operators(benchmark::State& st) {
  const auto b = make_basis(2, static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(assemble_operators(b, exec_of(st)));
}

void BM_Operators3(benchmark::State& st) {
  const auto b = make_basis(3, static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(assemble_operators(b, exec_of(st)));
}

void BM_Hartree(benchmark::State& st) {
  const auto b = make_basis(2, static_cast<std::size_t>(st.range(0)));
  const auto d = assemble_pair_densities(b);
  for (auto _ : st) benchmark::DoNotOptimize(assemble_hartree(d, exec_of(st)));
}

void BM_PairObservable(benchmark::State& st) {
  const auto b = make_basis(2, static_cast<std::size_t>(st.range(0)));
  for (auto _ : st)
    benchmark::DoNotOptimize(assemble_pair_observable(b, PairObservable::tail_mass, 2.0, exec_of(st)));
}

}  // namespace

// second argument: 0 = serial reference, 1 = OpenMP
BENCHMARK(BM_Operators)->ArgsProduct({{20, 60}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Operators3)->ArgsProduct({{20, 40}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Hartree)->ArgsProduct({{10, 20}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairObservable)->ArgsProduct({{40}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
