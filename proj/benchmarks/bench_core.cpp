#include "degnse/control.hpp"
#include "degnse/hormander.hpp"
#include "degnse/nonlinearity.hpp"
#include "degnse/variational.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace degnse;

namespace {

SpectralField field(int N, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  return random_field(N, gen);
}

ModelSpec spec(int N_max, int N, double rho) {
  ModelSpec s;
  s.N_max = N_max;
  s.N = N;
  s.cutoff.rho = rho;
  return s;
}

}  // namespace

// Up to N = 4 this is the pair kernel, above it the dealiased grid.
static void BM_Convective(benchmark::State& st) {
  const auto u = field(static_cast<int>(st.range(0)), 1);
  for (auto _ : st) benchmark::DoNotOptimize(convective_term(u));
  st.counters["modes"] = u.trunc().size();
}
BENCHMARK(BM_Convective)->DenseRange(1, 8)->Unit(benchmark::kMicrosecond);

static void BM_PseudospectralOracle(benchmark::State& st) {
  const int N = static_cast<int>(st.range(0));
  const auto u = field(N, 2);
  for (auto _ : st) benchmark::DoNotOptimize(pseudospectral_oracle(u, 4 * N + 1));
}
BENCHMARK(BM_PseudospectralOracle)->DenseRange(1, 4)->Unit(benchmark::kMicrosecond);

static void BM_ConvectiveJacobian(benchmark::State& st) {
  const auto u = field(static_cast<int>(st.range(0)), 3);
  for (auto _ : st) benchmark::DoNotOptimize(convective_jacobian(u));
}
BENCHMARK(BM_ConvectiveJacobian)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

static void BM_Simulate(benchmark::State& st) {
  const auto s = spec(static_cast<int>(st.range(0)), 2, 1.0);
  const auto x = 0.5 / sobolev_norm(field(s.N_max, 4), s.noise.w_alpha()) * field(s.N_max, 4);
  for (auto _ : st) benchmark::DoNotOptimize(simulate(x, 0.1, 1e-3, 5, s));
  st.SetItemsProcessed(st.iterations() * 100);  // integrator steps
}
BENCHMARK(BM_Simulate)->Arg(2)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_JacobianFlow(benchmark::State& st) {
  const auto s = spec(2, static_cast<int>(st.range(0)), 1.0);
  const auto tr = simulate(field(2, 6), 0.1, 1e-3, 7, s);
  for (auto _ : st) benchmark::DoNotOptimize(jacobian_flow(tr));
}
BENCHMARK(BM_JacobianFlow)->Arg(2)->Unit(benchmark::kMillisecond);

static void BM_HormanderSpan(benchmark::State& st) {
  const auto s = spec(2, 2, 10.0);
  SystemOptions o;
  o.K1 = false;
  o.pairs = certificate_pairs(decomposition_search(1), s);
  const auto y = field(2, 8);
  for (auto _ : st) benchmark::DoNotOptimize(span_rank(hormander_system(y, s, o), s));
}
BENCHMARK(BM_HormanderSpan)->Unit(benchmark::kMillisecond);

static void BM_CarrierSearch(benchmark::State& st) {
  const int N_max = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(search_carriers(1, N_max));
}
BENCHMARK(BM_CarrierSearch)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
