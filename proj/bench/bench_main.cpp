#include <benchmark/benchmark.h>

#include "rdp/coding_sim.hpp"
#include "rdp/gaussian_model.hpp"
#include "rdp/region_solver.hpp"

namespace {

rdp::coding::Codebook bench_codebook(std::size_t n, double rate) {
  const rdp::FinitePmf pv({{"V", 2}}, {0.5, 0.5});
  return rdp::coding::gen_codebook(pv, rdp::coding::fixed_plan(n, rate, 0.0, 0.0), 7);
}

rdp::Channel bsc(double c) { return rdp::Channel({{"V", 2}}, {{"W", 2}}, {1 - c, c, c, 1 - c}); }

void BM_OutputMarginalNaive(benchmark::State& st) {
  const auto cb = bench_codebook(static_cast<std::size_t>(st.range(0)), 0.6);
  const auto emit = bsc(0.19);
  for (auto _ : st) benchmark::DoNotOptimize(rdp::coding::exact_output_marginal_naive(cb, emit));
}

void BM_OutputMarginal(benchmark::State& st) {
  const auto cb = bench_codebook(static_cast<std::size_t>(st.range(0)), 0.6);
  const auto emit = bsc(0.19);
  for (auto _ : st) benchmark::DoNotOptimize(rdp::coding::exact_output_marginal(cb, emit));
}

void BM_McSerial(benchmark::State& st) {
  const auto p = rdp::gaussian::make_params(0.3, 0.8);
  for (auto _ : st) benchmark::DoNotOptimize(rdp::gaussian::mc_validate_serial(p, 1 << 18, 1, 16));
}

void BM_McParallel(benchmark::State& st) {
  const auto p = rdp::gaussian::make_params(0.3, 0.8);
  for (auto _ : st) benchmark::DoNotOptimize(rdp::gaussian::mc_validate(p, 1 << 18, 1, 16));
}

void BM_MinRateDsbs(benchmark::State& st) {
  const auto src = rdp::SourceSpec::dsbs(0.2);
  rdp::SolverOptions opts;
  opts.starts = static_cast<std::size_t>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(rdp::min_rate(src, 0.1, 3, opts));
}

}  // namespace

BENCHMARK(BM_OutputMarginalNaive)->Arg(8)->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OutputMarginal)->Arg(8)->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_McSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_McParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MinRateDsbs)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
