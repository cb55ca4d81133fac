#include <benchmark/benchmark.h>

#include "fpca/dgp.hpp"
#include "fpca/inference.hpp"
#include "fpca/pca.hpp"

namespace {

fpca::ModelSpec bench_spec(int r = 2) {
  fpca::ModelSpec spec;
  spec.r = r;
  spec.factors = fpca::FactorProcessSpec::var1(0.5 * Eigen::MatrixXd::Identity(r, r),
                                               Eigen::MatrixXd::Identity(r, r));
  spec.idio = fpca::IdioProcessSpec::make(0.3, 0.3, 1.0);
  return spec;
}

void BM_Generate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const fpca::ModelSpec spec = bench_spec();
  std::uint64_t seed = 1;
  for (auto _ : state) {
    auto out = fpca::generate(spec, n, n, seed++);
    benchmark::DoNotOptimize(out.first.data);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Generate)->RangeMultiplier(2)->Range(50, 400)->Complexity();

void BM_Estimate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto [panel, truth] = fpca::generate(bench_spec(), n, n, 7);
  for (auto _ : state) {
    const fpca::PcaEstimate e = fpca::estimate(panel, 2, fpca::Approach::A);
    benchmark::DoNotOptimize(e.lambda_hat);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Estimate)->RangeMultiplier(2)->Range(50, 400)->Complexity();

void BM_HacPhi(benchmark::State& state) {
  const int t_len = static_cast<int>(state.range(0));
  const auto [panel, truth] = fpca::generate(bench_spec(), 50, t_len, 11);
  const fpca::PcaEstimate e = fpca::estimate(panel, 2, fpca::Approach::A);
  const Eigen::MatrixXd xi = fpca::idio_residuals(panel, e);
  for (auto _ : state) {
    const Eigen::MatrixXd phi = fpca::hac_phi(e.f_hat, xi.col(0));
    benchmark::DoNotOptimize(phi);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_HacPhi)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

void BM_GammaT(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto [panel, truth] = fpca::generate(bench_spec(), n, 200, 13);
  const fpca::PcaEstimate e = fpca::estimate(panel, 2, fpca::Approach::A);
  const Eigen::MatrixXd xi = fpca::idio_residuals(panel, e);
  for (auto _ : state) {
    const Eigen::MatrixXd g = fpca::gamma_t_hat(e.lambda_hat, xi, 10);
    benchmark::DoNotOptimize(g);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GammaT)->RangeMultiplier(2)->Range(64, 1024)->Complexity();

}  // namespace

BENCHMARK_MAIN();
