#include <benchmark/benchmark.h>

#include <krrinf/functionals.hpp>
#include <krrinf/kernels.hpp>
#include <krrinf/krr.hpp>
#include <krrinf/optimum.hpp>
#include <krrinf/spd_linalg.hpp>
#include <krrinf/testbed.hpp>

using namespace krrinf;

namespace {

Dataset f1_data(Eigen::Index n) {
  DesignSpec ds;
  ds.n = n;
  ds.box = test_function_domain(TestFunctionId::f1);
  ds.seed = 3;
  Dataset data{gen_design(ds), Vector(n)};
  const Vector e = gen_noise({NoiseFamily::gaussian, 0.5}, n, 4);
  for (Eigen::Index i = 0; i < n; ++i) data.Y[i] = eval_test_function(TestFunctionId::f1, data.X(i, 0)) + e[i];
  return data;
}

void BM_MaternRadial(benchmark::State& state) {
  const MaternKernel k(static_cast<double>(state.range(0)) / 2.0, 1.0, 1);
  double r = 0.0;
  for (auto _ : state) {
    r = r > 2.0 ? 1e-3 : r + 1e-3;
    benchmark::DoNotOptimize(k.radial(r, 2));
  }
}
BENCHMARK(BM_MaternRadial)->Arg(3)->Arg(4)->Arg(5)->Arg(6);

void BM_Gram(benchmark::State& state) {
  const Dataset d = f1_data(state.range(0));
  const MaternKernel k(3.0, 1.0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(gram(k, d.X));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Gram)->RangeMultiplier(2)->Range(128, 2048)->Complexity(benchmark::oNSquared);

void BM_Factor(benchmark::State& state) {
  const Dataset d = f1_data(state.range(0));
  const Matrix A = regularized_gram(gram(MaternKernel(3.0, 1.0, 1), d.X), 1.0 / static_cast<double>(d.size()));
  for (auto _ : state) benchmark::DoNotOptimize(SpdFactor::factor(A));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Factor)->RangeMultiplier(2)->Range(128, 2048)->Complexity(benchmark::oNCubed);

void BM_Loocv(benchmark::State& state) {
  const Dataset d = f1_data(state.range(0));
  const Matrix K = gram(MaternKernel(3.0, 1.0, 1), d.X);
  for (auto _ : state) benchmark::DoNotOptimize(loocv_score_with_gram(d, K, 1.0 / static_cast<double>(d.size())));
}
BENCHMARK(BM_Loocv)->Arg(300)->Arg(1000);

void BM_FindMin(benchmark::State& state) {
  const Dataset d = f1_data(state.range(0));
  const KrrFit f = fit(d, MaternKernel(3.0, 2.0, 1), 0.25 / static_cast<double>(d.size()));
  const Box box = test_function_domain(TestFunctionId::f1);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_optimum(f, box));
}
BENCHMARK(BM_FindMin)->Arg(300)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
