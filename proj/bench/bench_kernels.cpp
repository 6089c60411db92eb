// Serial reference vs OpenMP path for the dense kernels. Thread count comes
// from PNPGL_THREADS (default 1).

#include <benchmark/benchmark.h>

#include "pnpgl/graph_filter.hpp"
#include "pnpgl/kernels.hpp"
#include "pnpgl/rng.hpp"
#include "pnpgl/signals.hpp"

using namespace pnpgl;
using kernels::Exec;

namespace {

Matrix random_matrix(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed);
  Matrix m(n, n);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

Vector random_vector(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed);
  Vector v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

Exec policy(const benchmark::State& st) { return st.range(1) == 0 ? Exec::serial : Exec::parallel; }

void label(benchmark::State& st) {
  st.SetLabel(st.range(1) == 0 ? "serial" : "parallel x" + std::to_string(kernels::thread_count()));
}

void BM_matvec(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const Matrix a = random_matrix(n, 1);
  const Vector x = random_vector(n, 2);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::matvec(a, x, policy(st)));
  label(st);
}

void BM_matmul(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const Matrix a = random_matrix(n, 3);
  const Matrix b = random_matrix(n, 4);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::matmul(a, b, policy(st)));
  label(st);
}

void BM_scaled_outer(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const Matrix u = random_matrix(n, 5);
  const Vector d = random_vector(n, 6);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::scaled_outer(u, d, policy(st)));
  label(st);
}

void BM_build_kernel(benchmark::State& st) {
  const auto side = static_cast<std::size_t>(st.range(0));
  const Signal img = make_image(side, side, 7);
  const KernelConfig cfg = KernelConfig::defaults_image();
  for (auto _ : st) benchmark::DoNotOptimize(build_kernel(img, cfg, policy(st)));
  label(st);
}

}  // namespace

BENCHMARK(BM_matvec)->ArgsProduct({{256, 1024}, {0, 1}})->UseRealTime();
BENCHMARK(BM_matmul)->ArgsProduct({{128, 256}, {0, 1}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_scaled_outer)->ArgsProduct({{128, 256}, {0, 1}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_build_kernel)->ArgsProduct({{16, 32}, {0, 1}})->Unit(benchmark::kMillisecond)->UseRealTime();

int main(int argc, char** argv) {
  kernels::configure_threads_from_env();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
