#include <benchmark/benchmark.h>

#include <algorithm>
#include <map>
#include <vector>

#include "qrev/kernels.hpp"
#include "qrev/network.hpp"

namespace {

using namespace qrev;

const RateMatrix& generator(int side) {
  static std::map<int, RateMatrix> cache;
  auto it = cache.find(side);
  if (it == cache.end()) {
    auto net = build_jackson({1.0, 0.5}, {3.0, 3.0}, {1, 2}, {{0.0, 0.6}, {0.2, 0.0}}, {side - 1, side - 1});
    it = cache.emplace(side, joint_generator(net)).first;
  }
  return it->second;
}

std::vector<double> uniform(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

template <auto Fn>
void bm_inflow(benchmark::State& st) {
  const auto& q = generator(static_cast<int>(st.range(0)));
  auto w = uniform(q.size());
  for (auto _ : st) benchmark::DoNotOptimize(Fn(q, w));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(q.nnz()));
}

template <auto Fn>
void bm_residual(benchmark::State& st) {
  const auto& q = generator(static_cast<int>(st.range(0)));
  auto w = uniform(q.size());
  for (auto _ : st) benchmark::DoNotOptimize(Fn(q, w));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(q.nnz()));
}

template <auto Fn>
void bm_step(benchmark::State& st) {
  const auto& q = generator(static_cast<int>(st.range(0)));
  auto exit = kernels::offdiag_exit_rates(q);
  double lambda = 0.0;
  for (double a : exit) lambda = std::max(lambda, a);
  auto in = uniform(q.size());
  std::vector<double> out(q.size());
  for (auto _ : st) {
    Fn(q, exit, 1.05 * lambda, in, out);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(q.nnz()));
}

template <auto Fn>
void bm_l1(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0)) * static_cast<std::size_t>(st.range(0));
  auto a = uniform(n);
  std::vector<double> b(n, 0.5 / static_cast<double>(n));
  for (auto _ : st) benchmark::DoNotOptimize(Fn(a, b));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(n));
}

}  // namespace

BENCHMARK(bm_inflow<kernels::serial::offdiag_inflow>)->Name("offdiag_inflow/serial")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(bm_inflow<kernels::parallel::offdiag_inflow>)->Name("offdiag_inflow/parallel")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(bm_residual<kernels::serial::balance_residual>)->Name("balance_residual/serial")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(bm_residual<kernels::parallel::balance_residual>)->Name("balance_residual/parallel")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(bm_step<kernels::serial::uniformized_step>)->Name("uniformized_step/serial")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(bm_step<kernels::parallel::uniformized_step>)->Name("uniformized_step/parallel")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(bm_l1<kernels::serial::l1_distance>)->Name("l1_distance/serial")->Arg(256)->Arg(1024);
BENCHMARK(bm_l1<kernels::parallel::l1_distance>)->Name("l1_distance/parallel")->Arg(256)->Arg(1024);

BENCHMARK_MAIN();
