// SPDX-License-Identifier: Apache-2.0
//
// Serial reference vs OpenMP kernels.

#include <benchmark/benchmark.h>

#include <numeric>

#include "uas/kernels.hpp"
#include "uas/rng.hpp"

namespace {

using namespace uas;

struct Problem {
  std::size_t n, dim, classes;
  std::vector<float> features;
  std::vector<std::uint32_t> labels;
  std::vector<double> weights;
  std::vector<std::size_t> indices;
  ProbeHead head;
};

Problem make_problem(std::size_t n, std::size_t dim, std::size_t classes) {
  Problem p{n, dim, classes, {}, {}, {}, {}, init_head(dim, classes, 3)};
  Xoshiro256 rng(11);
  p.features.resize(n * dim);
  for (auto& v : p.features) v = static_cast<float>(rng.normal());
  for (std::size_t i = 0; i < n; ++i) {
    p.labels.push_back(static_cast<std::uint32_t>(rng.below(classes)));
  }
  p.weights.assign(n, 1.0);
  p.indices.resize(n);
  std::iota(p.indices.begin(), p.indices.end(), std::size_t{0});
  return p;
}

template <bool Parallel>
void BM_BatchGradient(benchmark::State& state) {
  const auto p = make_problem(static_cast<std::size_t>(state.range(0)), 1024, 12);
  const kernels::PooledView view{p.features, p.labels, p.weights, p.dim};
  for (auto _ : state) {
    auto g = Parallel ? kernels::omp::batch_gradient(p.head, view, p.indices)
                      : kernels::serial::batch_gradient(p.head, view, p.indices);
    benchmark::DoNotOptimize(g.loss_sum);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_Logits(benchmark::State& state) {
  const auto p = make_problem(static_cast<std::size_t>(state.range(0)), 1024, 103);
  for (auto _ : state) {
    auto z = Parallel ? kernels::omp::logits(p.head, p.features)
                      : kernels::serial::logits(p.head, p.features);
    benchmark::DoNotOptimize(z.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_Covariance(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const std::size_t n = 2000;
  std::vector<double> samples(n * dim);
  Xoshiro256 rng(5);
  for (auto& v : samples) v = rng.normal();
  std::vector<double> mean;
  for (auto _ : state) {
    auto c = Parallel ? kernels::omp::covariance(samples, dim, mean)
                      : kernels::serial::covariance(samples, dim, mean);
    benchmark::DoNotOptimize(c.data());
  }
}

BENCHMARK(BM_BatchGradient<false>)->Name("batch_gradient/serial")->Arg(256)->Arg(2048);
BENCHMARK(BM_BatchGradient<true>)->Name("batch_gradient/omp")->Arg(256)->Arg(2048);
BENCHMARK(BM_Logits<false>)->Name("logits/serial")->Arg(1024);
BENCHMARK(BM_Logits<true>)->Name("logits/omp")->Arg(1024);
BENCHMARK(BM_Covariance<false>)->Name("covariance/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_Covariance<true>)->Name("covariance/omp")->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
