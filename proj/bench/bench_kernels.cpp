#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "gcpress/kernels/conv.hpp"
#include "gcpress/parallel.hpp"

using namespace gcpress;
using kernels::ConvGeometry;

namespace {

struct ConvCase {
  ConvGeometry g;
  std::vector<float> x, w, b, y;
};

// Args: channels, side, kernel, stride.
ConvCase make_case(const benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int side = static_cast<int>(state.range(1));
  const int k = static_cast<int>(state.range(2));
  const int s = static_cast<int>(state.range(3));
  ConvCase cc;
  cc.g = ConvGeometry::make(1, c, side, side, c, k, s, k / 2);
  std::mt19937 rng(1);
  std::uniform_real_distribution<float> u(-1.f, 1.f);
  cc.x.resize(static_cast<std::size_t>(c) * side * side);
  cc.w.resize(static_cast<std::size_t>(cc.g.weight_size()));
  cc.b.resize(static_cast<std::size_t>(c));
  for (auto* v : {&cc.x, &cc.w, &cc.b})
    for (auto& e : *v) e = u(rng);
  cc.y.resize(static_cast<std::size_t>(c) * cc.g.out_h * cc.g.out_w);
  return cc;
}

void set_flops(benchmark::State& state, const ConvGeometry& g) {
  const double macs = 1.0 * g.out_channels * g.out_h * g.out_w * g.in_channels * g.kernel * g.kernel;
  state.counters["GFLOP/s"] =
      benchmark::Counter(2 * macs, benchmark::Counter::kIsIterationInvariantRate, benchmark::Counter::kIs1000);
}

void BM_ConvForwardRef(benchmark::State& state) {
  auto cc = make_case(state);
  for (auto _ : state) {
    kernels::ref::conv2d_forward<float>(cc.g, cc.x, cc.w, cc.b, cc.y);
    benchmark::DoNotOptimize(cc.y.data());
  }
  set_flops(state, cc.g);
}

void BM_ConvForwardOmp(benchmark::State& state) {
  auto cc = make_case(state);
  set_num_threads(static_cast<int>(state.range(4)));
  for (auto _ : state) {
    kernels::conv2d_forward<float>(cc.g, cc.x, cc.w, cc.b, cc.y);
    benchmark::DoNotOptimize(cc.y.data());
  }
  set_num_threads(1);
  set_flops(state, cc.g);
}

void BM_ConvBackwardWeightRef(benchmark::State& state) {
  auto cc = make_case(state);
  std::vector<float> dw(cc.w.size()), db(cc.b.size());
  for (auto _ : state) {
    kernels::ref::conv2d_backward_weight<float>(cc.g, cc.x, cc.y, dw, db);
    benchmark::DoNotOptimize(dw.data());
  }
  set_flops(state, cc.g);
}

void BM_ConvBackwardWeightOmp(benchmark::State& state) {
  auto cc = make_case(state);
  std::vector<float> dw(cc.w.size()), db(cc.b.size());
  set_num_threads(static_cast<int>(state.range(4)));
  for (auto _ : state) {
    kernels::conv2d_backward_weight<float>(cc.g, cc.x, cc.y, dw, db);
    benchmark::DoNotOptimize(dw.data());
  }
  set_num_threads(1);
  set_flops(state, cc.g);
}

// Shapes taken from the desk-scale networks: 7x7 stem, strided 3x3, residual 3x3.
void shapes(benchmark::internal::Benchmark* b, bool threads) {
  const std::vector<std::vector<std::int64_t>> base = {{6, 64, 7, 1}, {12, 32, 3, 2}, {96, 8, 3, 1}, {48, 16, 3, 1}};
  for (auto a : base) {
    if (threads) {
      for (int t : {1, 2, 4}) {
        auto withT = a;
        withT.push_back(t);
        b->Args(withT);
      }
    } else {
      b->Args(a);
    }
  }
}

}  // namespace

BENCHMARK(BM_ConvForwardRef)->Apply([](auto* b) { shapes(b, false); })->UseRealTime();
BENCHMARK(BM_ConvForwardOmp)->Apply([](auto* b) { shapes(b, true); })->UseRealTime();
BENCHMARK(BM_ConvBackwardWeightRef)->Apply([](auto* b) { shapes(b, false); })->UseRealTime();
BENCHMARK(BM_ConvBackwardWeightOmp)->Apply([](auto* b) { shapes(b, true); })->UseRealTime();

BENCHMARK_MAIN();
