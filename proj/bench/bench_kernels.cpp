// OpenMP kernels against the serial reference loops on ar-preset layer shapes.
#include "pyranet/oracle.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

using namespace pyranet;

namespace {

struct CorrCase {
    Shape in;
    LayerSpec spec;
    Tensor<float> x;
    ParamSet<float> p;
};

// 0: 3DCORR1 on the 64x48x13 clip; 1: 3DCORR5 on the pooled 30x22x9x3 stack.
CorrCase make_case(int which) {
    const auto preset = make_preset("ar", 6);
    const auto shapes = chain_shapes(preset.input, preset.specs);
    const std::size_t layer = which == 0 ? 0 : 4;
    CorrCase c{shapes[layer], preset.specs[layer], Tensor<float>(shapes[layer]), {}};
    Rng rng(1);
    for (auto& v : c.x.values()) v = static_cast<float>(rng.uniform());
    c.p = init_params<float>(c.spec, c.in, shapes[layer + 1], rng);
    return c;
}

void BM_corr3d_parallel(benchmark::State& state) {
    const auto c = make_case(static_cast<int>(state.range(0)));
    omp_set_num_threads(static_cast<int>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(corr3d_forward(c.x, c.p, c.spec));
    state.SetItemsProcessed(state.iterations());
}

void BM_corr3d_naive(benchmark::State& state) {
    const auto c = make_case(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(oracle::naive_corr3d(c.x, c.p, c.spec));
    state.SetItemsProcessed(state.iterations());
}

void BM_pool3d(benchmark::State& state) {
    const auto preset = make_preset("ar", 6);
    const auto shapes = chain_shapes(preset.input, preset.specs);
    Rng rng(2);
    Tensor<float> x(shapes[2]);
    for (auto& v : x.values()) v = static_cast<float>(rng.uniform());
    const auto p = init_params<float>(preset.specs[2], shapes[2], shapes[3], rng);
    omp_set_num_threads(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(pool3d_forward(x, p, preset.specs[2]));
}

void BM_forward_backward(benchmark::State& state) {
    const auto preset = make_preset("ar", 6);
    Rng rng(3);
    const auto model = NetworkModel<float>::build(preset.input, preset.specs, rng);
    Tensor<float> x(preset.input);
    for (auto& v : x.values()) v = static_cast<float>(rng.uniform());
    const auto target = one_hot<float>(2, 6);
    auto grads = GradientSet::zeros_like(model);
    omp_set_num_threads(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        const auto cache = forward(model, x);
        benchmark::DoNotOptimize(backward<float>(model, cache, target, {}, grads));
    }
}

const int kMaxThreads = omp_get_num_procs();

}  // namespace

BENCHMARK(BM_corr3d_naive)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_corr3d_parallel)
    ->ArgsProduct({{0, 1}, benchmark::CreateRange(1, std::max(1, kMaxThreads), 2)})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_pool3d)->RangeMultiplier(2)->Range(1, std::max(1, kMaxThreads))->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_forward_backward)->RangeMultiplier(2)->Range(1, std::max(1, kMaxThreads))->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
