#include <benchmark/benchmark.h>

#include "fwseg/losses.hpp"
#include "fwseg/meta_fusion.hpp"
#include "fwseg/model.hpp"
#include "fwseg/synth.hpp"
#include "fwseg/weak_labels.hpp"

namespace {

fwseg::DenseMask bench_mask(int size) {
    return fwseg::synth_sample("ellipses", "contrast", size, 0.1, 0.3, 0.0, 17).mask;
}

void BM_Sparsify(benchmark::State& state) {
    const auto style = static_cast<fwseg::AnnotationStyle>(state.range(0));
    const auto dense = bench_mask(128);
    auto params = fwseg::test_sparsity_grid(style).front();
    std::uint64_t seed = 0;
    for (auto _ : state) {
        params.seed = seed++;
        benchmark::DoNotOptimize(fwseg::sparsify(dense, params));
    }
    state.SetLabel(std::string(fwseg::to_string(style)));
}
BENCHMARK(BM_Sparsify)->DenseRange(0, 3);

void BM_SceForwardBackward(benchmark::State& state) {
    const auto n = state.range(0);
    auto probs = torch::rand({n, n}).requires_grad_(true);
    auto codes = torch::randint(0, 3, {n, n}).to(torch::kUInt8);
    for (auto _ : state) {
        auto loss = fwseg::sce_loss(probs, codes);
        benchmark::DoNotOptimize(torch::autograd::grad({loss}, {probs}));
    }
    state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_SceForwardBackward)->Arg(64)->Arg(128);

void BM_BackboneForward(benchmark::State& state) {
    static const char* kArchs[] = {"mini-unet", "mini-fcn-res", "mini-efficient", "mini-dilated"};
    const char* arch = kArchs[state.range(0)];
    auto model = fwseg::build_model(arch, 8, 1, 1);
    auto x = torch::rand({4, 1, 64, 64});
    torch::NoGradGuard guard;
    for (auto _ : state) benchmark::DoNotOptimize(model.forward(x));
    state.SetLabel(arch);
}
BENCHMARK(BM_BackboneForward)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

void BM_RidgeSolve(benchmark::State& state) {
    const auto n = state.range(0);
    auto x = torch::randn({n, 8}, torch::kFloat64);
    auto y = torch::zeros({n, 2}, torch::kFloat64);
    y.index_put_({torch::indexing::Slice(), 0}, 1.0);
    y.index_put_({torch::indexing::Slice(0, n / 2), 0}, 0.0);
    y.index_put_({torch::indexing::Slice(0, n / 2), 1}, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(fwseg::r2d2_solve(x, y, 1.0));
}
BENCHMARK(BM_RidgeSolve)->Arg(64)->Arg(2048);

void BM_SvmSolve(benchmark::State& state) {
    const auto n = state.range(0);
    auto x = torch::randn({n, 8}, torch::kFloat64);
    auto y = torch::zeros({n, 2}, torch::kFloat64);
    y.index_put_({torch::indexing::Slice(0, n / 2), 1}, 1.0);
    y.index_put_({torch::indexing::Slice(n / 2, n), 0}, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(fwseg::metaoptnet_solve(x, y, 0.1, 15));
}
BENCHMARK(BM_SvmSolve)->Arg(64)->Arg(2048);

}  // namespace

BENCHMARK_MAIN();
