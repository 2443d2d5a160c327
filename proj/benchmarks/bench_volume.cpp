#include <benchmark/benchmark.h>

#include <random>

#include "cgcv/gate.hpp"
#include "cgcv/refine.hpp"

using namespace cgcv;

namespace {

FeatureMap<float> random_map(int c, int h, int w, uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    FeatureMap<float> m(c, h, w);
    for (float& v : m.data) v = dist(rng);
    return m;
}

}  // namespace

static void BM_BuildAllPairs(benchmark::State& state) {
    const int grid = static_cast<int>(state.range(0));
    const int channels = static_cast<int>(state.range(1));
    auto g1 = random_map(channels, grid, grid, 1);
    auto g2 = random_map(channels, grid, grid, 2);
    for (auto _ : state) {
        auto c = build_all_pairs(g1, g2);
        benchmark::DoNotOptimize(c.data.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(grid) *
                            grid * grid * grid * channels);
}
BENCHMARK(BM_BuildAllPairs)
    ->Args({16, 64})
    ->Args({16, 256})
    ->Args({32, 64})
    ->Args({32, 256});

static void BM_BuildPyramid(benchmark::State& state) {
    const int grid = static_cast<int>(state.range(0));
    auto g = random_map(64, grid, grid, 3);
    auto c = build_all_pairs(g, g);
    for (auto _ : state) {
        auto p = build_pyramid(c, 4);
        benchmark::DoNotOptimize(p.levels.back().data.data());
    }
}
BENCHMARK(BM_BuildPyramid)->Arg(16)->Arg(32);

static void BM_Lookup(benchmark::State& state) {
    const int grid = static_cast<int>(state.range(0));
    const int radius = static_cast<int>(state.range(1));
    auto g = random_map(64, grid, grid, 4);
    auto pyramid = build_pyramid(build_all_pairs(g, g), 4);
    FlowField<float> flow(grid, grid);
    std::mt19937 rng(5);
    std::uniform_real_distribution<float> d(-2.0f, 2.0f);
    for (size_t n = 0; n < flow.size(); ++n) {
        flow.u[n] = d(rng);
        flow.v[n] = d(rng);
    }
    const LookupConfig cfg{radius, 4};
    for (auto _ : state) {
        auto feats = lookup(pyramid, flow, cfg);
        benchmark::DoNotOptimize(feats.data.data());
    }
    state.SetItemsProcessed(state.iterations() * flow.size() *
                            cfg.feature_length());
}
BENCHMARK(BM_Lookup)->Args({16, 4})->Args({32, 4});

static void BM_Assemble(benchmark::State& state) {
    const int grid = static_cast<int>(state.range(0));
    const int t = 64, d = 64;
    auto g1 = random_map(128, grid, grid, 6);
    auto g2 = random_map(128, grid, grid, 7);
    ContextBundle<float> ctx;
    ctx.net1 = random_map(t, grid, grid, 8);
    ctx.net2 = random_map(t, grid, grid, 9);
    GateParams<float> params;
    params.d = d;
    params.t = t;
    std::mt19937 rng(10);
    std::uniform_real_distribution<float> w(-0.1f, 0.1f);
    params.wq.resize(static_cast<size_t>(d) * t);
    params.wk.resize(static_cast<size_t>(d) * t);
    for (float& x : params.wq) x = w(rng);
    for (float& x : params.wk) x = w(rng);
    params.lambda = 0.02f;
    auto c = build_all_pairs(g1, g2);
    for (auto _ : state) {
        auto v = assemble(c, ctx, params);
        benchmark::DoNotOptimize(v.data.data());
    }
}
BENCHMARK(BM_Assemble)->Arg(16)->Arg(32);

static void BM_GruStep(benchmark::State& state) {
    const int grid = static_cast<int>(state.range(0));
    ModelConfig cfg;
    cfg.match_channels = 64;
    cfg.context_channels = 128;
    cfg.qk_channels = 64;
    auto model = make_model<float>(cfg);
    const int t = cfg.net_channels();
    GRUState<float> gru{random_map(t, grid, grid, 11)};
    CorrFeatures<float> corr(grid, grid, cfg.corr_length());
    std::mt19937 rng(12);
    std::uniform_real_distribution<float> d(-0.5f, 0.5f);
    for (float& v : corr.data) v = d(rng);
    auto inp = random_map(t, grid, grid, 13);
    FlowField<float> flow(grid, grid);
    for (auto _ : state) {
        GRUState<float> next;
        FlowField<float> flow_next;
        gru_step(model.gru, gru, corr, inp, flow, cfg.radius, next, flow_next);
        benchmark::DoNotOptimize(next.hidden.data.data());
    }
}
BENCHMARK(BM_GruStep)->Arg(16)->Arg(32);
