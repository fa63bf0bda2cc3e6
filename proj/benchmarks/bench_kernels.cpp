#include <benchmark/benchmark.h>

#include "strawdet/detect.hpp"
#include "strawdet/rng.hpp"
#include "strawdet/runtime.hpp"
#include "strawdet/tensor.hpp"

using namespace strawdet;

namespace {

Tensor random_tensor(uint64_t seed, int n, int c, int h, int w) {
    Tensor t(n, c, h, w);
    Rng rng(seed);
    for (float& v : t.data) v = float(rng.uniform(-1.0, 1.0));
    return t;
}

ConvParams random_conv(uint64_t seed, int c_in, int c_out, int k, int s) {
    ConvParams conv;
    conv.in_channels = c_in;
    conv.out_channels = c_out;
    conv.kernel = k;
    conv.stride = s;
    conv.padding = (k - 1) / 2;
    conv.weights.resize(size_t(conv.weight_count()));
    conv.bias.resize(c_out);
    Rng rng(seed);
    for (float& v : conv.weights) v = float(rng.uniform(-0.1, 0.1));
    for (float& v : conv.bias) v = float(rng.uniform(-0.1, 0.1));
    return conv;
}

} // namespace

static void BM_Conv3x3(benchmark::State& state) {
    const int c = int(state.range(0));
    const int hw = int(state.range(1));
    const Tensor in = random_tensor(1, 1, c, hw, hw);
    const ConvParams conv = random_conv(2, c, c, 3, 1);
    for (auto _ : state) {
        Tensor out = conv2d(in, conv);
        benchmark::DoNotOptimize(out.data.data());
    }
    state.SetItemsProcessed(state.iterations() * 2 * conv.weight_count() *
                            int64_t(hw) * hw);
}
BENCHMARK(BM_Conv3x3)->Args({64, 80})->Args({128, 40})->Args({256, 20});

static void BM_Conv1x1(benchmark::State& state) {
    const int c = int(state.range(0));
    const int hw = int(state.range(1));
    const Tensor in = random_tensor(3, 1, c, hw, hw);
    const ConvParams conv = random_conv(4, c, c / 2, 1, 1);
    for (auto _ : state) {
        Tensor out = conv2d(in, conv);
        benchmark::DoNotOptimize(out.data.data());
    }
    state.SetItemsProcessed(state.iterations() * 2 * conv.weight_count() *
                            int64_t(hw) * hw);
}
BENCHMARK(BM_Conv1x1)->Args({128, 80})->Args({512, 20});

static void BM_MaxPool5(benchmark::State& state) {
    const Tensor in = random_tensor(5, 1, 256, 20, 20);
    for (auto _ : state) {
        Tensor out = maxpool2d(in, 5, 1, 2);
        benchmark::DoNotOptimize(out.data.data());
    }
}
BENCHMARK(BM_MaxPool5);

static void BM_Nms(benchmark::State& state) {
    Rng rng(6);
    std::vector<Detection> dets;
    for (int i = 0; i < int(state.range(0)); ++i)
        dets.push_back({float(rng.uniform(0, 640)), float(rng.uniform(0, 640)),
                        float(rng.uniform(5, 80)), float(rng.uniform(5, 80)),
                        int(rng.below(3)), float(rng.uniform01())});
    for (auto _ : state) {
        auto kept = nms(dets, 0.45f);
        benchmark::DoNotOptimize(kept.data());
    }
}
BENCHMARK(BM_Nms)->Arg(100)->Arg(1000);

static void BM_Forward(benchmark::State& state) {
    const ArchId arch = state.range(0) == 0 ? ArchId::yolov5s
                                            : ArchId::yolov5s_straw;
    const ModelGraph g = build_model(arch, 3);
    const Runtime rt(g, init_weights(g, 7));
    const Tensor in = random_tensor(8, 1, 3, 320, 320);
    for (auto _ : state) {
        HeadOutputs heads = rt.forward(in);
        benchmark::DoNotOptimize(heads[0].data.data());
    }
}
BENCHMARK(BM_Forward)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
