// Microbenchmarks for the hot paths: convolutions, resampling, the RLE codec,
// scoring, and one optimizer step. Run ./cloudseg_bench; no fixtures needed.

#include "cloudseg/encoder.hpp"
#include "cloudseg/losses.hpp"
#include "cloudseg/metrics.hpp"
#include "cloudseg/radam.hpp"
#include "cloudseg/rle.hpp"
#include "cloudseg/rng.hpp"
#include "cloudseg/tensor.hpp"

#include <benchmark/benchmark.h>

#include <cstdint>
#include <utility>
#include <vector>

using namespace cloudseg;

namespace {

Tensor random_tensor(Rng& rng, TensorShape shape, double lo = -1.0, double hi = 1.0) {
    Tensor t(shape);
    for (auto& v : t.data()) {
        v = static_cast<float>(rng.uniform(lo, hi));
    }
    return t;
}

BinaryMask random_mask(Rng& rng, std::int64_t h, std::int64_t w, double density) {
    BinaryMask m(h, w);
    for (auto& p : m.pixels) {
        p = rng.next_double() < density ? 1 : 0;
    }
    return m;
}

void bm_conv2d_3x3(benchmark::State& state) {
    Rng rng(1);
    const Tensor x = random_tensor(rng, {1, 32, 64, 64});
    ConvWeights w;
    w.kernel = random_tensor(rng, {32, 32, 3, 3});
    w.padding = 1;
    for (auto _ : state) {
        Tensor y = conv2d(x, w);
        benchmark::DoNotOptimize(y);
    }
}
BENCHMARK(bm_conv2d_3x3);

void bm_conv2d_1x1(benchmark::State& state) {
    Rng rng(2);
    const Tensor x = random_tensor(rng, {1, 96, 64, 64});
    ConvWeights w;
    w.kernel = random_tensor(rng, {24, 96, 1, 1});
    for (auto _ : state) {
        Tensor y = conv2d(x, w);
        benchmark::DoNotOptimize(y);
    }
}
BENCHMARK(bm_conv2d_1x1);

void bm_depthwise_5x5(benchmark::State& state) {
    Rng rng(3);
    const Tensor x = random_tensor(rng, {1, 96, 64, 64});
    ConvWeights w;
    w.kernel = random_tensor(rng, {96, 1, 5, 5});
    w.padding = 2;
    w.groups = 96;
    for (auto _ : state) {
        Tensor y = depthwise_conv2d(x, w);
        benchmark::DoNotOptimize(y);
    }
}
BENCHMARK(bm_depthwise_5x5);

void bm_mbconv_block(benchmark::State& state) {
    const EncoderConfig cfg = variant_config(Variant::b0);
    const std::vector<BlockSpec> instances = expand_stages(cfg);
    Rng wrng(4);
    const EncoderWeights weights = init_encoder_weights(cfg, InitMode::random, wrng);
    // stage-1 repeat instance: stride 1, 24 -> 24, expansion 6
    const std::size_t idx = 2;
    Rng rng(5);
    const Tensor x = random_tensor(rng, {1, instances[idx].in_channels, 32, 32}, 0.0, 1.0);
    for (auto _ : state) {
        Tensor y = mbconv_forward(x, instances[idx], weights.blocks[idx]);
        benchmark::DoNotOptimize(y);
    }
}
BENCHMARK(bm_mbconv_block);

void bm_bilinear_upsample2x(benchmark::State& state) {
    Rng rng(6);
    const Tensor x = random_tensor(rng, {1, 64, 64, 64});
    for (auto _ : state) {
        Tensor y = bilinear_upsample2x(x);
        benchmark::DoNotOptimize(y);
    }
}
BENCHMARK(bm_bilinear_upsample2x);

void bm_softmax_channels(benchmark::State& state) {
    Rng rng(7);
    const Tensor x = random_tensor(rng, {1, 4, 350, 525}, -3.0, 3.0);
    for (auto _ : state) {
        Tensor y = softmax_channels(x);
        benchmark::DoNotOptimize(y);
    }
}
BENCHMARK(bm_softmax_channels);

void bm_rle_encode(benchmark::State& state) {
    Rng rng(8);
    const BinaryMask mask = random_mask(rng, 350, 525, 0.4);
    for (auto _ : state) {
        Rle rle = rle_encode(mask);
        benchmark::DoNotOptimize(rle);
    }
}
BENCHMARK(bm_rle_encode);

void bm_rle_decode(benchmark::State& state) {
    Rng rng(9);
    const Rle rle = rle_encode(random_mask(rng, 350, 525, 0.4));
    for (auto _ : state) {
        BinaryMask mask = rle_decode(rle, 350, 525);
        benchmark::DoNotOptimize(mask);
    }
}
BENCHMARK(bm_rle_decode);

void bm_dice_coefficient(benchmark::State& state) {
    Rng rng(10);
    const BinaryMask a = random_mask(rng, 350, 525, 0.4);
    const BinaryMask b = random_mask(rng, 350, 525, 0.4);
    for (auto _ : state) {
        double d = dice_coefficient(a, b);
        benchmark::DoNotOptimize(d);
    }
}
BENCHMARK(bm_dice_coefficient);

void bm_combined_loss(benchmark::State& state) {
    Rng rng(11);
    const Tensor logits = random_tensor(rng, {1, 4, 128, 128}, -3.0, 3.0);
    Tensor target({1, 4, 128, 128});
    for (std::int64_t y = 0; y < 128; ++y) {
        for (std::int64_t x = 0; x < 128; ++x) {
            target.at(0, static_cast<std::int64_t>(rng.index(4)), y, x) = 1.0f;
        }
    }
    for (auto _ : state) {
        LossResult r = combined_loss(logits, target, LossWeights{});
        benchmark::DoNotOptimize(r);
    }
}
BENCHMARK(bm_combined_loss);

void bm_radam_step(benchmark::State& state) {
    const std::size_t n = 10000;
    RAdamHyperparams hp;
    RAdamState st(n, hp);
    std::vector<double> params(n, 1.0);
    std::vector<double> grads(n);
    Rng rng(12);
    for (auto& g : grads) {
        g = rng.uniform(-1.0, 1.0);
    }
    for (auto _ : state) {
        radam_step(st, params, grads, hp);
        benchmark::DoNotOptimize(params.data());
    }
}
BENCHMARK(bm_radam_step);

} // namespace
