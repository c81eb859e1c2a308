#include "cloudseg/encoder.hpp"
#include "cloudseg/rng.hpp"
#include "cloudseg/tensor.hpp"
#include "cloudseg/weight_store.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

using namespace cloudseg;

namespace {

// Independent channel rounding: snap to /8, keep at least 8, bump one step if
// the snap lost more than 10% of the scaled value.
std::int64_t oracle_round_channels(std::int64_t c, double wm) {
    const double scaled = static_cast<double>(c) * wm;
    std::int64_t snapped = std::max<std::int64_t>(8, (static_cast<std::int64_t>(scaled) + 4) / 8 * 8);
    if (static_cast<double>(snapped) < 0.9 * scaled) {
        snapped += 8;
    }
    return snapped;
}

int oracle_round_repeats(int r, double dm) {
    return static_cast<int>(std::ceil(static_cast<double>(r) * dm));
}

// Parameter spreadsheet: walks concrete block instances and adds up every
// float the layer definitions imply. Kept deliberately flat and literal.
std::int64_t spreadsheet_params(const EncoderConfig& cfg) {
    std::int64_t total = 0;
    const auto bn = [](std::int64_t ch) { return 4 * ch; }; // gamma, beta, mean, var

    total += 3LL * cfg.stem_channels * 3 * 3; // stem conv 3x3, no bias
    total += bn(cfg.stem_channels);

    for (const BlockSpec& b : expand_stages(cfg)) {
        const std::int64_t exp_ch = b.in_channels * b.expansion_ratio;
        if (b.expansion_ratio != 1) {
            total += b.in_channels * exp_ch; // expand 1x1, no bias
            total += bn(exp_ch);
        }
        total += exp_ch * b.kernel_size * b.kernel_size; // depthwise, no bias
        total += bn(exp_ch);
        if (b.se_ratio) {
            const std::int64_t se =
                std::max<std::int64_t>(1, std::llround(*b.se_ratio * static_cast<double>(exp_ch)));
            total += exp_ch * se + se;      // reduce 1x1 with bias
            total += se * exp_ch + exp_ch;  // expand 1x1 with bias
        }
        total += exp_ch * b.out_channels; // project 1x1, no bias
        total += bn(b.out_channels);
    }
    return total;
}

std::int64_t store_numel(const EncoderConfig& cfg) {
    const EncoderWeights w = init_encoder_weights(cfg, InitMode::zeros, 0);
    WeightStore store;
    encoder_to_store(cfg, w, store);
    return store.total_floats();
}

} // namespace

TEST_CASE("round_channels matches the reference arithmetic") {
    // spot values worked out by hand
    CHECK(round_channels(32, 1.0) == 32);
    CHECK(round_channels(32, 1.1) == 32);   // 35.2 snaps DOWN, no bump (32 >= 31.68)
    CHECK(round_channels(40, 1.1) == 48);   // 44 snaps up
    CHECK(round_channels(32, 1.2) == 40);   // 38.4 -> 40
    CHECK(round_channels(320, 1.6) == 512);
    CHECK(round_channels(8, 1.15) == 16);   // 9.2 snaps to 8, 8 < 0.9*9.2 -> bump to 16
    CHECK(round_channels(16, 0.5) == 8);    // floor at 8
    CHECK(round_channels(3, 1.0) == 8);     // floor at 8 even for tiny inputs

    Rng rng(83);
    for (int iter = 0; iter < 500; ++iter) {
        const std::int64_t c = 1 + static_cast<std::int64_t>(rng.index(512));
        const double wm = rng.uniform(0.4, 2.4);
        CHECK(round_channels(c, wm) == oracle_round_channels(c, wm));
    }
}

TEST_CASE("round_repeats is a ceiling") {
    CHECK(round_repeats(1, 1.0) == 1);
    CHECK(round_repeats(2, 1.1) == 3); // 2.2 -> 3
    CHECK(round_repeats(3, 1.4) == 5); // 4.2 -> 5
    CHECK(round_repeats(4, 2.2) == 9); // 8.8 -> 9
    CHECK(round_repeats(1, 2.2) == 3); // 2.2 -> 3

    Rng rng(84);
    for (int iter = 0; iter < 200; ++iter) {
        const int r = 1 + static_cast<int>(rng.index(6));
        const double dm = rng.uniform(0.6, 2.6);
        CHECK(round_repeats(r, dm) == oracle_round_repeats(r, dm));
    }
}

TEST_CASE("baseline stage table") {
    const EncoderConfig b0 = baseline_b0_config();
    CHECK(b0.stem_channels == 32);
    REQUIRE(b0.blocks.size() == 7);
    const int expect_exp[7] = {1, 6, 6, 6, 6, 6, 6};
    const int expect_k[7] = {3, 3, 5, 3, 5, 5, 3};
    const int expect_s[7] = {1, 2, 2, 2, 1, 2, 1};
    const std::int64_t expect_out[7] = {16, 24, 40, 80, 112, 192, 320};
    const int expect_r[7] = {1, 2, 2, 3, 3, 4, 1};
    std::int64_t in = 32;
    for (int i = 0; i < 7; ++i) {
        const BlockSpec& b = b0.blocks[static_cast<std::size_t>(i)];
        CHECK(b.expansion_ratio == expect_exp[i]);
        CHECK(b.kernel_size == expect_k[i]);
        CHECK(b.stride == expect_s[i]);
        CHECK(b.in_channels == in);
        CHECK(b.out_channels == expect_out[i]);
        CHECK(b.repeats == expect_r[i]);
        REQUIRE(b.se_ratio.has_value());
        CHECK(*b.se_ratio == 0.25);
        in = b.out_channels;
    }
}

TEST_CASE("variant tables equal an independent scaling pass") {
    const EncoderConfig base = baseline_b0_config();
    const std::map<Variant, std::pair<double, double>> coeffs{
        {Variant::b0, {1.0, 1.0}}, {Variant::b1, {1.0, 1.1}}, {Variant::b2, {1.1, 1.2}},
        {Variant::b3, {1.2, 1.4}}, {Variant::b4, {1.4, 1.8}}, {Variant::b5, {1.6, 2.2}},
    };
    for (const auto& [v, wd] : coeffs) {
        const ScalingCoefficients sc = variant_coefficients(v);
        CHECK(sc.width_mult == wd.first);
        CHECK(sc.depth_mult == wd.second);

        const EncoderConfig cfg = variant_config(v);
        CHECK(cfg.stem_channels == oracle_round_channels(base.stem_channels, wd.first));
        REQUIRE(cfg.blocks.size() == base.blocks.size());
        std::int64_t in = cfg.stem_channels;
        for (std::size_t i = 0; i < base.blocks.size(); ++i) {
            const BlockSpec& ref = base.blocks[i];
            const BlockSpec& got = cfg.blocks[i];
            CHECK(got.expansion_ratio == ref.expansion_ratio);
            CHECK(got.kernel_size == ref.kernel_size);
            CHECK(got.stride == ref.stride);
            CHECK(got.in_channels == in);
            CHECK(got.out_channels == oracle_round_channels(ref.out_channels, wd.first));
            CHECK(got.repeats == oracle_round_repeats(ref.repeats, wd.second));
            in = got.out_channels;
        }
    }
    CHECK(variant_config(Variant::b3).stem_channels == 40); // 32*1.2 = 38.4 -> 40
    CHECK(variant_coefficients(Variant::b4).resolution == 380);
}

TEST_CASE("expand_stages unrolls repeats") {
    const EncoderConfig b0 = variant_config(Variant::b0);
    const auto blocks0 = expand_stages(b0);
    CHECK(blocks0.size() == 16); // 1+2+2+3+3+4+1

    const auto blocks1 = expand_stages(variant_config(Variant::b1));
    CHECK(blocks1.size() == 23); // depth 1.1 ceils every stage up

    // first instance takes the stride and channel transition, the rest are 1:1
    int idx = 0;
    for (const BlockSpec& stage : b0.blocks) {
        for (int r = 0; r < stage.repeats; ++r, ++idx) {
            const BlockSpec& inst = blocks0[static_cast<std::size_t>(idx)];
            CHECK(inst.repeats == 1);
            CHECK(inst.stride == (r == 0 ? stage.stride : 1));
            CHECK(inst.in_channels == (r == 0 ? stage.in_channels : stage.out_channels));
            CHECK(inst.out_channels == stage.out_channels);
        }
    }
}

TEST_CASE("parameter counts agree with the spreadsheet and grow with the variant") {
    std::int64_t prev = 0;
    for (const Variant v : {Variant::b0, Variant::b1, Variant::b2, Variant::b3, Variant::b4, Variant::b5}) {
        const EncoderConfig cfg = variant_config(v);
        const std::int64_t counted = encoder_parameter_count(cfg);
        CHECK(counted == spreadsheet_params(cfg));
        CHECK(counted == store_numel(cfg));
        CHECK(counted > prev); // strictly increasing b0 -> b5
        prev = counted;
    }
}

TEST_CASE("zero-initialised mbconv blocks collapse as expected") {
    const EncoderConfig cfg = variant_config(Variant::b0);
    const auto blocks = expand_stages(cfg);
    const EncoderWeights w = init_encoder_weights(cfg, InitMode::zeros, 0);

    Rng rng(85);
    // residual instance: stride 1 and in == out -> forward is the identity
    // (all conv paths emit 0, residual adds x back)
    std::size_t residual = blocks.size();
    std::size_t plain = blocks.size();
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const bool res = blocks[i].stride == 1 && blocks[i].in_channels == blocks[i].out_channels;
        if (res && residual == blocks.size()) {
            residual = i;
        }
        if (!res && plain == blocks.size()) {
            plain = i;
        }
    }
    REQUIRE(residual < blocks.size());
    REQUIRE(plain < blocks.size());

    {
        const BlockSpec& spec = blocks[residual];
        const Tensor x = oracles::random_tensor(rng, {1, spec.in_channels, 8, 8});
        const Tensor y = mbconv_forward(x, spec, w.blocks[residual]);
        CHECK(oracles::max_abs_diff(x, y) == 0.0);
    }
    {
        const BlockSpec& spec = blocks[plain];
        const Tensor x = oracles::random_tensor(rng, {1, spec.in_channels, 8, 8});
        const Tensor y = mbconv_forward(x, spec, w.blocks[plain]);
        CHECK(y.shape().c == spec.out_channels);
        for (const float v : y.data()) {
            CHECK(v == 0.0f); // no residual path -> output is exactly zero
        }
    }
}

TEST_CASE("feature pyramid channel taps") {
    SUBCASE("b0") {
        const EncoderConfig cfg = variant_config(Variant::b0);
        const EncoderWeights w = init_encoder_weights(cfg, InitMode::random, 11);
        const Tensor x({1, 3, 64, 64});
        const FeaturePyramid fp = encoder_forward(x, cfg, w);
        const std::int64_t expect_c[5] = {16, 24, 40, 112, 320};
        for (int i = 0; i < 5; ++i) {
            const TensorShape s = fp.levels[static_cast<std::size_t>(i)].shape();
            CHECK(s.c == expect_c[i]);
            CHECK(s.h == 64 >> (i + 1));
            CHECK(s.w == 64 >> (i + 1));
        }
    }
    SUBCASE("b5") {
        const EncoderConfig cfg = variant_config(Variant::b5);
        const EncoderWeights w = init_encoder_weights(cfg, InitMode::random, 12);
        const Tensor x({1, 3, 64, 64});
        const FeaturePyramid fp = encoder_forward(x, cfg, w);
        const std::int64_t expect_c[5] = {24, 40, 64, 176, 512};
        for (int i = 0; i < 5; ++i) {
            CHECK(fp.levels[static_cast<std::size_t>(i)].shape().c == expect_c[i]);
        }
    }
}

TEST_CASE("weights survive a store round trip bitwise") {
    const EncoderConfig cfg = variant_config(Variant::b0);
    const EncoderWeights w = init_encoder_weights(cfg, InitMode::random, 21);
    WeightStore store;
    encoder_to_store(cfg, w, store);

    // naming spot checks
    CHECK(store.contains("encoder.stem.conv.kernel"));
    CHECK(store.contains("encoder.stem.bn.gamma"));
    CHECK(store.contains("encoder.block00.depthwise.kernel"));
    CHECK(store.contains("encoder.block00.se_reduce.bias"));
    CHECK(store.contains("encoder.block15.project.kernel"));
    CHECK(!store.contains("encoder.block00.expand.kernel")); // stage 1 has ratio 1
    CHECK(store.contains("encoder.block01.expand.kernel"));

    const EncoderWeights back = encoder_from_store(cfg, store);
    Rng rng(22);
    const Tensor x = oracles::random_tensor(rng, {1, 3, 32, 32});
    const FeaturePyramid a = encoder_forward(x, cfg, w);
    const FeaturePyramid b = encoder_forward(x, cfg, back);
    for (int i = 0; i < 5; ++i) {
        CHECK(oracles::max_abs_diff(a.levels[static_cast<std::size_t>(i)],
                                    b.levels[static_cast<std::size_t>(i)]) == 0.0);
    }

    // a missing entry is an error
    WeightStore partial;
    for (const WeightEntry& e : store.entries()) {
        if (e.name != "encoder.block03.project.kernel") {
            partial.add(e.name, e.shape, e.values);
        }
    }
    CHECK_THROWS(encoder_from_store(cfg, partial));
}

TEST_CASE("deterministic random init") {
    const EncoderConfig cfg = variant_config(Variant::b0);
    const EncoderWeights a = init_encoder_weights(cfg, InitMode::random, 31);
    const EncoderWeights b = init_encoder_weights(cfg, InitMode::random, 31);
    const EncoderWeights c = init_encoder_weights(cfg, InitMode::random, 32);
    CHECK(oracles::max_abs_diff(a.stem.kernel, b.stem.kernel) == 0.0);
    CHECK(oracles::max_abs_diff(a.blocks[5].depthwise.kernel, b.blocks[5].depthwise.kernel) == 0.0);
    CHECK(oracles::max_abs_diff(a.stem.kernel, c.stem.kernel) > 0.0);
}

TEST_CASE("variant names") {
    CHECK(variant_name(Variant::b3) == "b3");
    CHECK(variant_from_name("b4") == Variant::b4);
    CHECK(variant_from_name("B4") == Variant::b4);
    CHECK_THROWS_AS(variant_from_name("b9"), std::invalid_argument);
}

TEST_CASE("encoder input validation") {
    const EncoderConfig cfg = variant_config(Variant::b0);
    const EncoderWeights w = init_encoder_weights(cfg, InitMode::zeros, 0);
    CHECK_THROWS_AS(encoder_forward(Tensor({1, 3, 30, 64}), cfg, w), std::invalid_argument); // h % 32
    CHECK_THROWS_AS(encoder_forward(Tensor({1, 4, 64, 64}), cfg, w), std::invalid_argument); // channels
}
