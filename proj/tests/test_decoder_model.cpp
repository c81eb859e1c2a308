#include "cloudseg/decoder.hpp"
#include "cloudseg/image.hpp"
#include "cloudseg/model.hpp"
#include "cloudseg/rng.hpp"
#include "cloudseg/tensor.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <array>
#include <cstdint>

using namespace cloudseg;

namespace {

// Independent decoder parameter spreadsheet: per block, convs_per_block 3x3
// unbiased convs with BN, first conv eats upsampled-deep + skip channels.
std::int64_t oracle_decoder_params(const DecoderConfig& dec, const EncoderConfig& enc) {
    const auto ins = decoder_block_in_channels(dec, enc);
    std::int64_t total = 0;
    for (std::size_t b = 0; b < 5; ++b) {
        std::int64_t in = ins[b];
        for (int k = 0; k < dec.convs_per_block; ++k) {
            total += in * dec.channels[b] * 3 * 3; // conv kernel
            total += 4 * dec.channels[b];          // BN
            in = dec.channels[b];
        }
    }
    return total;
}

} // namespace

TEST_CASE("decoder input channels chain deep-to-shallow with encoder taps") {
    const DecoderConfig dec;
    const EncoderConfig enc = variant_config(Variant::b0);
    const auto ins = decoder_block_in_channels(dec, enc);
    // taps (deep to shallow): 320, 112, 40, 24, 16
    CHECK(ins[0] == 320 + 112);
    CHECK(ins[1] == 256 + 40);
    CHECK(ins[2] == 128 + 24);
    CHECK(ins[3] == 64 + 16);
    CHECK(ins[4] == 32); // shallowest block has no skip: /2 -> /1
}

TEST_CASE("decoder_block shapes and channel ordering") {
    const DecoderConfig dec;
    const EncoderConfig enc = variant_config(Variant::b0);
    Rng rng(91);
    const DecoderWeights w = init_decoder_weights(dec, enc, InitMode::random, rng);

    const Tensor deep = oracles::random_tensor(rng, {1, 320, 4, 4});
    const Tensor skip = oracles::random_tensor(rng, {1, 112, 8, 8});
    const Tensor out = decoder_block(deep, &skip, w.blocks[0], dec.channels[0]);
    CHECK(out.shape() == TensorShape{1, 256, 8, 8});

    const Tensor deepest = oracles::random_tensor(rng, {1, 32, 8, 8});
    const Tensor top = decoder_block(deepest, nullptr, w.blocks[4], dec.channels[4]);
    CHECK(top.shape() == TensorShape{1, 16, 16, 16});

    // channel mismatch inside the block is rejected
    const Tensor bad_skip = oracles::random_tensor(rng, {1, 64, 8, 8});
    CHECK_THROWS_AS(decoder_block(deep, &bad_skip, w.blocks[0], dec.channels[0]), std::invalid_argument);
}

TEST_CASE("decoder parameter count matches the spreadsheet") {
    const DecoderConfig dec;
    for (const Variant v : {Variant::b0, Variant::b3, Variant::b5}) {
        const EncoderConfig enc = variant_config(v);
        CHECK(decoder_parameter_count(dec, enc) == oracle_decoder_params(dec, enc));
    }
    // decoder is much smaller than the encoder for b0
    const EncoderConfig b0 = variant_config(Variant::b0);
    CHECK(decoder_parameter_count(dec, b0) > 0);
}

TEST_CASE("model parameter count decomposes into encoder + decoder + head") {
    const DecoderConfig dec;
    const SegmentationModel model = build_efficientunet(Variant::b0, dec, InitMode::zeros);
    const std::int64_t enc_params = encoder_parameter_count(model.enc_config);
    const std::int64_t dec_params = decoder_parameter_count(dec, model.enc_config);
    const std::int64_t head_params = dec.channels[4] * kClassCount + kClassCount;
    CHECK(model_parameter_count(model) == enc_params + dec_params + head_params);
    CHECK(model_parameter_count(model) == model_to_store(model).total_floats());
}

TEST_CASE("model forward maps (1,3,64,64) to (1,4,64,64)") {
    const SegmentationModel model = build_efficientunet(Variant::b0, DecoderConfig{}, InitMode::random, 7);
    Rng rng(92);
    const Tensor x = oracles::random_tensor(rng, {1, 3, 64, 64}, 0.0, 1.0);
    const Tensor logits = model_forward(model, x);
    CHECK(logits.shape() == TensorShape{1, 4, 64, 64});
    bool nonzero = false;
    for (const float v : logits.data()) {
        REQUIRE(std::isfinite(v));
        nonzero = nonzero || v != 0.0f;
    }
    CHECK(nonzero);

    // trunk features feed a 1x1 head of the same spatial size
    const Tensor trunk = model_trunk_forward(model, x);
    CHECK(trunk.shape() == TensorShape{1, 16, 64, 64});
}

TEST_CASE("zero-initialised model emits exactly zero logits") {
    const SegmentationModel model = build_efficientunet(Variant::b0, DecoderConfig{}, InitMode::zeros);
    const Tensor x({1, 3, 32, 32});
    const Tensor logits = model_forward(model, x);
    for (const float v : logits.data()) {
        CHECK(v == 0.0f);
    }
}

TEST_CASE("model weights survive a store round trip bitwise") {
    const SegmentationModel model = build_efficientunet(Variant::b0, DecoderConfig{}, InitMode::random, 13);
    const WeightStore store = model_to_store(model);
    CHECK(store.contains("head.kernel"));
    CHECK(store.contains("head.bias"));
    CHECK(store.contains("decoder.block0.conv0.kernel"));

    const SegmentationModel back = build_efficientunet(Variant::b0, DecoderConfig{}, store);
    Rng rng(93);
    const Tensor x = oracles::random_tensor(rng, {1, 3, 32, 32}, 0.0, 1.0);
    CHECK(oracles::max_abs_diff(model_forward(model, x), model_forward(back, x)) == 0.0);
}

TEST_CASE("same seed, same model; different seed, different model") {
    const SegmentationModel a = build_efficientunet(Variant::b0, DecoderConfig{}, InitMode::random, 5);
    const SegmentationModel b = build_efficientunet(Variant::b0, DecoderConfig{}, InitMode::random, 5);
    const SegmentationModel c = build_efficientunet(Variant::b0, DecoderConfig{}, InitMode::random, 6);
    CHECK(oracles::max_abs_diff(a.head.kernel, b.head.kernel) == 0.0);
    CHECK(oracles::max_abs_diff(a.enc_weights.stem.kernel, b.enc_weights.stem.kernel) == 0.0);
    CHECK(oracles::max_abs_diff(a.enc_weights.stem.kernel, c.enc_weights.stem.kernel) > 0.0);
}

TEST_CASE("prepare_input") {
    SUBCASE("grayscale replicates to three channels") {
        Image img(32, 32, 1);
        for (std::size_t i = 0; i < img.pixels.size(); ++i) {
            img.pixels[i] = static_cast<std::uint8_t>(i * 16);
        }
        const Tensor t = prepare_input(img, 32, 32);
        CHECK(t.shape() == TensorShape{1, 3, 32, 32});
        for (std::int64_t y = 0; y < 32; ++y) {
            for (std::int64_t x = 0; x < 32; ++x) {
                CHECK(t.at(0, 0, y, x) == t.at(0, 1, y, x));
                CHECK(t.at(0, 0, y, x) == t.at(0, 2, y, x));
            }
        }
        CHECK(t.at(0, 0, 0, 1) == doctest::Approx(16.0 / 255.0));
    }
    SUBCASE("same-size rgb passes through exactly") {
        Image img(32, 32, 3);
        for (std::size_t i = 0; i < img.pixels.size(); ++i) {
            img.pixels[i] = static_cast<std::uint8_t>(i * 5);
        }
        const Tensor t = prepare_input(img, 32, 32);
        CHECK(t.at(0, 0, 0, 0) == 0.0f);
        CHECK(t.at(0, 1, 0, 0) == doctest::Approx(5.0 / 255.0));
        // row 1 col 0 red sample: flat index (1*32)*3 = 96 -> (96*5) mod 256 = 224
        CHECK(t.at(0, 0, 1, 0) == doctest::Approx(224.0 / 255.0));
    }
    SUBCASE("resizes to the requested dims") {
        const Image img(10, 14, 3);
        const Tensor t = prepare_input(img, 32, 32);
        CHECK(t.shape() == TensorShape{1, 3, 32, 32});
    }
    SUBCASE("rejects non-multiple-of-32 targets") {
        const Image img(10, 14, 3);
        CHECK_THROWS_AS(prepare_input(img, 30, 32), std::invalid_argument);
    }
}

TEST_CASE("default_target floors to multiples of 32") {
    CHECK(default_target(1400, 2100) == std::pair<std::int64_t, std::int64_t>{1312, 2080});
    CHECK(default_target(64, 64) == std::pair<std::int64_t, std::int64_t>{64, 64});
    CHECK(default_target(65, 95) == std::pair<std::int64_t, std::int64_t>{64, 64});
    CHECK(default_target(31, 400) == std::pair<std::int64_t, std::int64_t>{32, 384}); // never below 32
}

TEST_CASE("model forward input validation") {
    const SegmentationModel model = build_efficientunet(Variant::b0, DecoderConfig{}, InitMode::zeros);
    CHECK_THROWS_AS(model_forward(model, Tensor({1, 3, 30, 64})), std::invalid_argument);
    CHECK_THROWS_AS(model_forward(model, Tensor({1, 1, 64, 64})), std::invalid_argument);
}
