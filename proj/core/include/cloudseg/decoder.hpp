#pragma once

#include "cloudseg/encoder.hpp"
#include "cloudseg/rng.hpp"
#include "cloudseg/tensor.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace cloudseg {

struct DecoderConfig {
    std::array<std::int64_t, 5> channels{256, 128, 64, 32, 16}; // deepest to shallowest
    int convs_per_block{2};
};

struct DecoderBlockWeights {
    std::vector<ConvWeights> convs;      // 3x3, pad 1, no bias
    std::vector<BatchNormParams> bns;    // one per conv
};

struct DecoderWeights {
    std::array<DecoderBlockWeights, 5> blocks;
};

// bilinear_upsample2x(deep) -> concat skip (when present) -> convs_per_block
// x (3x3 conv + BN + relu). Output is at skip resolution (2x deep).
Tensor decoder_block(const Tensor& deep, const Tensor* skip, const DecoderBlockWeights& weights,
                     std::int64_t out_channels);

// Exact float count of the 5 decoder blocks for taps of the given encoder.
std::int64_t decoder_parameter_count(const DecoderConfig& dec, const EncoderConfig& enc);

// Per-block input channel counts: deep chain + skip contributions.
std::array<std::int64_t, 5> decoder_block_in_channels(const DecoderConfig& dec, const EncoderConfig& enc);

DecoderWeights init_decoder_weights(const DecoderConfig& dec, const EncoderConfig& enc, InitMode mode, Rng& rng);

void decoder_to_store(const DecoderWeights& weights, WeightStore& store, const std::string& prefix = "decoder.");
DecoderWeights decoder_from_store(const DecoderConfig& dec, const EncoderConfig& enc, const WeightStore& store,
                                  const std::string& prefix = "decoder.");

} // namespace cloudseg
