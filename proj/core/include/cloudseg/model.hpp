#pragma once

#include "cloudseg/decoder.hpp"
#include "cloudseg/encoder.hpp"
#include "cloudseg/image.hpp"
#include "cloudseg/tensor.hpp"
#include "cloudseg/weight_store.hpp"

#include <cstdint>
#include <utility>

namespace cloudseg {

// EfficientNet encoder + UNet decoder + 4-class pointwise head.
struct SegmentationModel {
    EncoderConfig enc_config;
    DecoderConfig dec_config;
    EncoderWeights enc_weights;
    DecoderWeights dec_weights;
    ConvWeights head; // 1x1 to 4 classes, with bias
};

SegmentationModel build_efficientunet(Variant variant, const DecoderConfig& dec, InitMode init,
                                      std::uint64_t seed = 0);
SegmentationModel build_efficientunet(Variant variant, const DecoderConfig& dec, const WeightStore& store);

// (n, 3, h, w) with h, w divisible by 32 -> logits (n, 4, h, w).
Tensor model_forward(const SegmentationModel& model, const Tensor& input);

// Decoder output before the head: (n, dec.channels[4], h, w) frozen features
// for head-only training.
Tensor model_trunk_forward(const SegmentationModel& model, const Tensor& input);

std::int64_t model_parameter_count(const SegmentationModel& model);

WeightStore model_to_store(const SegmentationModel& model);

// Bilinear resize to (target_h, target_w) and scale pixels to [0,1].
// Grayscale images are replicated to 3 channels.
Tensor prepare_input(const Image& image, std::int64_t target_h, std::int64_t target_w);

// (1312, 2080) for native 1400x2100 inputs, otherwise dims floored to the
// nearest multiple of 32.
std::pair<std::int64_t, std::int64_t> default_target(std::int64_t h, std::int64_t w);

} // namespace cloudseg
