#pragma once

#include "cloudseg/tensor.hpp"
#include "cloudseg/weight_store.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cloudseg {

enum class Variant { b0, b1, b2, b3, b4, b5 };

const std::string& variant_name(Variant v);              // "b0".."b5"
Variant variant_from_name(const std::string& name);      // accepts "b0"/"B0"

struct ScalingCoefficients {
    double width_mult{1.0};
    double depth_mult{1.0};
    int resolution{224}; // carried for completeness; any /32-divisible input is accepted
};

ScalingCoefficients variant_coefficients(Variant v);

// One MBConv stage (repeats >= 1) or, after expand_stages, one concrete block
// instance (repeats = 1). se_ratio is the squeeze fraction of the *expanded*
// channels; absent disables the SE gate.
struct BlockSpec {
    int expansion_ratio{1};
    int kernel_size{3};
    int stride{1};
    std::int64_t in_channels{0};
    std::int64_t out_channels{0};
    int repeats{1};
    std::optional<double> se_ratio;
};

struct EncoderConfig {
    std::int64_t stem_channels{32}; // stem conv is 3x3 stride 2
    std::vector<BlockSpec> blocks;  // 7 stages for the baseline
    Variant variant{Variant::b0};
};

EncoderConfig baseline_b0_config();

// c*width_mult snapped to the nearest multiple of 8 (never below 8), bumped
// one step if snapping lost more than 10%.
std::int64_t round_channels(std::int64_t c, double width_mult);

// ceil(r * depth_mult)
int round_repeats(int r, double depth_mult);

EncoderConfig scale_config(const EncoderConfig& base, const ScalingCoefficients& coeffs, Variant label);
EncoderConfig variant_config(Variant v); // scale_config(baseline_b0_config(), ...)

// Unrolls stage repeats into concrete block instances: the first instance
// carries the stage stride and in->out transition, the rest are stride 1 with
// in = out.
std::vector<BlockSpec> expand_stages(const EncoderConfig& config);

std::int64_t expanded_channels(const BlockSpec& block); // in_channels * expansion_ratio
std::int64_t se_channels(const BlockSpec& block);       // 0 when se_ratio absent

struct MBConvWeights {
    std::optional<ConvWeights> expand; // 1x1, absent when expansion_ratio = 1
    std::optional<BatchNormParams> expand_bn;
    ConvWeights depthwise;
    BatchNormParams depthwise_bn;
    std::optional<ConvWeights> se_reduce; // 1x1 with bias
    std::optional<ConvWeights> se_expand; // 1x1 with bias
    ConvWeights project; // 1x1, linear
    BatchNormParams project_bn;
};

struct EncoderWeights {
    ConvWeights stem;
    BatchNormParams stem_bn;
    std::vector<MBConvWeights> blocks; // aligned with expand_stages(config)
};

// expand(+BN+swish) -> depthwise(+BN+swish) -> SE gate -> project(+BN, linear)
// -> residual add when stride 1 and in = out. spec must be a concrete block
// instance (repeats = 1).
Tensor mbconv_forward(const Tensor& input, const BlockSpec& spec, const MBConvWeights& weights);

struct FeaturePyramid {
    std::array<Tensor, 5> levels; // strides /2, /4, /8, /16, /32
};

FeaturePyramid encoder_forward(const Tensor& input, const EncoderConfig& config, const EncoderWeights& weights);

// Exact float count implied by the config (convs, biases, BN, SE).
std::int64_t encoder_parameter_count(const EncoderConfig& config);

enum class InitMode { zeros, random };

class Rng;

// zeros: conv kernels and biases 0, BN gamma 1/beta 0/mean 0/var 1.
// random: He-uniform kernels drawn from one seeded stream in store order.
EncoderWeights init_encoder_weights(const EncoderConfig& config, InitMode mode, std::uint64_t seed);
EncoderWeights init_encoder_weights(const EncoderConfig& config, InitMode mode, Rng& rng);

void encoder_to_store(const EncoderConfig& config, const EncoderWeights& weights, WeightStore& store,
                      const std::string& prefix = "encoder.");
EncoderWeights encoder_from_store(const EncoderConfig& config, const WeightStore& store,
                                  const std::string& prefix = "encoder.");

} // namespace cloudseg
