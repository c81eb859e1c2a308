#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cloudseg {

struct TensorShape {
    std::int64_t n{1};
    std::int64_t c{1};
    std::int64_t h{1};
    std::int64_t w{1};

    std::int64_t numel() const { return n * c * h * w; }
    bool operator==(const TensorShape&) const = default;
    std::string str() const;
};

// Dense rank-4 float32 array in n-major (n, c, h, w) flat order. Channels may
// be zero (an empty feature map); the other dims are at least 1. Ops treat
// tensors as immutable values and return fresh results.
class Tensor {
public:
    Tensor() : Tensor(TensorShape{1, 1, 1, 1}) {}
    explicit Tensor(TensorShape shape);
    Tensor(TensorShape shape, std::vector<float> data);

    static Tensor full(TensorShape shape, float value);

    const TensorShape& shape() const { return shape_; }
    std::int64_t numel() const { return shape_.numel(); }

    std::int64_t offset(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
        return ((n * shape_.c + c) * shape_.h + h) * shape_.w + w;
    }
    float at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
        return data_[static_cast<std::size_t>(offset(n, c, h, w))];
    }
    float& at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) {
        return data_[static_cast<std::size_t>(offset(n, c, h, w))];
    }
    // Start of the (n, c) spatial plane.
    const float* plane(std::int64_t n, std::int64_t c) const {
        return data_.data() + offset(n, c, 0, 0);
    }
    float* plane(std::int64_t n, std::int64_t c) { return data_.data() + offset(n, c, 0, 0); }

    std::span<const float> data() const { return data_; }
    std::span<float> data() { return data_; }

    bool all_finite() const;

private:
    TensorShape shape_;
    std::vector<float> data_;
};

enum class Activation { relu, swish, sigmoid, linear };

// Convolution filter bank plus its geometry. The kernel tensor is laid out
// (out_channels, in_channels_per_group, kh, kw) reusing the NCHW container.
struct ConvWeights {
    Tensor kernel;
    std::optional<std::vector<float>> bias;
    int stride{1};
    int padding{0};
    int groups{1};

    std::int64_t out_channels() const { return kernel.shape().n; }
    std::int64_t in_channels() const { return kernel.shape().c * groups; }
    std::int64_t kh() const { return kernel.shape().h; }
    std::int64_t kw() const { return kernel.shape().w; }
    // Total stored floats (kernel plus bias).
    std::int64_t parameter_count() const;
};

struct BatchNormParams {
    std::vector<float> gamma;
    std::vector<float> beta;
    std::vector<float> mean;
    std::vector<float> var;
    float eps{1e-3f};
};

// Cross-correlation (no kernel flip), symmetric zero padding. Output spatial
// dims are floor((in + 2*pad - k) / stride) + 1. Accumulates in float64 and
// stores float32.
Tensor conv2d(const Tensor& input, const ConvWeights& weights);

// conv2d restricted to groups == channels, one kernel per channel.
Tensor depthwise_conv2d(const Tensor& input, const ConvWeights& weights);

Tensor batchnorm_infer(const Tensor& input, const BatchNormParams& bn);
Tensor batchnorm_infer(const Tensor& input,
                       std::span<const float> mean, std::span<const float> var,
                       std::span<const float> gamma, std::span<const float> beta,
                       float eps);

Tensor activate(const Tensor& input, Activation kind);

// (n, c, h, w) -> (n, c, 1, 1), mean over the spatial plane.
Tensor global_avg_pool(const Tensor& input);

// Doubles both spatial dims. Half-pixel centers: the source coordinate for
// destination index d is (d + 0.5) / 2 - 0.5, clamped to the valid range.
Tensor bilinear_upsample2x(const Tensor& input);

// General bilinear resize with the same half-pixel-center convention.
Tensor bilinear_resize(const Tensor& input, std::int64_t out_h, std::int64_t out_w);

// Stacks b's channels after a's. Batch and spatial dims must agree.
Tensor concat_channels(const Tensor& a, const Tensor& b);

// Per-site softmax over the channel axis, max-subtracted for stability.
Tensor softmax_channels(const Tensor& input);

} // namespace cloudseg
