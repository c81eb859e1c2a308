#include "cloudseg/tensor.hpp"

#include "cloudseg/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace cloudseg {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) {
        throw std::invalid_argument(msg);
    }
}

// ceil(a / b) for b > 0, correct for negative a
std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
    return a >= 0 ? (a + b - 1) / b : -((-a) / b);
}

// floor(a / b) for b > 0; plain / truncates toward zero for negative a
std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    return a >= 0 ? a / b : -((-a + b - 1) / b);
}

} // namespace

std::string TensorShape::str() const {
    std::ostringstream os;
    os << "(n=" << n << ", c=" << c << ", h=" << h << ", w=" << w << ")";
    return os.str();
}

Tensor::Tensor(TensorShape shape) : shape_(shape) {
    require(shape.n >= 1 && shape.h >= 1 && shape.w >= 1 && shape.c >= 0,
            "tensor dims must be positive (channels may be zero), got " + shape.str());
    data_.assign(static_cast<std::size_t>(shape.numel()), 0.0f);
}

Tensor::Tensor(TensorShape shape, std::vector<float> data) : shape_(shape), data_(std::move(data)) {
    require(shape.n >= 1 && shape.h >= 1 && shape.w >= 1 && shape.c >= 0,
            "tensor dims must be positive (channels may be zero), got " + shape.str());
    require(static_cast<std::int64_t>(data_.size()) == shape.numel(),
            "tensor data length " + std::to_string(data_.size()) + " does not match shape " + shape.str());
}

Tensor Tensor::full(TensorShape shape, float value) {
    Tensor t(shape);
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

std::int64_t ConvWeights::parameter_count() const {
    return kernel.numel() + (bias ? static_cast<std::int64_t>(bias->size()) : 0);
}

Tensor conv2d(const Tensor& input, const ConvWeights& weights) {
    const TensorShape in = input.shape();
    const TensorShape k = weights.kernel.shape();
    const std::int64_t stride = weights.stride;
    const std::int64_t pad = weights.padding;
    const std::int64_t groups = weights.groups;

    require(stride >= 1, "conv2d: stride must be >= 1");
    require(pad >= 0, "conv2d: padding must be >= 0");
    require(groups >= 1, "conv2d: groups must be >= 1");
    require(k.n % groups == 0,
            "conv2d: out_channels " + std::to_string(k.n) + " not divisible by groups " + std::to_string(groups));
    require(in.c == groups * k.c,
            "conv2d: input channels " + std::to_string(in.c) + " != groups*in_per_group = " +
                std::to_string(groups) + "*" + std::to_string(k.c));
    require(in.h + 2 * pad >= k.h && in.w + 2 * pad >= k.w,
            "conv2d: kernel " + k.str() + " larger than padded input " + in.str());
    if (weights.bias) {
        require(static_cast<std::int64_t>(weights.bias->size()) == k.n,
                "conv2d: bias length " + std::to_string(weights.bias->size()) + " != out_channels " +
                    std::to_string(k.n));
    }

    const std::int64_t out_h = (in.h + 2 * pad - k.h) / stride + 1;
    const std::int64_t out_w = (in.w + 2 * pad - k.w) / stride + 1;
    Tensor out({in.n, k.n, out_h, out_w});

    const std::int64_t oc_per_group = k.n / groups;
    const std::int64_t plane_count = in.n * k.n;
    const float* kernel = weights.kernel.data().data();
    const std::int64_t kplane = k.c * k.h * k.w;

    parallel_for(0, plane_count, [&](std::int64_t lo, std::int64_t hi) {
        std::vector<double> acc(static_cast<std::size_t>(out_h * out_w));
        for (std::int64_t p = lo; p < hi; ++p) {
            const std::int64_t nb = p / k.n;
            const std::int64_t oc = p % k.n;
            const std::int64_t g = oc / oc_per_group;
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::int64_t icg = 0; icg < k.c; ++icg) {
                const float* in_plane = input.plane(nb, g * k.c + icg);
                const float* kbase = kernel + oc * kplane + icg * k.h * k.w;
                for (std::int64_t ky = 0; ky < k.h; ++ky) {
                    for (std::int64_t kx = 0; kx < k.w; ++kx) {
                        const double kval = static_cast<double>(kbase[ky * k.w + kx]);
                        const std::int64_t oy_lo = std::max<std::int64_t>(0, ceil_div(pad - ky, stride));
                        const std::int64_t oy_hi = std::min(out_h - 1, floor_div(in.h - 1 + pad - ky, stride));
                        const std::int64_t ox_lo = std::max<std::int64_t>(0, ceil_div(pad - kx, stride));
                        const std::int64_t ox_hi = std::min(out_w - 1, floor_div(in.w - 1 + pad - kx, stride));
                        for (std::int64_t oy = oy_lo; oy <= oy_hi; ++oy) {
                            const float* row = in_plane + (oy * stride + ky - pad) * in.w + (kx - pad);
                            double* arow = acc.data() + oy * out_w;
                            if (stride == 1) {
                                for (std::int64_t ox = ox_lo; ox <= ox_hi; ++ox) {
                                    arow[ox] += kval * static_cast<double>(row[ox]);
                                }
                            } else {
                                for (std::int64_t ox = ox_lo; ox <= ox_hi; ++ox) {
                                    arow[ox] += kval * static_cast<double>(row[ox * stride]);
                                }
                            }
                        }
                    }
                }
            }
            const double b = weights.bias ? static_cast<double>((*weights.bias)[static_cast<std::size_t>(oc)]) : 0.0;
            float* out_plane = out.plane(nb, oc);
            for (std::size_t i = 0; i < acc.size(); ++i) {
                out_plane[i] = static_cast<float>(acc[i] + b);
            }
        }
    });
    return out;
}

Tensor depthwise_conv2d(const Tensor& input, const ConvWeights& weights) {
    require(weights.groups == input.shape().c,
            "depthwise_conv2d: groups " + std::to_string(weights.groups) + " must equal input channels " +
                std::to_string(input.shape().c));
    require(weights.kernel.shape().n == input.shape().c,
            "depthwise_conv2d: out_channels must equal input channels");
    require(weights.kernel.shape().c == 1, "depthwise_conv2d: kernel in_channels_per_group must be 1");
    return conv2d(input, weights);
}

Tensor batchnorm_infer(const Tensor& input, const BatchNormParams& bn) {
    return batchnorm_infer(input, bn.mean, bn.var, bn.gamma, bn.beta, bn.eps);
}

Tensor batchnorm_infer(const Tensor& input,
                       std::span<const float> mean, std::span<const float> var,
                       std::span<const float> gamma, std::span<const float> beta,
                       float eps) {
    const TensorShape s = input.shape();
    const auto c = static_cast<std::size_t>(s.c);
    require(mean.size() == c && var.size() == c && gamma.size() == c && beta.size() == c,
            "batchnorm_infer: parameter vectors must have length " + std::to_string(c));
    require(eps >= 0.0f, "batchnorm_infer: eps must be >= 0");
    for (std::size_t i = 0; i < c; ++i) {
        require(var[i] >= 0.0f, "batchnorm_infer: variance must be >= 0 (channel " + std::to_string(i) + ")");
        require(static_cast<double>(var[i]) + eps > 0.0, "batchnorm_infer: var + eps must be positive (channel " +
                                                             std::to_string(i) + ")");
    }

    Tensor out(s);
    const std::int64_t plane = s.h * s.w;
    for (std::int64_t n = 0; n < s.n; ++n) {
        for (std::int64_t ch = 0; ch < s.c; ++ch) {
            const auto ci = static_cast<std::size_t>(ch);
            const double inv = 1.0 / std::sqrt(static_cast<double>(var[ci]) + static_cast<double>(eps));
            const double g = gamma[ci];
            const double m = mean[ci];
            const double b = beta[ci];
            const float* src = input.plane(n, ch);
            float* dst = out.plane(n, ch);
            for (std::int64_t i = 0; i < plane; ++i) {
                dst[i] = static_cast<float>(g * ((static_cast<double>(src[i]) - m) * inv) + b);
            }
        }
    }
    return out;
}

Tensor activate(const Tensor& input, Activation kind) {
    Tensor out(input.shape());
    const auto src = input.data();
    auto dst = out.data();
    switch (kind) {
    case Activation::relu:
        for (std::size_t i = 0; i < src.size(); ++i) {
            dst[i] = src[i] > 0.0f ? src[i] : 0.0f;
        }
        break;
    case Activation::sigmoid:
        for (std::size_t i = 0; i < src.size(); ++i) {
            dst[i] = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(src[i]))));
        }
        break;
    case Activation::swish:
        for (std::size_t i = 0; i < src.size(); ++i) {
            const double x = src[i];
            dst[i] = static_cast<float>(x / (1.0 + std::exp(-x)));
        }
        break;
    case Activation::linear:
        std::copy(src.begin(), src.end(), dst.begin());
        break;
    }
    return out;
}

Tensor global_avg_pool(const Tensor& input) {
    const TensorShape s = input.shape();
    Tensor out({s.n, s.c, 1, 1});
    const std::int64_t plane = s.h * s.w;
    for (std::int64_t n = 0; n < s.n; ++n) {
        for (std::int64_t c = 0; c < s.c; ++c) {
            const float* src = input.plane(n, c);
            double sum = 0.0;
            for (std::int64_t i = 0; i < plane; ++i) {
                sum += src[i];
            }
            out.at(n, c, 0, 0) = static_cast<float>(sum / static_cast<double>(plane));
        }
    }
    return out;
}

Tensor bilinear_upsample2x(const Tensor& input) {
    const TensorShape s = input.shape();
    return bilinear_resize(input, 2 * s.h, 2 * s.w);
}

Tensor bilinear_resize(const Tensor& input, std::int64_t out_h, std::int64_t out_w) {
    const TensorShape s = input.shape();
    require(out_h >= 1 && out_w >= 1, "bilinear_resize: output dims must be >= 1");

    struct Tap {
        std::int64_t lo;
        std::int64_t hi;
        double frac;
    };
    auto make_taps = [](std::int64_t in_len, std::int64_t out_len) {
        std::vector<Tap> taps(static_cast<std::size_t>(out_len));
        const double scale = static_cast<double>(in_len) / static_cast<double>(out_len);
        for (std::int64_t d = 0; d < out_len; ++d) {
            double src = (static_cast<double>(d) + 0.5) * scale - 0.5;
            src = std::clamp(src, 0.0, static_cast<double>(in_len - 1));
            const auto lo = static_cast<std::int64_t>(std::floor(src));
            taps[static_cast<std::size_t>(d)] = {lo, std::min(lo + 1, in_len - 1), src - static_cast<double>(lo)};
        }
        return taps;
    };
    const auto ys = make_taps(s.h, out_h);
    const auto xs = make_taps(s.w, out_w);

    Tensor out({s.n, s.c, out_h, out_w});
    parallel_for(0, s.n * s.c, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t p = lo; p < hi; ++p) {
            const float* src = input.plane(p / s.c, p % s.c);
            float* dst = out.plane(p / s.c, p % s.c);
            for (std::int64_t y = 0; y < out_h; ++y) {
                const Tap& ty = ys[static_cast<std::size_t>(y)];
                const float* r0 = src + ty.lo * s.w;
                const float* r1 = src + ty.hi * s.w;
                float* orow = dst + y * out_w;
                for (std::int64_t x = 0; x < out_w; ++x) {
                    const Tap& tx = xs[static_cast<std::size_t>(x)];
                    const double top = (1.0 - tx.frac) * r0[tx.lo] + tx.frac * r0[tx.hi];
                    const double bot = (1.0 - tx.frac) * r1[tx.lo] + tx.frac * r1[tx.hi];
                    orow[x] = static_cast<float>((1.0 - ty.frac) * top + ty.frac * bot);
                }
            }
        }
    });
    return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    const TensorShape sa = a.shape();
    const TensorShape sb = b.shape();
    require(sa.n == sb.n && sa.h == sb.h && sa.w == sb.w,
            "concat_channels: batch/spatial dims differ: " + sa.str() + " vs " + sb.str());

    Tensor out({sa.n, sa.c + sb.c, sa.h, sa.w});
    const std::size_t plane_a = static_cast<std::size_t>(sa.c * sa.h * sa.w);
    const std::size_t plane_b = static_cast<std::size_t>(sb.c * sb.h * sb.w);
    for (std::int64_t n = 0; n < sa.n; ++n) {
        float* dst = out.data().data() + out.offset(n, 0, 0, 0);
        if (plane_a > 0) {
            std::memcpy(dst, a.data().data() + a.offset(n, 0, 0, 0), plane_a * sizeof(float));
        }
        if (plane_b > 0) {
            std::memcpy(dst + plane_a, b.data().data() + b.offset(n, 0, 0, 0), plane_b * sizeof(float));
        }
    }
    return out;
}

Tensor softmax_channels(const Tensor& input) {
    const TensorShape s = input.shape();
    require(s.c >= 1, "softmax_channels: need at least one channel");
    Tensor out(s);
    const std::int64_t plane = s.h * s.w;
    for (std::int64_t n = 0; n < s.n; ++n) {
        const float* base = input.plane(n, 0);
        float* obase = out.plane(n, 0);
        for (std::int64_t i = 0; i < plane; ++i) {
            float mx = base[i];
            for (std::int64_t c = 1; c < s.c; ++c) {
                mx = std::max(mx, base[c * plane + i]);
            }
            double sum = 0.0;
            for (std::int64_t c = 0; c < s.c; ++c) {
                sum += std::exp(static_cast<double>(base[c * plane + i]) - static_cast<double>(mx));
            }
            for (std::int64_t c = 0; c < s.c; ++c) {
                const double e = std::exp(static_cast<double>(base[c * plane + i]) - static_cast<double>(mx));
                obase[c * plane + i] = static_cast<float>(e / sum);
            }
        }
    }
    return out;
}

} // namespace cloudseg
