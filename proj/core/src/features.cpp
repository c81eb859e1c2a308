#include "cloudseg/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace cloudseg {

namespace {

std::vector<double> box_mean(const std::vector<double>& src, std::int64_t h, std::int64_t w, int radius) {
    std::vector<double> out(src.size());
    const double norm = 1.0 / ((2.0 * radius + 1.0) * (2.0 * radius + 1.0));
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int dy = -radius; dy <= radius; ++dy) {
                const std::int64_t sy = std::clamp<std::int64_t>(y + dy, 0, h - 1);
                for (int dx = -radius; dx <= radius; ++dx) {
                    const std::int64_t sx = std::clamp<std::int64_t>(x + dx, 0, w - 1);
                    acc += src[static_cast<std::size_t>(sy * w + sx)];
                }
            }
            out[static_cast<std::size_t>(y * w + x)] = acc * norm;
        }
    }
    return out;
}

} // namespace

int filterbank_channels() { return 8; }

Tensor filterbank_features(const Tensor& image) {
    const TensorShape s = image.shape();
    if (s.n != 1 || (s.c != 1 && s.c != 3)) {
        throw std::invalid_argument("filterbank_features: expected (1, 1|3, h, w), got " + s.str());
    }
    auto channel = [&](int wanted) { return image.plane(0, s.c == 3 ? wanted : 0); };
    const float* r = channel(0);
    const float* g = channel(1);
    const float* b = channel(2);

    const auto pixels = static_cast<std::size_t>(s.h * s.w);
    std::vector<double> luma(pixels);
    for (std::size_t i = 0; i < pixels; ++i) {
        luma[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
    }
    const std::vector<double> mean3 = box_mean(luma, s.h, s.w, 1);
    const std::vector<double> mean5 = box_mean(luma, s.h, s.w, 2);

    Tensor out(TensorShape{1, filterbank_channels(), s.h, s.w});
    float* or_ = out.plane(0, 0);
    float* og = out.plane(0, 1);
    float* ob = out.plane(0, 2);
    float* oy = out.plane(0, 3);
    float* om3 = out.plane(0, 4);
    float* ogx = out.plane(0, 5);
    float* ogy = out.plane(0, 6);
    float* om5 = out.plane(0, 7);
    for (std::size_t i = 0; i < pixels; ++i) {
        or_[i] = r[i];
        og[i] = g[i];
        ob[i] = b[i];
        oy[i] = static_cast<float>(luma[i]);
        om3[i] = static_cast<float>(mean3[i]);
        om5[i] = static_cast<float>(mean5[i]);
    }
    auto at = [&](std::int64_t y, std::int64_t x) {
        return luma[static_cast<std::size_t>(std::clamp<std::int64_t>(y, 0, s.h - 1) * s.w +
                                             std::clamp<std::int64_t>(x, 0, s.w - 1))];
    };
    for (std::int64_t y = 0; y < s.h; ++y) {
        for (std::int64_t x = 0; x < s.w; ++x) {
            const double gx = (at(y - 1, x + 1) + 2.0 * at(y, x + 1) + at(y + 1, x + 1)) -
                              (at(y - 1, x - 1) + 2.0 * at(y, x - 1) + at(y + 1, x - 1));
            const double gy = (at(y + 1, x - 1) + 2.0 * at(y + 1, x) + at(y + 1, x + 1)) -
                              (at(y - 1, x - 1) + 2.0 * at(y - 1, x) + at(y - 1, x + 1));
            const auto i = static_cast<std::size_t>(y * s.w + x);
            ogx[i] = static_cast<float>(std::abs(gx) / 4.0);
            ogy[i] = static_cast<float>(std::abs(gy) / 4.0);
        }
    }
    return out;
}

} // namespace cloudseg
