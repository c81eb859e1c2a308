#include "cloudseg/mask.hpp"

#include <algorithm>
#include <stdexcept>

namespace cloudseg {

const std::array<std::string, kClassCount>& class_names() {
    static const std::array<std::string, kClassCount> names{"Fish", "Flower", "Gravel", "Sugar"};
    return names;
}

CloudClass class_from_name(const std::string& name) {
    const auto& names = class_names();
    for (int i = 0; i < kClassCount; ++i) {
        if (names[static_cast<std::size_t>(i)] == name) {
            return static_cast<CloudClass>(i);
        }
    }
    throw std::invalid_argument("unknown class name: '" + name + "'");
}

BinaryMask::BinaryMask(std::int64_t h, std::int64_t w) : height(h), width(w) {
    if (h < 1 || w < 1) {
        throw std::invalid_argument("mask dims must be >= 1, got " + std::to_string(h) + "x" + std::to_string(w));
    }
    pixels.assign(static_cast<std::size_t>(h * w), 0);
}

std::int64_t BinaryMask::area() const {
    return std::count_if(pixels.begin(), pixels.end(), [](std::uint8_t v) { return v != 0; });
}

bool operator==(const BinaryMask& a, const BinaryMask& b) {
    return a.height == b.height && a.width == b.width && a.pixels == b.pixels;
}

BinaryMask mask_resize_nearest(const BinaryMask& src, std::int64_t out_h, std::int64_t out_w) {
    if (out_h < 1 || out_w < 1) {
        throw std::invalid_argument("mask_resize_nearest: output dims must be >= 1");
    }
    BinaryMask dst(out_h, out_w);
    std::vector<std::int64_t> col(static_cast<std::size_t>(out_w));
    for (std::int64_t x = 0; x < out_w; ++x) {
        auto sx = static_cast<std::int64_t>((static_cast<double>(x) + 0.5) * static_cast<double>(src.width) /
                                            static_cast<double>(out_w));
        col[static_cast<std::size_t>(x)] = std::min(sx, src.width - 1);
    }
    for (std::int64_t y = 0; y < out_h; ++y) {
        auto sy = static_cast<std::int64_t>((static_cast<double>(y) + 0.5) * static_cast<double>(src.height) /
                                            static_cast<double>(out_h));
        sy = std::min(sy, src.height - 1);
        const std::uint8_t* srow = src.pixels.data() + sy * src.width;
        std::uint8_t* drow = dst.pixels.data() + y * out_w;
        for (std::int64_t x = 0; x < out_w; ++x) {
            drow[x] = srow[col[static_cast<std::size_t>(x)]];
        }
    }
    return dst;
}

} // namespace cloudseg
