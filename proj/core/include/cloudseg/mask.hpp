#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace cloudseg {

inline constexpr int kClassCount = 4;

enum class CloudClass : int { fish = 0, flower = 1, gravel = 2, sugar = 3 };

// Fixed class order used everywhere: alphabetical.
const std::array<std::string, kClassCount>& class_names();
CloudClass class_from_name(const std::string& name);

// Row-major binary mask, one byte per pixel, values 0 or 1.
struct BinaryMask {
    std::int64_t height{0};
    std::int64_t width{0};
    std::vector<std::uint8_t> pixels;

    BinaryMask() = default;
    BinaryMask(std::int64_t h, std::int64_t w);

    std::uint8_t at(std::int64_t r, std::int64_t c) const {
        return pixels[static_cast<std::size_t>(r * width + c)];
    }
    std::uint8_t& at(std::int64_t r, std::int64_t c) {
        return pixels[static_cast<std::size_t>(r * width + c)];
    }
    std::int64_t area() const;
    bool none_set() const { return area() == 0; }
};

bool operator==(const BinaryMask& a, const BinaryMask& b);

// Nearest-neighbour resize with half-pixel centres: src = floor((dst + 0.5) * in / out).
BinaryMask mask_resize_nearest(const BinaryMask& src, std::int64_t out_h, std::int64_t out_w);

} // namespace cloudseg
