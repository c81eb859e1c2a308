#pragma once

#include "cloudseg/mask.hpp"
#include "cloudseg/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace cloudseg {

// 8-bit image, row-major, channel-interleaved. channels is 1 (gray) or 3 (RGB).
struct Image {
    std::int64_t height{0};
    std::int64_t width{0};
    int channels{1};
    std::vector<std::uint8_t> pixels;

    Image() = default;
    Image(std::int64_t h, std::int64_t w, int ch);

    std::uint8_t at(std::int64_t r, std::int64_t c, int ch) const {
        return pixels[static_cast<std::size_t>((r * width + c) * channels + ch)];
    }
    std::uint8_t& at(std::int64_t r, std::int64_t c, int ch) {
        return pixels[static_cast<std::size_t>((r * width + c) * channels + ch)];
    }
};

// Netpbm codecs: PGM (P2/P5) and PPM (P3/P6), 8-bit samples.
Image load_image(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const Image& image); // binary P5/P6

Image mask_to_image(const BinaryMask& mask);   // 0 -> 0, 1 -> 255
BinaryMask mask_from_image(const Image& image); // any nonzero sample -> 1

Tensor image_to_tensor(const Image& image);  // (1, channels, h, w), values / 255
Image tensor_to_image(const Tensor& tensor); // clamp to [0,1], scale to 0..255

} // namespace cloudseg
