#pragma once

#include "cloudseg/mask.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace cloudseg {

// Run-length encoding of a binary mask in column-major pixel order with
// 1-indexed start positions, as used by the Kaggle cloud-organization data.
struct Rle {
    std::vector<std::pair<std::int64_t, std::int64_t>> runs; // (start, length)

    bool empty() const { return runs.empty(); }
};

bool operator==(const Rle& a, const Rle& b);

// Canonical encoding: maximal runs in increasing start order.
Rle rle_encode(const BinaryMask& mask);

// Rejects non-positive starts/lengths, runs past h*w, and overlapping or
// out-of-order runs. Adjacent runs that could have been merged are accepted.
BinaryMask rle_decode(const Rle& rle, std::int64_t height, std::int64_t width);

// "s1 l1 s2 l2 ..."; empty string for an empty encoding.
std::string rle_text(const Rle& rle);

// Whitespace-separated positive integers, must come in pairs.
// Blank text -> empty Rle.
Rle parse_rle(const std::string& text);

// Downscale by exactly 0.25 per side by sampling source pixel (4r+2, 4c+2).
// Requires both dimensions divisible by 4.
BinaryMask scale_mask(const BinaryMask& src);

} // namespace cloudseg
