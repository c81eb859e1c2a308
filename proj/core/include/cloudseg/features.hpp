#pragma once

#include "cloudseg/tensor.hpp"

namespace cloudseg {

// Fixed hand-built filterbank for head-only training at desk scale, where a
// randomly initialized trunk gives the pointwise head little to work with.
// Channels: r, g, b, luma, 3x3 mean, |sobel_x|/4, |sobel_y|/4, 5x5 mean
// (borders replicate). Input (1, 1|3, h, w) in [0,1]; output (1, 8, h, w).
int filterbank_channels();
Tensor filterbank_features(const Tensor& image);

} // namespace cloudseg
