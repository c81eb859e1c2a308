#pragma once

#include "cloudseg/tensor.hpp"

#include <filesystem>

namespace cloudseg {

// <prefix>.bin: raw little-endian float32 in flat NCHW order.
// <prefix>.json: {"dtype": "float32", "order": "nchw", "shape": [n, c, h, w]}.
void save_tensor_raw(const std::filesystem::path& prefix, const Tensor& tensor);
Tensor load_tensor_raw(const std::filesystem::path& prefix);

} // namespace cloudseg
