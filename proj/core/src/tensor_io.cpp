#include "cloudseg/tensor_io.hpp"

#include "cloudseg/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>
#include <vector>

namespace cloudseg {

namespace {

std::filesystem::path with_suffix(std::filesystem::path prefix, const char* suffix) {
    prefix += suffix;
    return prefix;
}

} // namespace

void save_tensor_raw(const std::filesystem::path& prefix, const Tensor& tensor) {
    const TensorShape s = tensor.shape();
    nlohmann::json meta{{"dtype", "float32"}, {"order", "nchw"}, {"shape", {s.n, s.c, s.h, s.w}}};
    const std::filesystem::path json_path = with_suffix(prefix, ".json");
    std::ofstream meta_out(json_path);
    if (!meta_out) {
        throw io_error("cannot write " + json_path.string());
    }
    meta_out << meta.dump(2) << '\n';

    const std::filesystem::path bin_path = with_suffix(prefix, ".bin");
    std::ofstream bin_out(bin_path, std::ios::binary);
    if (!bin_out) {
        throw io_error("cannot write " + bin_path.string());
    }
    bin_out.write(reinterpret_cast<const char*>(tensor.data().data()),
                  static_cast<std::streamsize>(tensor.data().size() * sizeof(float)));
    if (!bin_out) {
        throw io_error("write failed for " + bin_path.string());
    }
}

Tensor load_tensor_raw(const std::filesystem::path& prefix) {
    const std::filesystem::path json_path = with_suffix(prefix, ".json");
    std::ifstream meta_in(json_path);
    if (!meta_in) {
        throw io_error("cannot open " + json_path.string());
    }
    nlohmann::json meta;
    try {
        meta_in >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(json_path.string() + ": " + e.what());
    }
    if (meta.value("dtype", "") != "float32" || meta.value("order", "") != "nchw") {
        throw std::invalid_argument(json_path.string() + ": expected float32 nchw metadata");
    }
    if (!meta.contains("shape") || !meta["shape"].is_array() || meta["shape"].size() != 4) {
        throw std::invalid_argument(json_path.string() + ": shape must be a 4-element array");
    }
    TensorShape s;
    s.n = meta["shape"][0].get<std::int64_t>();
    s.c = meta["shape"][1].get<std::int64_t>();
    s.h = meta["shape"][2].get<std::int64_t>();
    s.w = meta["shape"][3].get<std::int64_t>();
    if (s.n < 1 || s.c < 0 || s.h < 1 || s.w < 1) {
        throw std::invalid_argument(json_path.string() + ": invalid shape " + s.str());
    }

    const std::filesystem::path bin_path = with_suffix(prefix, ".bin");
    std::ifstream bin_in(bin_path, std::ios::binary | std::ios::ate);
    if (!bin_in) {
        throw io_error("cannot open " + bin_path.string());
    }
    const auto bytes = static_cast<std::int64_t>(bin_in.tellg());
    if (bytes != s.numel() * static_cast<std::int64_t>(sizeof(float))) {
        throw std::invalid_argument(bin_path.string() + ": holds " + std::to_string(bytes) +
                                    " bytes, shape " + s.str() + " needs " +
                                    std::to_string(s.numel() * sizeof(float)));
    }
    bin_in.seekg(0);
    std::vector<float> data(static_cast<std::size_t>(s.numel()));
    bin_in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(bytes));
    if (!bin_in) {
        throw io_error("read failed for " + bin_path.string());
    }
    return Tensor(s, std::move(data));
}

} // namespace cloudseg
