#include "cloudseg/rle.hpp"

#include <sstream>
#include <stdexcept>

namespace cloudseg {

bool operator==(const Rle& a, const Rle& b) {
    return a.runs == b.runs;
}

Rle rle_encode(const BinaryMask& mask) {
    Rle out;
    const std::int64_t h = mask.height;
    const std::int64_t total = h * mask.width;
    std::int64_t run_start = -1;
    for (std::int64_t j = 0; j <= total; ++j) {
        // column-major scan: linear position j covers (row j % h, col j / h)
        const bool set = j < total && mask.pixels[static_cast<std::size_t>((j % h) * mask.width + j / h)] != 0;
        if (set && run_start < 0) {
            run_start = j;
        } else if (!set && run_start >= 0) {
            out.runs.emplace_back(run_start + 1, j - run_start);
            run_start = -1;
        }
    }
    return out;
}

BinaryMask rle_decode(const Rle& rle, std::int64_t height, std::int64_t width) {
    BinaryMask mask(height, width);
    const std::int64_t total = height * width;
    std::int64_t next_free = 1; // lowest 1-indexed position the next run may start at
    for (std::size_t k = 0; k < rle.runs.size(); ++k) {
        const auto [start, length] = rle.runs[k];
        if (start < 1 || length < 1) {
            throw std::invalid_argument("rle_decode: run " + std::to_string(k) + " has non-positive start or length");
        }
        if (start + length - 1 > total) {
            throw std::invalid_argument("rle_decode: run " + std::to_string(k) + " exceeds mask of " +
                                        std::to_string(total) + " pixels");
        }
        if (start < next_free) {
            throw std::invalid_argument("rle_decode: run " + std::to_string(k) + " overlaps or reorders a prior run");
        }
        next_free = start + length;
        for (std::int64_t j = start - 1; j < start - 1 + length; ++j) {
            mask.pixels[static_cast<std::size_t>((j % height) * width + j / height)] = 1;
        }
    }
    return mask;
}

std::string rle_text(const Rle& rle) {
    std::ostringstream os;
    bool first = true;
    for (const auto& [start, length] : rle.runs) {
        if (!first) {
            os << ' ';
        }
        os << start << ' ' << length;
        first = false;
    }
    return os.str();
}

Rle parse_rle(const std::string& text) {
    std::istringstream is(text);
    std::vector<std::int64_t> values;
    std::string token;
    while (is >> token) {
        std::size_t used = 0;
        std::int64_t v = 0;
        try {
            v = std::stoll(token, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != token.size()) {
            throw std::invalid_argument("parse_rle: token " + std::to_string(values.size()) + " is not an integer: '" +
                                        token + "'");
        }
        if (v < 1) {
            throw std::invalid_argument("parse_rle: token " + std::to_string(values.size()) +
                                        " must be positive, got " + token);
        }
        values.push_back(v);
    }
    if (values.size() % 2 != 0) {
        throw std::invalid_argument("parse_rle: odd token count " + std::to_string(values.size()));
    }
    Rle out;
    out.runs.reserve(values.size() / 2);
    for (std::size_t i = 0; i < values.size(); i += 2) {
        out.runs.emplace_back(values[i], values[i + 1]);
    }
    return out;
}

BinaryMask scale_mask(const BinaryMask& src) {
    if (src.height % 4 != 0 || src.width % 4 != 0) {
        throw std::invalid_argument("scale_mask: dims must be divisible by 4, got " + std::to_string(src.height) +
                                    "x" + std::to_string(src.width));
    }
    BinaryMask dst(src.height / 4, src.width / 4);
    for (std::int64_t r = 0; r < dst.height; ++r) {
        for (std::int64_t c = 0; c < dst.width; ++c) {
            dst.at(r, c) = src.at(4 * r + 2, 4 * c + 2);
        }
    }
    return dst;
}

} // namespace cloudseg
