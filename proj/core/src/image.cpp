#include "cloudseg/image.hpp"

#include "cloudseg/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace cloudseg {

namespace {

// Reads one whitespace-delimited token, skipping '#' comment lines.
std::string next_token(const std::string& buf, std::size_t& pos) {
    while (pos < buf.size()) {
        if (std::isspace(static_cast<unsigned char>(buf[pos]))) {
            ++pos;
        } else if (buf[pos] == '#') {
            while (pos < buf.size() && buf[pos] != '\n') {
                ++pos;
            }
        } else {
            break;
        }
    }
    const std::size_t start = pos;
    while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos]))) {
        ++pos;
    }
    return buf.substr(start, pos - start);
}

std::int64_t next_int(const std::string& buf, std::size_t& pos, const char* what) {
    const std::string tok = next_token(buf, pos);
    std::size_t used = 0;
    std::int64_t v = 0;
    try {
        v = std::stoll(tok, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (tok.empty() || used != tok.size()) {
        throw io_error(std::string("netpbm: bad ") + what + " token '" + tok + "'");
    }
    return v;
}

} // namespace

Image::Image(std::int64_t h, std::int64_t w, int ch) : height(h), width(w), channels(ch) {
    if (h < 1 || w < 1) {
        throw std::invalid_argument("image dims must be >= 1, got " + std::to_string(h) + "x" + std::to_string(w));
    }
    if (ch != 1 && ch != 3) {
        throw std::invalid_argument("image channels must be 1 or 3, got " + std::to_string(ch));
    }
    pixels.assign(static_cast<std::size_t>(h * w * ch), 0);
}

Image load_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open image file: " + path.string());
    }
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::size_t pos = 0;
    const std::string magic = next_token(buf, pos);
    int channels = 0;
    bool ascii = false;
    if (magic == "P2") {
        channels = 1;
        ascii = true;
    } else if (magic == "P3") {
        channels = 3;
        ascii = true;
    } else if (magic == "P5") {
        channels = 1;
    } else if (magic == "P6") {
        channels = 3;
    } else {
        throw io_error("unsupported image format '" + magic + "' in " + path.string() +
                       " (PGM/PPM P2/P3/P5/P6 only)");
    }

    const std::int64_t width = next_int(buf, pos, "width");
    const std::int64_t height = next_int(buf, pos, "height");
    const std::int64_t maxval = next_int(buf, pos, "maxval");
    if (width < 1 || height < 1) {
        throw io_error("netpbm: bad dimensions in " + path.string());
    }
    if (maxval < 1 || maxval > 255) {
        throw io_error("netpbm: only 8-bit samples supported, maxval " + std::to_string(maxval) + " in " +
                       path.string());
    }

    Image img(height, width, channels);
    const std::size_t count = img.pixels.size();
    if (ascii) {
        for (std::size_t i = 0; i < count; ++i) {
            const std::int64_t v = next_int(buf, pos, "sample");
            if (v < 0 || v > maxval) {
                throw io_error("netpbm: sample out of range in " + path.string());
            }
            img.pixels[i] = static_cast<std::uint8_t>(v);
        }
    } else {
        // single whitespace byte separates maxval from raster
        if (pos >= buf.size() || !std::isspace(static_cast<unsigned char>(buf[pos]))) {
            throw io_error("netpbm: missing raster separator in " + path.string());
        }
        ++pos;
        if (buf.size() - pos < count) {
            throw io_error("netpbm: truncated raster in " + path.string());
        }
        std::copy_n(reinterpret_cast<const std::uint8_t*>(buf.data()) + pos, count, img.pixels.begin());
    }
    return img;
}

void save_image(const std::filesystem::path& path, const Image& image) {
    if (image.channels != 1 && image.channels != 3) {
        throw std::invalid_argument("save_image: channels must be 1 or 3");
    }
    if (image.height < 1 || image.width < 1 ||
        image.pixels.size() != static_cast<std::size_t>(image.height * image.width * image.channels)) {
        throw std::invalid_argument("save_image: inconsistent image buffer");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw io_error("cannot open image file for writing: " + path.string());
    }
    out << (image.channels == 1 ? "P5" : "P6") << "\n" << image.width << " " << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
    if (!out) {
        throw io_error("failed writing image file: " + path.string());
    }
}

Image mask_to_image(const BinaryMask& mask) {
    Image img(mask.height, mask.width, 1);
    for (std::size_t i = 0; i < mask.pixels.size(); ++i) {
        img.pixels[i] = mask.pixels[i] ? 255 : 0;
    }
    return img;
}

BinaryMask mask_from_image(const Image& image) {
    BinaryMask mask(image.height, image.width);
    for (std::int64_t r = 0; r < image.height; ++r) {
        for (std::int64_t c = 0; c < image.width; ++c) {
            std::uint8_t v = 0;
            for (int ch = 0; ch < image.channels; ++ch) {
                v |= image.at(r, c, ch);
            }
            mask.at(r, c) = v ? 1 : 0;
        }
    }
    return mask;
}

Tensor image_to_tensor(const Image& image) {
    Tensor t({1, image.channels, image.height, image.width});
    for (int ch = 0; ch < image.channels; ++ch) {
        float* plane = t.plane(0, ch);
        for (std::int64_t r = 0; r < image.height; ++r) {
            for (std::int64_t c = 0; c < image.width; ++c) {
                plane[r * image.width + c] = static_cast<float>(image.at(r, c, ch)) / 255.0f;
            }
        }
    }
    return t;
}

Image tensor_to_image(const Tensor& tensor) {
    const TensorShape s = tensor.shape();
    if (s.n != 1 || (s.c != 1 && s.c != 3)) {
        throw std::invalid_argument("tensor_to_image: need shape (1, {1|3}, h, w), got " + s.str());
    }
    Image img(s.h, s.w, static_cast<int>(s.c));
    for (std::int64_t ch = 0; ch < s.c; ++ch) {
        const float* plane = tensor.plane(0, ch);
        for (std::int64_t r = 0; r < s.h; ++r) {
            for (std::int64_t c = 0; c < s.w; ++c) {
                const float v = std::clamp(plane[r * s.w + c], 0.0f, 1.0f);
                img.at(r, c, static_cast<int>(ch)) = static_cast<std::uint8_t>(std::lround(v * 255.0f));
            }
        }
    }
    return img;
}

} // namespace cloudseg
