#include "cloudseg/augment.hpp"

#include "cloudseg/parallel.hpp"
#include "cloudseg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cloudseg {

namespace {

constexpr double kMaxRotateDeg = 20.0;

void check_dims(const Tensor& image, const ClassMaskSet& masks) {
    const TensorShape s = image.shape();
    for (const BinaryMask& m : masks) {
        if (m.height != s.h || m.width != s.w) {
            throw std::invalid_argument("augmentation: mask " + std::to_string(m.height) + "x" +
                                        std::to_string(m.width) + " does not match image " + s.str());
        }
    }
}

float bilinear_fetch(const float* plane, std::int64_t h, std::int64_t w, double sy, double sx) {
    // black fill outside the source rectangle
    if (sy <= -1.0 || sy >= static_cast<double>(h) || sx <= -1.0 || sx >= static_cast<double>(w)) {
        return 0.0f;
    }
    const auto y0 = static_cast<std::int64_t>(std::floor(sy));
    const auto x0 = static_cast<std::int64_t>(std::floor(sx));
    const double fy = sy - static_cast<double>(y0);
    const double fx = sx - static_cast<double>(x0);
    double acc = 0.0;
    for (int dy = 0; dy <= 1; ++dy) {
        const std::int64_t y = y0 + dy;
        if (y < 0 || y >= h) {
            continue;
        }
        const double wy = dy ? fy : 1.0 - fy;
        for (int dx = 0; dx <= 1; ++dx) {
            const std::int64_t x = x0 + dx;
            if (x < 0 || x >= w) {
                continue;
            }
            const double wx = dx ? fx : 1.0 - fx;
            acc += wy * wx * static_cast<double>(plane[y * w + x]);
        }
    }
    return static_cast<float>(acc);
}

std::uint8_t nearest_fetch(const BinaryMask& mask, double sy, double sx) {
    const auto y = static_cast<std::int64_t>(std::lround(sy));
    const auto x = static_cast<std::int64_t>(std::lround(sx));
    if (y < 0 || y >= mask.height || x < 0 || x >= mask.width) {
        return 0;
    }
    return mask.at(y, x);
}

// Generic inverse-mapped warp: src(y, x) gives the source coordinates of
// output pixel (y, x).
template <typename SrcFn>
std::pair<Tensor, ClassMaskSet> warp(const Tensor& image, const ClassMaskSet& masks, SrcFn src) {
    const TensorShape s = image.shape();
    Tensor out(s);
    for (std::int64_t n = 0; n < s.n; ++n) {
        for (std::int64_t c = 0; c < s.c; ++c) {
            const float* in_plane = image.plane(n, c);
            float* out_plane = out.plane(n, c);
            for (std::int64_t y = 0; y < s.h; ++y) {
                for (std::int64_t x = 0; x < s.w; ++x) {
                    const auto [sy, sx] = src(y, x);
                    out_plane[y * s.w + x] = bilinear_fetch(in_plane, s.h, s.w, sy, sx);
                }
            }
        }
    }
    ClassMaskSet out_masks;
    for (std::size_t k = 0; k < masks.size(); ++k) {
        out_masks[k] = BinaryMask(s.h, s.w);
        for (std::int64_t y = 0; y < s.h; ++y) {
            for (std::int64_t x = 0; x < s.w; ++x) {
                const auto [sy, sx] = src(y, x);
                out_masks[k].at(y, x) = nearest_fetch(masks[k], sy, sx);
            }
        }
    }
    return {std::move(out), std::move(out_masks)};
}

// Pure index permutation: exact on both image and masks.
std::pair<Tensor, ClassMaskSet> flip(const Tensor& image, const ClassMaskSet& masks, bool horizontal) {
    const TensorShape s = image.shape();
    Tensor out(s);
    for (std::int64_t n = 0; n < s.n; ++n) {
        for (std::int64_t c = 0; c < s.c; ++c) {
            const float* in_plane = image.plane(n, c);
            float* out_plane = out.plane(n, c);
            for (std::int64_t y = 0; y < s.h; ++y) {
                const std::int64_t sy = horizontal ? y : s.h - 1 - y;
                for (std::int64_t x = 0; x < s.w; ++x) {
                    const std::int64_t sx = horizontal ? s.w - 1 - x : x;
                    out_plane[y * s.w + x] = in_plane[sy * s.w + sx];
                }
            }
        }
    }
    ClassMaskSet out_masks;
    for (std::size_t k = 0; k < masks.size(); ++k) {
        out_masks[k] = BinaryMask(s.h, s.w);
        for (std::int64_t y = 0; y < s.h; ++y) {
            const std::int64_t sy = horizontal ? y : s.h - 1 - y;
            for (std::int64_t x = 0; x < s.w; ++x) {
                out_masks[k].at(y, x) = masks[k].at(sy, horizontal ? s.w - 1 - x : x);
            }
        }
    }
    return {std::move(out), std::move(out_masks)};
}

std::vector<double> axis_field(std::int64_t len, const std::vector<double>& scales, int cells) {
    std::vector<double> src(static_cast<std::size_t>(len));
    std::vector<double> steps(static_cast<std::size_t>(cells), 1.0);
    if (!scales.empty()) {
        if (static_cast<int>(scales.size()) != cells) {
            throw std::invalid_argument("grid_distort_field: need one scale per cell");
        }
        steps = scales;
    }
    for (const double v : steps) {
        if (!(v > 0.0)) {
            throw std::invalid_argument("grid_distort_field: step scales must be > 0");
        }
    }

    // Uniform scales cancel under endpoint renormalization; keep that case
    // exactly the identity.
    const bool uniform = std::all_of(steps.begin(), steps.end(), [&](double v) { return v == steps[0]; });
    if (uniform) {
        for (std::int64_t t = 0; t < len; ++t) {
            src[static_cast<std::size_t>(t)] = static_cast<double>(t);
        }
        return src;
    }

    const double span = static_cast<double>(len - 1);
    const double step = span / static_cast<double>(cells);
    std::vector<double> knots_out(static_cast<std::size_t>(cells) + 1);
    std::vector<double> knots_src(static_cast<std::size_t>(cells) + 1);
    knots_out[0] = 0.0;
    knots_src[0] = 0.0;
    for (int k = 1; k <= cells; ++k) {
        knots_out[static_cast<std::size_t>(k)] = k == cells ? span : static_cast<double>(k) * step;
        knots_src[static_cast<std::size_t>(k)] =
            knots_src[static_cast<std::size_t>(k) - 1] + steps[static_cast<std::size_t>(k) - 1] * step;
    }
    const double factor = span / knots_src[static_cast<std::size_t>(cells)];
    for (int k = 1; k < cells; ++k) {
        knots_src[static_cast<std::size_t>(k)] *= factor;
    }
    knots_src[static_cast<std::size_t>(cells)] = span;

    int k = 0;
    for (std::int64_t t = 0; t < len; ++t) {
        const auto td = static_cast<double>(t);
        while (k < cells - 1 && td > knots_out[static_cast<std::size_t>(k) + 1]) {
            ++k;
        }
        const double o0 = knots_out[static_cast<std::size_t>(k)];
        const double o1 = knots_out[static_cast<std::size_t>(k) + 1];
        const double s0 = knots_src[static_cast<std::size_t>(k)];
        const double s1 = knots_src[static_cast<std::size_t>(k) + 1];
        src[static_cast<std::size_t>(t)] = std::clamp(s0 + (td - o0) * (s1 - s0) / (o1 - o0), 0.0, span);
    }
    src[0] = 0.0;
    src[static_cast<std::size_t>(len - 1)] = span;
    return src;
}

} // namespace

AugmentationKind AugmentationKind::rotate(double angle_deg) {
    if (std::abs(angle_deg) > kMaxRotateDeg) {
        throw std::invalid_argument("rotate: angle " + std::to_string(angle_deg) + " outside [-20, 20] degrees");
    }
    return {Tag::rotate, angle_deg, {}};
}

DistortField grid_distort_field(const GridDistortParams& params, std::int64_t h, std::int64_t w) {
    if (params.cells < 2) {
        throw std::invalid_argument("grid_distort_field: cells must be >= 2");
    }
    if (h < params.cells || w < params.cells) {
        throw std::invalid_argument("grid_distort_field: image smaller than the grid");
    }
    DistortField field;
    field.src_y = axis_field(h, params.y_scales, params.cells);
    field.src_x = axis_field(w, params.x_scales, params.cells);
    return field;
}

std::pair<Tensor, ClassMaskSet> apply_augmentation(const AugmentationKind& kind, const Tensor& image,
                                                   const ClassMaskSet& masks) {
    check_dims(image, masks);
    const TensorShape s = image.shape();
    switch (kind.tag) {
    case AugmentationKind::Tag::hflip:
        return flip(image, masks, true);
    case AugmentationKind::Tag::vflip:
        return flip(image, masks, false);
    case AugmentationKind::Tag::rotate: {
        if (std::abs(kind.angle_deg) > kMaxRotateDeg) {
            throw std::invalid_argument("rotate: angle outside [-20, 20] degrees");
        }
        const double theta = kind.angle_deg * std::numbers::pi / 180.0;
        const double ct = std::cos(theta);
        const double st = std::sin(theta);
        const double cy = static_cast<double>(s.h - 1) / 2.0;
        const double cx = static_cast<double>(s.w - 1) / 2.0;
        return warp(image, masks, [=](std::int64_t y, std::int64_t x) {
            const double dy = static_cast<double>(y) - cy;
            const double dx = static_cast<double>(x) - cx;
            return std::pair<double, double>{cy + st * dx + ct * dy, cx + ct * dx - st * dy};
        });
    }
    case AugmentationKind::Tag::grid_distort: {
        const DistortField field = grid_distort_field(kind.grid, s.h, s.w);
        return warp(image, masks, [&](std::int64_t y, std::int64_t x) {
            return std::pair<double, double>{field.src_y[static_cast<std::size_t>(y)],
                                             field.src_x[static_cast<std::size_t>(x)]};
        });
    }
    }
    throw std::invalid_argument("apply_augmentation: unknown kind");
}

namespace {

AugmentationKind draw_kind(Rng& rng, int cells) {
    switch (rng.index(4)) {
    case 0:
        return AugmentationKind::hflip();
    case 1:
        return AugmentationKind::vflip();
    case 2:
        return AugmentationKind::rotate(rng.uniform(-kMaxRotateDeg, kMaxRotateDeg));
    default: {
        GridDistortParams params;
        params.cells = cells;
        params.y_scales.reserve(static_cast<std::size_t>(cells));
        params.x_scales.reserve(static_cast<std::size_t>(cells));
        for (int i = 0; i < cells; ++i) {
            params.y_scales.push_back(rng.uniform(0.7, 1.3));
        }
        for (int i = 0; i < cells; ++i) {
            params.x_scales.push_back(rng.uniform(0.7, 1.3));
        }
        return AugmentationKind::grid_distort(std::move(params));
    }
    }
}

std::string augmented_name(const std::string& name) {
    const auto dot = name.find_last_of('.');
    if (dot == std::string::npos || dot == 0) {
        return name + "_aug";
    }
    return name.substr(0, dot) + "_aug" + name.substr(dot);
}

} // namespace

std::vector<TrainingRecord> augment_dataset(const std::vector<TrainingRecord>& records, std::uint64_t seed) {
    std::vector<TrainingRecord> out(records.size() * 2);
    std::copy(records.begin(), records.end(), out.begin());
    parallel_for(0, static_cast<std::int64_t>(records.size()), [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            const TrainingRecord& rec = records[static_cast<std::size_t>(i)];
            Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(i)));
            const AugmentationKind kind = draw_kind(rng, 5);
            auto [img, masks] = apply_augmentation(kind, image_to_tensor(rec.image), rec.masks);
            TrainingRecord copy;
            copy.name = augmented_name(rec.name);
            copy.image = tensor_to_image(img);
            copy.masks = std::move(masks);
            out[records.size() + static_cast<std::size_t>(i)] = std::move(copy);
        }
    });
    return out;
}

} // namespace cloudseg
