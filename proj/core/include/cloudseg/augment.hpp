#pragma once

#include "cloudseg/image.hpp"
#include "cloudseg/mask.hpp"
#include "cloudseg/tensor.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace cloudseg {

using ClassMaskSet = std::array<BinaryMask, kClassCount>;

struct GridDistortParams {
    int cells{5};                 // grid cells per axis
    std::vector<double> y_scales; // per-step multipliers, length = cells; empty = all 1
    std::vector<double> x_scales;
};

// hflip | vflip | rotate(angle within +-20 deg) | grid_distort(params)
struct AugmentationKind {
    enum class Tag { hflip, vflip, rotate, grid_distort };

    Tag tag{Tag::hflip};
    double angle_deg{0.0};
    GridDistortParams grid;

    static AugmentationKind hflip() { return {Tag::hflip, 0.0, {}}; }
    static AugmentationKind vflip() { return {Tag::vflip, 0.0, {}}; }
    static AugmentationKind rotate(double angle_deg);
    static AugmentationKind grid_distort(GridDistortParams params) {
        return {Tag::grid_distort, 0.0, std::move(params)};
    }
};

// Monotone piecewise-linear source coordinates per axis; endpoints map to
// endpoints. Uniform scales collapse to the exact identity mapping.
struct DistortField {
    std::vector<double> src_y; // length h
    std::vector<double> src_x; // length w
};

DistortField grid_distort_field(const GridDistortParams& params, std::int64_t h, std::int64_t w);

// Applies the same geometric transform to the image tensor (bilinear, black
// fill) and to every mask (nearest-neighbour, false fill). Dims unchanged.
std::pair<Tensor, ClassMaskSet> apply_augmentation(const AugmentationKind& kind, const Tensor& image,
                                                   const ClassMaskSet& masks);

struct TrainingRecord {
    std::string name; // image filename, e.g. "img001.ppm"
    Image image;
    ClassMaskSet masks;
};

// All originals plus exactly one transformed copy per original; the kind (and
// its parameters) are drawn from a per-record generator derived from the seed,
// so the result is deterministic and order-independent.
std::vector<TrainingRecord> augment_dataset(const std::vector<TrainingRecord>& records, std::uint64_t seed);

} // namespace cloudseg
