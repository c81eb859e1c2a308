#pragma once

#include "cloudseg/mask.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cloudseg {

// 2|X∩Y| / (|X|+|Y|); defined as 1 when both masks are empty.
double dice_coefficient(const BinaryMask& pred, const BinaryMask& truth);

// Scoring unit: one image crossed with one cloud class.
struct PairKey {
    std::string image;
    CloudClass cls{CloudClass::fish};

    auto operator<=>(const PairKey&) const = default;
};

using MaskMap = std::map<PairKey, BinaryMask>;

struct DiceReport {
    double mean{0.0};
    std::array<double, kClassCount> per_class{};      // mean over pairs of that class
    std::array<std::int64_t, kClassCount> class_pairs{};
    std::int64_t pairs{0};
};

// Unweighted mean over the truth's (image, class) universe; a missing
// prediction counts as an empty mask; a prediction outside the universe is an
// error.
double mean_dice(const MaskMap& predictions, const MaskMap& truth);
DiceReport dice_report(const MaskMap& predictions, const MaskMap& truth);

struct PrCurve {
    std::vector<double> thresholds; // distinct scores, descending
    std::vector<double> precision;  // aligned with thresholds
    std::vector<double> recall;     // non-decreasing
    double auc{0.0};
};

// Sweeps a threshold over every distinct score (predict positive when
// score >= threshold). AUC by trapezoid over recall, anchored at
// (recall 0, precision 1). Requires at least one positive label.
PrCurve pr_curve(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

} // namespace cloudseg
