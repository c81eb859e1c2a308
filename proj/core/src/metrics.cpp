#include "cloudseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cloudseg {

double dice_coefficient(const BinaryMask& pred, const BinaryMask& truth) {
    if (pred.height != truth.height || pred.width != truth.width) {
        throw std::invalid_argument("dice_coefficient: mask dims differ: " + std::to_string(pred.height) + "x" +
                                    std::to_string(pred.width) + " vs " + std::to_string(truth.height) + "x" +
                                    std::to_string(truth.width));
    }
    std::int64_t inter = 0;
    std::int64_t total = 0;
    for (std::size_t i = 0; i < pred.pixels.size(); ++i) {
        const int a = pred.pixels[i] != 0;
        const int b = truth.pixels[i] != 0;
        inter += a & b;
        total += a + b;
    }
    if (total == 0) {
        return 1.0;
    }
    return 2.0 * static_cast<double>(inter) / static_cast<double>(total);
}

DiceReport dice_report(const MaskMap& predictions, const MaskMap& truth) {
    for (const auto& [key, mask] : predictions) {
        if (!truth.contains(key)) {
            throw std::invalid_argument("dice_report: prediction key (" + key.image + ", " +
                                        class_names()[static_cast<std::size_t>(key.cls)] +
                                        ") is outside the truth universe");
        }
    }

    DiceReport report;
    std::array<double, kClassCount> class_sums{};
    double sum = 0.0;
    for (const auto& [key, truth_mask] : truth) {
        const auto it = predictions.find(key);
        double d = 0.0;
        if (it != predictions.end()) {
            d = dice_coefficient(it->second, truth_mask);
        } else {
            // missing prediction = empty mask
            d = truth_mask.none_set() ? 1.0 : 0.0;
        }
        sum += d;
        const auto c = static_cast<std::size_t>(key.cls);
        class_sums[c] += d;
        report.class_pairs[c] += 1;
        report.pairs += 1;
    }
    if (report.pairs == 0) {
        throw std::invalid_argument("dice_report: empty truth universe");
    }
    report.mean = sum / static_cast<double>(report.pairs);
    for (std::size_t c = 0; c < kClassCount; ++c) {
        report.per_class[c] = report.class_pairs[c] > 0
                                  ? class_sums[c] / static_cast<double>(report.class_pairs[c])
                                  : 1.0;
    }
    return report;
}

double mean_dice(const MaskMap& predictions, const MaskMap& truth) {
    return dice_report(predictions, truth).mean;
}

PrCurve pr_curve(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
    if (scores.size() != labels.size()) {
        throw std::invalid_argument("pr_curve: scores and labels sizes differ");
    }
    if (scores.empty()) {
        throw std::invalid_argument("pr_curve: empty input");
    }
    for (std::size_t k = 0; k < scores.size(); ++k) {
        if (std::isnan(scores[k])) {
            throw std::invalid_argument("pr_curve: score " + std::to_string(k) + " is NaN");
        }
        if (labels[k] > 1) {
            throw std::invalid_argument("pr_curve: label " + std::to_string(k) + " is not 0 or 1");
        }
    }
    const std::int64_t total_pos =
        std::count_if(labels.begin(), labels.end(), [](std::uint8_t v) { return v != 0; });
    if (total_pos == 0) {
        throw std::invalid_argument("pr_curve: no positive labels, recall undefined");
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    PrCurve curve;
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t prev_tp = 0;
    double prev_precision = 1.0; // anchor: zero predictions -> precision 1, recall 0
    double area2 = 0.0;          // 2 * total_pos * auc, accumulated from integer recall steps
    std::size_t i = 0;
    while (i < order.size()) {
        const double t = scores[order[i]];
        while (i < order.size() && scores[order[i]] == t) {
            if (labels[order[i]] != 0) {
                ++tp;
            } else {
                ++fp;
            }
            ++i;
        }
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
        area2 += static_cast<double>(tp - prev_tp) * (precision + prev_precision);
        curve.thresholds.push_back(t);
        curve.precision.push_back(precision);
        curve.recall.push_back(recall);
        prev_tp = tp;
        prev_precision = precision;
    }
    curve.auc = area2 / (2.0 * static_cast<double>(total_pos));
    return curve;
}

} // namespace cloudseg
