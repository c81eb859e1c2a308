#pragma once

#include "cloudseg/augment.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace cloudseg {

struct SynthConfig {
    int count{200};
    std::int64_t height{64};
    std::int64_t width{64};
    std::uint64_t seed{0};
};

// Deterministic toy scenes: one textured colored rectangle per class, each
// inside its own quadrant on a dark noisy background. Easy enough for a
// pointwise head over filterbank features, non-trivial for an empty baseline.
std::vector<TrainingRecord> make_synthetic_dataset(const SynthConfig& config);

// Layout: <dir>/images/<name> (PPM) plus <dir>/annotations.csv.
void write_dataset(const std::filesystem::path& dir, const std::vector<TrainingRecord>& records);
std::vector<TrainingRecord> read_dataset(const std::filesystem::path& dir);

} // namespace cloudseg
