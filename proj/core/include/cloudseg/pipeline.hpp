#pragma once

#include "cloudseg/dataset.hpp"
#include "cloudseg/model.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace cloudseg {

enum class SubmissionScale { native, quarter };

struct PredictFailure {
    std::string image;
    std::string message;
};

struct PredictionRun {
    std::vector<SubmissionRecord> records; // 4 per successfully processed image
    std::vector<PredictFailure> failures;
};

// Per image: prepare_input at the default network target, forward, softmax,
// binarize each class at strictly-greater-than threshold, resize the network
// mask to the image's native dims, optionally quarter-scale, RLE-encode.
// A failing image is recorded and the run continues.
PredictionRun predict_and_encode(const SegmentationModel& model, const std::vector<std::filesystem::path>& images,
                                 double threshold = 0.5, SubmissionScale scale = SubmissionScale::native);

} // namespace cloudseg
