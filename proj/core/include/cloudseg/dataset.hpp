#pragma once

#include "cloudseg/mask.hpp"
#include "cloudseg/metrics.hpp"
#include "cloudseg/rle.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace cloudseg {

// One "Image_Label,EncodedPixels" row. An empty encoding means the class is
// absent from the image.
struct SubmissionRecord {
    std::string image;
    CloudClass cls{CloudClass::fish};
    Rle rle;
};

// "<filename>_<ClassName>"
std::string submission_label(const std::string& image, CloudClass cls);

struct DatasetIndex {
    std::vector<std::string> images;    // sorted, unique
    std::map<PairKey, Rle> annotations; // exactly kClassCount entries per image
};

// Strict reader for annotation files: header "Image_Label,EncodedPixels",
// no duplicate pairs, and every image must supply all four class rows.
// Content problems report the offending line number.
DatasetIndex load_annotations(const std::filesystem::path& csv);

// Lenient reader for prediction files: rows are validated individually but
// images may be partial; pairs left out are scored as empty masks.
std::vector<SubmissionRecord> load_submission(const std::filesystem::path& csv);

void save_submission(const std::filesystem::path& csv, const std::vector<SubmissionRecord>& records);

struct SplitSpec {
    double train_fraction{0.8};
    std::uint64_t seed{0};
};

// Image-atomic deterministic partition; |train| = round(train_fraction * N).
std::pair<DatasetIndex, DatasetIndex> split_train_val(const DatasetIndex& index, const SplitSpec& spec);

// Decodes both files at the given mask dims and averages Dice over the
// truth's (image, class) universe; predictions outside it are an error.
DiceReport score_submission(const std::filesystem::path& pred_csv, const std::filesystem::path& truth_csv,
                            std::int64_t height = 1400, std::int64_t width = 2100);

} // namespace cloudseg
