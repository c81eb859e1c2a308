#include "cloudseg/dataset.hpp"

#include "cloudseg/errors.hpp"
#include "cloudseg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

namespace cloudseg {

namespace {

constexpr const char* kHeader = "Image_Label,EncodedPixels";

std::string location(const std::filesystem::path& csv, std::int64_t line) {
    return csv.string() + ":" + std::to_string(line);
}

// Parses the rows shared by both readers; completeness checks differ.
std::vector<SubmissionRecord> read_rows(const std::filesystem::path& csv) {
    std::ifstream in(csv);
    if (!in) {
        throw io_error("cannot open " + csv.string());
    }
    std::string line;
    std::int64_t line_no = 0;
    if (!std::getline(in, line)) {
        throw std::invalid_argument(location(csv, 1) + ": missing header row");
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != kHeader) {
        throw std::invalid_argument(location(csv, 1) + ": malformed header, expected \"" +
                                    std::string(kHeader) + "\"");
    }

    std::vector<SubmissionRecord> records;
    std::set<PairKey> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw std::invalid_argument(location(csv, line_no) + ": row has no comma");
        }
        const std::string label = line.substr(0, comma);
        const std::string encoded = line.substr(comma + 1);
        const auto underscore = label.find_last_of('_');
        if (underscore == std::string::npos || underscore == 0) {
            throw std::invalid_argument(location(csv, line_no) + ": label \"" + label +
                                        "\" is not <filename>_<ClassName>");
        }
        SubmissionRecord rec;
        rec.image = label.substr(0, underscore);
        try {
            rec.cls = class_from_name(label.substr(underscore + 1));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(location(csv, line_no) + ": " + e.what());
        }
        try {
            rec.rle = parse_rle(encoded);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(location(csv, line_no) + ": " + e.what());
        }
        if (!seen.insert(PairKey{rec.image, rec.cls}).second) {
            throw std::invalid_argument(location(csv, line_no) + ": duplicate entry for " +
                                        submission_label(rec.image, rec.cls));
        }
        records.push_back(std::move(rec));
    }
    return records;
}

DatasetIndex index_for(const std::vector<std::string>& images, const std::map<PairKey, Rle>& annotations) {
    DatasetIndex out;
    out.images = images;
    std::sort(out.images.begin(), out.images.end());
    for (const std::string& image : out.images) {
        for (int c = 0; c < kClassCount; ++c) {
            const PairKey key{image, static_cast<CloudClass>(c)};
            out.annotations.emplace(key, annotations.at(key));
        }
    }
    return out;
}

MaskMap decode_all(const std::map<PairKey, Rle>& annotations, std::int64_t height, std::int64_t width,
                   const std::filesystem::path& csv) {
    MaskMap masks;
    for (const auto& [key, rle] : annotations) {
        try {
            masks.emplace(key, rle_decode(rle, height, width));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(csv.string() + ": " + submission_label(key.image, key.cls) + ": " +
                                        e.what());
        }
    }
    return masks;
}

} // namespace

std::string submission_label(const std::string& image, CloudClass cls) {
    return image + "_" + class_names()[static_cast<std::size_t>(cls)];
}

DatasetIndex load_annotations(const std::filesystem::path& csv) {
    const std::vector<SubmissionRecord> rows = read_rows(csv);
    DatasetIndex index;
    std::map<std::string, int> per_image;
    for (const SubmissionRecord& rec : rows) {
        index.annotations.emplace(PairKey{rec.image, rec.cls}, rec.rle);
        ++per_image[rec.image];
    }
    for (const auto& [image, count] : per_image) {
        if (count != kClassCount) {
            throw std::invalid_argument(csv.string() + ": image " + image + " has " + std::to_string(count) +
                                        " of " + std::to_string(kClassCount) + " class rows");
        }
        index.images.push_back(image);
    }
    return index; // per_image is a sorted map, so images is sorted
}

std::vector<SubmissionRecord> load_submission(const std::filesystem::path& csv) {
    return read_rows(csv);
}

void save_submission(const std::filesystem::path& csv, const std::vector<SubmissionRecord>& records) {
    std::ofstream out(csv, std::ios::binary);
    if (!out) {
        throw io_error("cannot write " + csv.string());
    }
    out << kHeader << '\n';
    for (const SubmissionRecord& rec : records) {
        out << submission_label(rec.image, rec.cls) << ',' << rle_text(rec.rle) << '\n';
    }
    if (!out) {
        throw io_error("write failed for " + csv.string());
    }
}

std::pair<DatasetIndex, DatasetIndex> split_train_val(const DatasetIndex& index, const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw std::invalid_argument("split: train_fraction must be in (0, 1)");
    }
    std::vector<std::string> names = index.images;
    std::sort(names.begin(), names.end());
    Rng rng(spec.seed);
    rng.shuffle(names);
    const auto n_train = static_cast<std::size_t>(
        std::llround(spec.train_fraction * static_cast<double>(names.size())));
    const std::vector<std::string> train_names(names.begin(), names.begin() + static_cast<std::ptrdiff_t>(n_train));
    const std::vector<std::string> val_names(names.begin() + static_cast<std::ptrdiff_t>(n_train), names.end());
    return {index_for(train_names, index.annotations), index_for(val_names, index.annotations)};
}

DiceReport score_submission(const std::filesystem::path& pred_csv, const std::filesystem::path& truth_csv,
                            std::int64_t height, std::int64_t width) {
    const DatasetIndex truth = load_annotations(truth_csv);
    const std::vector<SubmissionRecord> pred_rows = load_submission(pred_csv);
    const MaskMap truth_masks = decode_all(truth.annotations, height, width, truth_csv);
    std::map<PairKey, Rle> pred_annotations;
    for (const SubmissionRecord& rec : pred_rows) {
        pred_annotations.emplace(PairKey{rec.image, rec.cls}, rec.rle);
    }
    const MaskMap pred_masks = decode_all(pred_annotations, height, width, pred_csv);
    return dice_report(pred_masks, truth_masks);
}

} // namespace cloudseg
