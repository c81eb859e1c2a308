#include "cloudseg/pipeline.hpp"

#include <exception>
#include <iterator>
#include <stdexcept>

namespace cloudseg {

namespace {

std::vector<SubmissionRecord> predict_one(const SegmentationModel& model, const std::filesystem::path& path,
                                          double threshold, SubmissionScale scale) {
    const Image image = load_image(path);
    const auto [th, tw] = default_target(image.height, image.width);
    const Tensor input = prepare_input(image, th, tw);
    const Tensor probs = softmax_channels(model_forward(model, input));

    std::vector<SubmissionRecord> records;
    records.reserve(kClassCount);
    const TensorShape s = probs.shape();
    for (int c = 0; c < kClassCount; ++c) {
        BinaryMask network(s.h, s.w);
        const float* plane = probs.plane(0, c);
        for (std::int64_t i = 0; i < s.h * s.w; ++i) {
            network.pixels[static_cast<std::size_t>(i)] =
                static_cast<double>(plane[i]) > threshold ? 1 : 0;
        }
        BinaryMask native = mask_resize_nearest(network, image.height, image.width);
        if (scale == SubmissionScale::quarter) {
            native = scale_mask(native);
        }
        SubmissionRecord rec;
        rec.image = path.filename().string();
        rec.cls = static_cast<CloudClass>(c);
        rec.rle = rle_encode(native);
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace

PredictionRun predict_and_encode(const SegmentationModel& model, const std::vector<std::filesystem::path>& images,
                                 double threshold, SubmissionScale scale) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw std::invalid_argument("predict: threshold must be in (0, 1)");
    }
    PredictionRun run;
    for (const std::filesystem::path& path : images) {
        try {
            auto records = predict_one(model, path, threshold, scale);
            run.records.insert(run.records.end(), std::make_move_iterator(records.begin()),
                               std::make_move_iterator(records.end()));
        } catch (const std::exception& e) {
            run.failures.push_back({path.filename().string(), e.what()});
        }
    }
    return run;
}

} // namespace cloudseg
