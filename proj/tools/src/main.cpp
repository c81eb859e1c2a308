#include "cloudseg/augment.hpp"
#include "cloudseg/dataset.hpp"
#include "cloudseg/errors.hpp"
#include "cloudseg/features.hpp"
#include "cloudseg/image.hpp"
#include "cloudseg/losses.hpp"
#include "cloudseg/metrics.hpp"
#include "cloudseg/model.hpp"
#include "cloudseg/parallel.hpp"
#include "cloudseg/pipeline.hpp"
#include "cloudseg/radam.hpp"
#include "cloudseg/rle.hpp"
#include "cloudseg/rng.hpp"
#include "cloudseg/synth.hpp"
#include "cloudseg/tensor_io.hpp"
#include "cloudseg/weight_store.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cloudseg;

namespace {

void emit(const json& j) { std::cout << j.dump(2) << '\n'; }

json class_keyed(const std::array<double, kClassCount>& values) {
    json j = json::object();
    for (int c = 0; c < kClassCount; ++c) {
        j[class_names()[static_cast<std::size_t>(c)]] = values[static_cast<std::size_t>(c)];
    }
    return j;
}

json shape_json(const TensorShape& s) { return json::array({s.n, s.c, s.h, s.w}); }

SegmentationModel build_model(const std::string& variant, const std::string& weights_dir,
                              const std::string& init, std::uint64_t seed) {
    const Variant v = variant_from_name(variant);
    const DecoderConfig dec;
    if (!weights_dir.empty()) {
        return build_efficientunet(v, dec, load_weight_store(weights_dir));
    }
    return build_efficientunet(v, dec, init == "random" ? InitMode::random : InitMode::zeros, seed);
}

std::vector<fs::path> gather_images(const std::vector<std::string>& files, const std::string& dir) {
    std::vector<fs::path> paths(files.begin(), files.end());
    if (!dir.empty()) {
        std::vector<fs::path> found;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file()) {
                continue;
            }
            const std::string ext = entry.path().extension().string();
            if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") {
                found.push_back(entry.path());
            }
        }
        std::sort(found.begin(), found.end());
        paths.insert(paths.end(), found.begin(), found.end());
    }
    if (paths.empty()) {
        throw std::invalid_argument("no input images given");
    }
    return paths;
}

// Binarize softmax probabilities (strict >) into one mask per class.
ClassMaskSet binarize(const Tensor& probs, double threshold) {
    const TensorShape s = probs.shape();
    ClassMaskSet masks;
    for (int c = 0; c < kClassCount; ++c) {
        masks[static_cast<std::size_t>(c)] = BinaryMask(s.h, s.w);
        const float* plane = probs.plane(0, c);
        for (std::int64_t i = 0; i < s.h * s.w; ++i) {
            masks[static_cast<std::size_t>(c)].pixels[static_cast<std::size_t>(i)] =
                static_cast<double>(plane[i]) > threshold ? 1 : 0;
        }
    }
    return masks;
}

WeightStore head_to_store(const ConvWeights& head) {
    WeightStore store;
    const TensorShape ks = head.kernel.shape();
    store.add("head.kernel", {ks.n, ks.c, ks.h, ks.w},
              {head.kernel.data().begin(), head.kernel.data().end()});
    store.add("head.bias", {static_cast<std::int64_t>(head.bias->size())}, *head.bias);
    return store;
}

ConvWeights head_from_store(const WeightStore& store) {
    const WeightEntry& kernel = store.get("head.kernel");
    if (kernel.shape.size() != 4 || kernel.shape[2] != 1 || kernel.shape[3] != 1) {
        throw std::invalid_argument("head.kernel must be a 1x1 filter bank");
    }
    ConvWeights head;
    head.kernel = Tensor({kernel.shape[0], kernel.shape[1], 1, 1}, kernel.values);
    head.bias = store.get("head.bias").values;
    return head;
}

// Mean Dice of thresholded head outputs over every (record, class) pair.
double eval_head(const ConvWeights& head, const std::vector<TrainingRecord>& records, double threshold) {
    double total = 0.0;
    std::int64_t pairs = 0;
    for (const TrainingRecord& rec : records) {
        const Tensor feats = filterbank_features(image_to_tensor(rec.image));
        const ClassMaskSet pred = binarize(softmax_channels(conv2d(feats, head)), threshold);
        for (int c = 0; c < kClassCount; ++c) {
            total += dice_coefficient(pred[static_cast<std::size_t>(c)], rec.masks[static_cast<std::size_t>(c)]);
            ++pairs;
        }
    }
    return pairs ? total / static_cast<double>(pairs) : 0.0;
}

std::vector<SubmissionRecord> index_rows(const DatasetIndex& index) {
    std::vector<SubmissionRecord> rows;
    rows.reserve(index.images.size() * kClassCount);
    for (const std::string& image : index.images) {
        for (int c = 0; c < kClassCount; ++c) {
            const auto cls = static_cast<CloudClass>(c);
            rows.push_back({image, cls, index.annotations.at(PairKey{image, cls})});
        }
    }
    return rows;
}

struct DescribeOpts {
    std::string variant{"b0"};
};

int run_describe(const DescribeOpts& o) {
    const Variant v = variant_from_name(o.variant);
    const ScalingCoefficients co = variant_coefficients(v);
    const EncoderConfig enc = variant_config(v);
    const DecoderConfig dec;

    json stages = json::array();
    for (const BlockSpec& b : enc.blocks) {
        stages.push_back({{"expansion", b.expansion_ratio},
                          {"kernel", b.kernel_size},
                          {"stride", b.stride},
                          {"in_channels", b.in_channels},
                          {"out_channels", b.out_channels},
                          {"repeats", b.repeats}});
    }
    const std::int64_t enc_params = encoder_parameter_count(enc);
    const std::int64_t dec_params = decoder_parameter_count(dec, enc);
    const std::int64_t head_params = dec.channels[4] * kClassCount + kClassCount;
    emit({{"variant", variant_name(v)},
          {"width_mult", co.width_mult},
          {"depth_mult", co.depth_mult},
          {"resolution", co.resolution},
          {"stem_channels", enc.stem_channels},
          {"stages", stages},
          {"block_instances", expand_stages(enc).size()},
          {"encoder_parameters", enc_params},
          {"decoder_parameters", dec_params},
          {"head_parameters", head_params},
          {"total_parameters", enc_params + dec_params + head_params}});
    return 0;
}

struct EncodeOpts {
    std::string mask;
    std::string out;
};

int run_encode(const EncodeOpts& o) {
    const BinaryMask mask = mask_from_image(load_image(o.mask));
    const Rle rle = rle_encode(mask);
    if (!o.out.empty()) {
        std::ofstream f(o.out, std::ios::binary);
        if (!f) {
            throw io_error("cannot write " + o.out);
        }
        f << rle_text(rle) << '\n';
    }
    emit({{"height", mask.height},
          {"width", mask.width},
          {"area", mask.area()},
          {"runs", rle.runs.size()},
          {"rle", rle_text(rle)}});
    return 0;
}

struct DecodeOpts {
    std::string rle;
    std::string rle_file;
    std::int64_t height{0};
    std::int64_t width{0};
    std::string out;
};

int run_decode(const DecodeOpts& o) {
    std::string text = o.rle;
    if (!o.rle_file.empty()) {
        std::ifstream f(o.rle_file, std::ios::binary);
        if (!f) {
            throw io_error("cannot open " + o.rle_file);
        }
        text.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
    }
    const BinaryMask mask = rle_decode(parse_rle(text), o.height, o.width);
    save_image(o.out, mask_to_image(mask));
    emit({{"height", mask.height}, {"width", mask.width}, {"area", mask.area()}, {"out", o.out}});
    return 0;
}

struct ScaleMasksOpts {
    std::string input;
    std::string output;
    std::int64_t height{1400};
    std::int64_t width{2100};
};

int run_scale_masks(const ScaleMasksOpts& o) {
    std::vector<SubmissionRecord> rows = load_submission(o.input);
    for (SubmissionRecord& row : rows) {
        row.rle = rle_encode(scale_mask(rle_decode(row.rle, o.height, o.width)));
    }
    save_submission(o.output, rows);
    emit({{"rows", rows.size()}, {"height", o.height / 4}, {"width", o.width / 4}, {"out", o.output}});
    return 0;
}

struct AugmentOpts {
    std::string input;
    std::string output;
};

int run_augment(const AugmentOpts& o, std::uint64_t seed) {
    const std::vector<TrainingRecord> records = read_dataset(o.input);
    const std::vector<TrainingRecord> augmented = augment_dataset(records, seed);
    write_dataset(o.output, augmented);
    emit({{"input_records", records.size()},
          {"output_records", augmented.size()},
          {"seed", seed},
          {"out", o.output}});
    return 0;
}

struct SplitOpts {
    std::string annotations;
    std::string train_out;
    std::string val_out;
    double fraction{0.8};
};

int run_split(const SplitOpts& o, std::uint64_t seed) {
    const DatasetIndex index = load_annotations(o.annotations);
    const auto [train, val] = split_train_val(index, SplitSpec{o.fraction, seed});
    save_submission(o.train_out, index_rows(train));
    save_submission(o.val_out, index_rows(val));
    emit({{"images", index.images.size()},
          {"train_images", train.images.size()},
          {"val_images", val.images.size()},
          {"seed", seed}});
    return 0;
}

struct ForwardOpts {
    std::string image;
    std::string out;
    std::string variant{"b0"};
    std::string weights;
    std::string init{"random"};
    std::int64_t height{0};
    std::int64_t width{0};
    bool probs{false};
};

int run_forward(const ForwardOpts& o, std::uint64_t seed) {
    const SegmentationModel model = build_model(o.variant, o.weights, o.init, seed);
    const Image image = load_image(o.image);
    auto [th, tw] = default_target(image.height, image.width);
    if (o.height > 0) {
        th = o.height;
    }
    if (o.width > 0) {
        tw = o.width;
    }
    const Tensor input = prepare_input(image, th, tw);
    Tensor output = model_forward(model, input);
    if (o.probs) {
        output = softmax_channels(output);
    }
    save_tensor_raw(o.out, output);
    emit({{"image", o.image},
          {"input_shape", shape_json(input.shape())},
          {"output_shape", shape_json(output.shape())},
          {"kind", o.probs ? "probabilities" : "logits"},
          {"out", o.out + ".bin"}});
    return 0;
}

struct TrainHeadOpts {
    std::string data;
    std::string features{"filterbank"};
    std::string variant{"b0"};
    std::string weights;
    std::string init{"random"};
    std::string out;
    int epochs{12};
    int batch{8};
    double lr{1e-3};
    double fraction{0.8};
    double threshold{0.5};
};

int run_train_head(const TrainHeadOpts& o, std::uint64_t seed) {
    std::vector<TrainingRecord> records = read_dataset(o.data);
    if (records.empty()) {
        throw std::invalid_argument("train-head: dataset is empty");
    }
    for (const TrainingRecord& rec : records) {
        if (rec.image.height != records[0].image.height || rec.image.width != records[0].image.width) {
            throw std::invalid_argument("train-head: records must share dims; " + rec.name + " differs");
        }
    }

    // image-atomic split, same convention as split_train_val
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    const auto n_train = static_cast<std::size_t>(
        std::llround(o.fraction * static_cast<double>(records.size())));
    if (n_train == 0 || n_train == records.size()) {
        throw std::invalid_argument("train-head: split leaves an empty side");
    }

    const bool trunk = o.features == "trunk";
    const SegmentationModel model =
        trunk ? build_model(o.variant, o.weights, o.init, seed) : SegmentationModel{};
    auto features_of = [&](const TrainingRecord& rec) {
        const Tensor img = image_to_tensor(rec.image);
        return trunk ? model_trunk_forward(model, img) : filterbank_features(img);
    };

    const TensorShape one = features_of(records[0]).shape();
    Tensor features({static_cast<std::int64_t>(n_train), one.c, one.h, one.w});
    Tensor targets({static_cast<std::int64_t>(n_train), kClassCount, one.h, one.w});
    for (std::size_t i = 0; i < n_train; ++i) {
        const TrainingRecord& rec = records[order[i]];
        const Tensor f = features_of(rec);
        std::copy_n(f.data().begin(), f.numel(), features.plane(static_cast<std::int64_t>(i), 0));
        for (int c = 0; c < kClassCount; ++c) {
            float* t = targets.plane(static_cast<std::int64_t>(i), c);
            const BinaryMask& m = rec.masks[static_cast<std::size_t>(c)];
            for (std::int64_t p = 0; p < one.h * one.w; ++p) {
                t[p] = m.pixels[static_cast<std::size_t>(p)] ? 1.0f : 0.0f;
            }
        }
    }

    std::vector<TrainingRecord> val(records.size() - n_train);
    for (std::size_t i = n_train; i < records.size(); ++i) {
        val[i - n_train] = std::move(records[order[i]]);
    }

    RAdamHyperparams hp;
    hp.lr = o.lr;
    ConvWeights zero_head;
    zero_head.kernel = Tensor({kClassCount, one.c, 1, 1});
    zero_head.bias.emplace(kClassCount, 0.0f);
    double dice_before = 0.0;
    double dice_after = 0.0;
    TrainHeadResult result;
    if (trunk) {
        // trunk features are only defined through the model; evaluate inline
        auto eval = [&](const ConvWeights& head) {
            double total = 0.0;
            std::int64_t pairs = 0;
            for (const TrainingRecord& rec : val) {
                const ClassMaskSet pred =
                    binarize(softmax_channels(conv2d(features_of(rec), head)), o.threshold);
                for (int c = 0; c < kClassCount; ++c) {
                    total += dice_coefficient(pred[static_cast<std::size_t>(c)],
                                              rec.masks[static_cast<std::size_t>(c)]);
                    ++pairs;
                }
            }
            return pairs ? total / static_cast<double>(pairs) : 0.0;
        };
        dice_before = eval(zero_head);
        result = train_head(features, targets, hp, o.epochs, o.batch, seed);
        dice_after = eval(result.head);
    } else {
        dice_before = eval_head(zero_head, val, o.threshold);
        result = train_head(features, targets, hp, o.epochs, o.batch, seed);
        dice_after = eval_head(result.head, val, o.threshold);
    }

    if (!o.out.empty()) {
        save_weight_store(o.out, head_to_store(result.head));
    }
    emit({{"records", records.size()},
          {"train_records", n_train},
          {"val_records", val.size()},
          {"features", o.features},
          {"feature_channels", one.c},
          {"steps", result.loss_history.size()},
          {"first_loss", result.loss_history.front()},
          {"last_loss", result.loss_history.back()},
          {"val_dice_before", dice_before},
          {"val_dice_after", dice_after},
          {"improvement", dice_after - dice_before},
          {"seed", seed}});
    return 0;
}

struct PredictOpts {
    std::vector<std::string> images;
    std::string dir;
    std::string out;
    std::string variant{"b0"};
    std::string weights;
    std::string init{"zeros"};
    std::string features{"model"};
    std::string head;
    double threshold{0.5};
    std::string scale{"native"};
};

int run_predict(const PredictOpts& o, std::uint64_t seed) {
    const std::vector<fs::path> paths = gather_images(o.images, o.dir);
    const SubmissionScale scale = o.scale == "quarter" ? SubmissionScale::quarter : SubmissionScale::native;

    PredictionRun run;
    if (o.features == "filterbank") {
        if (o.head.empty()) {
            throw std::invalid_argument("predict: --features filterbank requires --head");
        }
        if (!(o.threshold > 0.0 && o.threshold < 1.0)) {
            throw std::invalid_argument("predict: threshold must be in (0, 1)");
        }
        const ConvWeights head = head_from_store(load_weight_store(o.head));
        for (const fs::path& path : paths) {
            try {
                const Image image = load_image(path);
                const Tensor feats = filterbank_features(image_to_tensor(image));
                ClassMaskSet masks = binarize(softmax_channels(conv2d(feats, head)), o.threshold);
                for (int c = 0; c < kClassCount; ++c) {
                    BinaryMask mask = std::move(masks[static_cast<std::size_t>(c)]);
                    if (scale == SubmissionScale::quarter) {
                        mask = scale_mask(mask);
                    }
                    run.records.push_back(
                        {path.filename().string(), static_cast<CloudClass>(c), rle_encode(mask)});
                }
            } catch (const std::exception& e) {
                run.failures.push_back({path.filename().string(), e.what()});
            }
        }
    } else {
        const SegmentationModel model = build_model(o.variant, o.weights, o.init, seed);
        run = predict_and_encode(model, paths, o.threshold, scale);
    }

    save_submission(o.out, run.records);
    json failures = json::array();
    for (const PredictFailure& f : run.failures) {
        failures.push_back({{"image", f.image}, {"message", f.message}});
    }
    emit({{"images", paths.size()},
          {"records", run.records.size()},
          {"failures", failures},
          {"out", o.out}});
    return 0;
}

struct ScoreOpts {
    std::string pred;
    std::string truth;
    std::int64_t height{1400};
    std::int64_t width{2100};
};

int run_score(const ScoreOpts& o) {
    const DiceReport report = score_submission(o.pred, o.truth, o.height, o.width);
    json pairs = json::object();
    for (int c = 0; c < kClassCount; ++c) {
        pairs[class_names()[static_cast<std::size_t>(c)]] = report.class_pairs[static_cast<std::size_t>(c)];
    }
    emit({{"mean_dice", report.mean},
          {"per_class", class_keyed(report.per_class)},
          {"class_pairs", pairs},
          {"n_pairs", report.pairs}});
    return 0;
}

struct PrCurveOpts {
    std::string input;
    std::string out;
};

int run_pr_curve(const PrCurveOpts& o) {
    std::ifstream in(o.input);
    if (!in) {
        throw io_error("cannot open " + o.input);
    }
    std::string line;
    std::int64_t line_no = 0;
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    if (!std::getline(in, line)) {
        throw std::invalid_argument(o.input + ":1: missing header row");
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != "score,label") {
        throw std::invalid_argument(o.input + ":1: malformed header, expected \"score,label\"");
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto at = o.input + ":" + std::to_string(line_no);
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw std::invalid_argument(at + ": row has no comma");
        }
        std::size_t used = 0;
        double score = 0.0;
        try {
            score = std::stod(line.substr(0, comma), &used);
        } catch (const std::exception&) {
            throw std::invalid_argument(at + ": bad score");
        }
        if (used != comma) {
            throw std::invalid_argument(at + ": bad score");
        }
        const std::string label = line.substr(comma + 1);
        if (label != "0" && label != "1") {
            throw std::invalid_argument(at + ": label must be 0 or 1");
        }
        scores.push_back(score);
        labels.push_back(label == "1" ? 1 : 0);
    }

    const PrCurve curve = pr_curve(scores, labels);
    if (!o.out.empty()) {
        std::ofstream f(o.out, std::ios::binary);
        if (!f) {
            throw io_error("cannot write " + o.out);
        }
        f.precision(17);
        f << "threshold,precision,recall\n";
        for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
            f << curve.thresholds[i] << ',' << curve.precision[i] << ',' << curve.recall[i] << '\n';
        }
    }
    json j{{"samples", scores.size()}, {"points", curve.thresholds.size()}, {"auc", curve.auc}};
    if (!o.out.empty()) {
        j["out"] = o.out;
    }
    emit(j);
    return 0;
}

struct SynthOpts {
    std::string out;
    int count{200};
    std::int64_t height{64};
    std::int64_t width{64};
};

int run_synth(const SynthOpts& o, std::uint64_t seed) {
    SynthConfig config;
    config.count = o.count;
    config.height = o.height;
    config.width = o.width;
    config.seed = seed;
    write_dataset(o.out, make_synthetic_dataset(config));
    emit({{"images", o.count}, {"height", o.height}, {"width", o.width}, {"seed", seed}, {"out", o.out}});
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cloud-structure segmentation toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read flags from a key-value file");

    std::uint64_t seed = 0;
    int threads = 0;
    app.add_option("--seed", seed, "seed for all randomness")->capture_default_str();
    app.add_option("--threads", threads, "worker threads, 0 = hardware")->capture_default_str();

    DescribeOpts describe_opts;
    auto* describe = app.add_subcommand("describe", "print a variant's architecture and parameter counts");
    describe->add_option("--variant", describe_opts.variant, "b0..b5")->capture_default_str();

    EncodeOpts encode_opts;
    auto* encode = app.add_subcommand("encode", "RLE-encode a mask image");
    encode->add_option("--mask", encode_opts.mask, "mask image (PGM/PPM)")
        ->required()
        ->check(CLI::ExistingFile);
    encode->add_option("--out", encode_opts.out, "also write the RLE text here");

    DecodeOpts decode_opts;
    auto* decode = app.add_subcommand("decode", "decode RLE text to a mask image");
    decode->add_option("--rle", decode_opts.rle, "RLE text, e.g. \"1 3 10 5\"");
    decode->add_option("--rle-file", decode_opts.rle_file, "file holding the RLE text")
        ->check(CLI::ExistingFile);
    decode->add_option("--height", decode_opts.height, "mask height")->required();
    decode->add_option("--width", decode_opts.width, "mask width")->required();
    decode->add_option("--out", decode_opts.out, "output mask image (PGM)")->required();

    ScaleMasksOpts scale_opts;
    auto* scale_masks = app.add_subcommand("scale-masks", "quarter-scale every mask in a submission");
    scale_masks->add_option("--input", scale_opts.input, "submission CSV")->required()->check(CLI::ExistingFile);
    scale_masks->add_option("--output", scale_opts.output, "scaled CSV")->required();
    scale_masks->add_option("--height", scale_opts.height, "mask height")->capture_default_str();
    scale_masks->add_option("--width", scale_opts.width, "mask width")->capture_default_str();

    AugmentOpts augment_opts;
    auto* augment = app.add_subcommand("augment", "double a dataset with seeded transforms");
    augment->add_option("--input", augment_opts.input, "dataset dir")->required()->check(CLI::ExistingDirectory);
    augment->add_option("--output", augment_opts.output, "output dataset dir")->required();

    SplitOpts split_opts;
    auto* split = app.add_subcommand("split", "split annotations into train/val CSVs");
    split->add_option("--annotations", split_opts.annotations, "annotations CSV")
        ->required()
        ->check(CLI::ExistingFile);
    split->add_option("--train-out", split_opts.train_out, "train CSV")->required();
    split->add_option("--val-out", split_opts.val_out, "val CSV")->required();
    split->add_option("--fraction", split_opts.fraction, "train fraction")->capture_default_str();

    ForwardOpts forward_opts;
    auto* forward = app.add_subcommand("forward", "run the network on one image and save the output tensor");
    forward->add_option("--image", forward_opts.image, "input image")->required()->check(CLI::ExistingFile);
    forward->add_option("--out", forward_opts.out, "output tensor prefix (.bin/.json)")->required();
    forward->add_option("--variant", forward_opts.variant, "b0..b5")->capture_default_str();
    forward->add_option("--weights", forward_opts.weights, "weight-store dir")->check(CLI::ExistingDirectory);
    forward->add_option("--init", forward_opts.init, "zeros|random when no weights")
        ->check(CLI::IsMember({"zeros", "random"}))
        ->capture_default_str();
    forward->add_option("--height", forward_opts.height, "network input height (multiple of 32)");
    forward->add_option("--width", forward_opts.width, "network input width (multiple of 32)");
    forward->add_flag("--probs", forward_opts.probs, "save softmax probabilities instead of logits");

    TrainHeadOpts train_opts;
    auto* train = app.add_subcommand("train-head", "train the 4-class pointwise head on frozen features");
    train->add_option("--data", train_opts.data, "dataset dir")->required()->check(CLI::ExistingDirectory);
    train->add_option("--features", train_opts.features, "filterbank|trunk")
        ->check(CLI::IsMember({"filterbank", "trunk"}))
        ->capture_default_str();
    train->add_option("--variant", train_opts.variant, "b0..b5 (trunk features)")->capture_default_str();
    train->add_option("--weights", train_opts.weights, "weight-store dir (trunk features)")
        ->check(CLI::ExistingDirectory);
    train->add_option("--init", train_opts.init, "zeros|random trunk init when no weights")
        ->check(CLI::IsMember({"zeros", "random"}))
        ->capture_default_str();
    train->add_option("--out", train_opts.out, "save the trained head as a weight store here");
    train->add_option("--epochs", train_opts.epochs, "epochs")->capture_default_str();
    train->add_option("--batch", train_opts.batch, "batch size")->capture_default_str();
    train->add_option("--lr", train_opts.lr, "learning rate")->capture_default_str();
    train->add_option("--fraction", train_opts.fraction, "train fraction")->capture_default_str();
    train->add_option("--threshold", train_opts.threshold, "binarization threshold")->capture_default_str();

    PredictOpts predict_opts;
    auto* predict = app.add_subcommand("predict", "predict masks and write a submission CSV");
    predict->add_option("images", predict_opts.images, "image files");
    predict->add_option("--dir", predict_opts.dir, "directory of .ppm/.pgm images");
    predict->add_option("--out", predict_opts.out, "submission CSV")->required();
    predict->add_option("--variant", predict_opts.variant, "b0..b5")->capture_default_str();
    predict->add_option("--weights", predict_opts.weights, "weight-store dir")->check(CLI::ExistingDirectory);
    predict->add_option("--init", predict_opts.init, "zeros|random when no weights")
        ->check(CLI::IsMember({"zeros", "random"}))
        ->capture_default_str();
    predict->add_option("--features", predict_opts.features, "model|filterbank")
        ->check(CLI::IsMember({"model", "filterbank"}))
        ->capture_default_str();
    predict->add_option("--head", predict_opts.head, "head weight-store dir (filterbank features)")
        ->check(CLI::ExistingDirectory);
    predict->add_option("--threshold", predict_opts.threshold, "binarization threshold")->capture_default_str();
    predict->add_option("--scale", predict_opts.scale, "native|quarter")
        ->check(CLI::IsMember({"native", "quarter"}))
        ->capture_default_str();

    ScoreOpts score_opts;
    auto* score = app.add_subcommand("score", "mean Dice of a submission against truth annotations");
    score->add_option("--pred", score_opts.pred, "prediction CSV")->required()->check(CLI::ExistingFile);
    score->add_option("--truth", score_opts.truth, "truth CSV")->required()->check(CLI::ExistingFile);
    score->add_option("--height", score_opts.height, "mask height")->capture_default_str();
    score->add_option("--width", score_opts.width, "mask width")->capture_default_str();

    PrCurveOpts pr_opts;
    auto* pr = app.add_subcommand("pr-curve", "precision-recall sweep over a score,label CSV");
    pr->add_option("--input", pr_opts.input, "CSV with header score,label")->required()->check(CLI::ExistingFile);
    pr->add_option("--out", pr_opts.out, "write threshold,precision,recall rows here");

    SynthOpts synth_opts;
    auto* synth = app.add_subcommand("synth", "generate a deterministic toy dataset");
    synth->add_option("--out", synth_opts.out, "output dataset dir")->required();
    synth->add_option("--count", synth_opts.count, "image count")->capture_default_str();
    synth->add_option("--height", synth_opts.height, "image height")->capture_default_str();
    synth->add_option("--width", synth_opts.width, "image width")->capture_default_str();

    // accept --seed/--threads after the verb as well
    for (CLI::App* sub : {describe, encode, decode, scale_masks, augment, split, forward, train, predict,
                          score, pr, synth}) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        set_thread_count(threads);
        if (describe->parsed()) {
            return run_describe(describe_opts);
        }
        if (encode->parsed()) {
            return run_encode(encode_opts);
        }
        if (decode->parsed()) {
            return run_decode(decode_opts);
        }
        if (scale_masks->parsed()) {
            return run_scale_masks(scale_opts);
        }
        if (augment->parsed()) {
            return run_augment(augment_opts, seed);
        }
        if (split->parsed()) {
            return run_split(split_opts, seed);
        }
        if (forward->parsed()) {
            return run_forward(forward_opts, seed);
        }
        if (train->parsed()) {
            return run_train_head(train_opts, seed);
        }
        if (predict->parsed()) {
            return run_predict(predict_opts, seed);
        }
        if (score->parsed()) {
            return run_score(score_opts);
        }
        if (pr->parsed()) {
            return run_pr_curve(pr_opts);
        }
        if (synth->parsed()) {
            return run_synth(synth_opts, seed);
        }
        std::cerr << "error: no subcommand\n";
        return 1;
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
