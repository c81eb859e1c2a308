#include "cloudseg/synth.hpp"

#include "cloudseg/dataset.hpp"
#include "cloudseg/errors.hpp"
#include "cloudseg/rng.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace cloudseg {

namespace {

struct Rect {
    std::int64_t y0, x0, y1, x1; // half-open
};

constexpr std::array<std::array<int, 3>, kClassCount> kColors = {{
    {205, 55, 55},  // Fish: red, horizontal stripes
    {55, 205, 55},  // Flower: green, vertical stripes
    {55, 90, 215},  // Gravel: blue, checkerboard
    {215, 200, 55}, // Sugar: yellow, dots
}};

bool textured_bright(int cls, std::int64_t y, std::int64_t x, const Rect& r) {
    const std::int64_t ly = y - r.y0;
    const std::int64_t lx = x - r.x0;
    switch (cls) {
    case 0:
        return ly % 4 < 2;
    case 1:
        return lx % 4 < 2;
    case 2:
        return (ly / 3 + lx / 3) % 2 == 0;
    default:
        return ly % 4 == 1 && lx % 4 == 1;
    }
}

TrainingRecord make_record(const SynthConfig& config, int idx) {
    Rng rng(Rng::mix(config.seed, static_cast<std::uint64_t>(idx)));
    const std::int64_t h = config.height;
    const std::int64_t w = config.width;

    TrainingRecord rec;
    char name[32];
    std::snprintf(name, sizeof name, "img%04d.ppm", idx);
    rec.name = name;
    rec.image = Image(h, w, 3);
    for (std::int64_t i = 0; i < h * w; ++i) {
        const auto base = static_cast<std::uint8_t>(18 + rng.index(12));
        for (int c = 0; c < 3; ++c) {
            rec.image.pixels[static_cast<std::size_t>(i * 3 + c)] = base;
        }
    }

    for (int cls = 0; cls < kClassCount; ++cls) {
        rec.masks[static_cast<std::size_t>(cls)] = BinaryMask(h, w);
        // quadrant of this class, with a 1-pixel gutter between quadrants
        const std::int64_t qy = (cls / 2) * (h / 2);
        const std::int64_t qx = (cls % 2) * (w / 2);
        const std::int64_t qh = h / 2 - 1;
        const std::int64_t qw = w / 2 - 1;
        // rectangle occupies between roughly half and all of the quadrant
        const auto rh = static_cast<std::int64_t>(qh / 2 + rng.index(static_cast<std::uint64_t>(qh - qh / 2)));
        const auto rw = static_cast<std::int64_t>(qw / 2 + rng.index(static_cast<std::uint64_t>(qw - qw / 2)));
        const auto oy = static_cast<std::int64_t>(rng.index(static_cast<std::uint64_t>(qh - rh + 1)));
        const auto ox = static_cast<std::int64_t>(rng.index(static_cast<std::uint64_t>(qw - rw + 1)));
        const Rect r{qy + oy, qx + ox, qy + oy + rh, qx + ox + rw};
        for (std::int64_t y = r.y0; y < r.y1; ++y) {
            for (std::int64_t x = r.x0; x < r.x1; ++x) {
                rec.masks[static_cast<std::size_t>(cls)].at(y, x) = 1;
                const double scale = textured_bright(cls, y, x, r) ? 1.0 : 0.6;
                for (int c = 0; c < 3; ++c) {
                    rec.image.at(y, x, c) =
                        static_cast<std::uint8_t>(kColors[static_cast<std::size_t>(cls)][c] * scale);
                }
            }
        }
    }
    return rec;
}

} // namespace

std::vector<TrainingRecord> make_synthetic_dataset(const SynthConfig& config) {
    if (config.count < 1) {
        throw std::invalid_argument("synth: count must be >= 1");
    }
    if (config.height < 16 || config.width < 16) {
        throw std::invalid_argument("synth: dims must be at least 16x16");
    }
    std::vector<TrainingRecord> records(static_cast<std::size_t>(config.count));
    for (int i = 0; i < config.count; ++i) {
        records[static_cast<std::size_t>(i)] = make_record(config, i);
    }
    return records;
}

void write_dataset(const std::filesystem::path& dir, const std::vector<TrainingRecord>& records) {
    std::filesystem::create_directories(dir / "images");
    std::vector<SubmissionRecord> rows;
    rows.reserve(records.size() * kClassCount);
    for (const TrainingRecord& rec : records) {
        save_image(dir / "images" / rec.name, rec.image);
        for (int cls = 0; cls < kClassCount; ++cls) {
            rows.push_back({rec.name, static_cast<CloudClass>(cls),
                            rle_encode(rec.masks[static_cast<std::size_t>(cls)])});
        }
    }
    save_submission(dir / "annotations.csv", rows);
}

std::vector<TrainingRecord> read_dataset(const std::filesystem::path& dir) {
    const DatasetIndex index = load_annotations(dir / "annotations.csv");
    std::vector<TrainingRecord> records;
    records.reserve(index.images.size());
    for (const std::string& name : index.images) {
        TrainingRecord rec;
        rec.name = name;
        rec.image = load_image(dir / "images" / name);
        for (int cls = 0; cls < kClassCount; ++cls) {
            const Rle& rle = index.annotations.at(PairKey{name, static_cast<CloudClass>(cls)});
            rec.masks[static_cast<std::size_t>(cls)] = rle_decode(rle, rec.image.height, rec.image.width);
        }
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace cloudseg
