#include "cloudseg/augment.hpp"
#include "cloudseg/image.hpp"
#include "cloudseg/mask.hpp"
#include "cloudseg/rng.hpp"
#include "cloudseg/tensor.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

using namespace cloudseg;

namespace {

ClassMaskSet random_masks(Rng& rng, std::int64_t h, std::int64_t w) {
    ClassMaskSet set;
    for (auto& m : set) {
        m = oracles::random_mask(rng, h, w, 0.3);
    }
    return set;
}

double tensor_sum(const Tensor& t) {
    double s = 0.0;
    for (const float v : t.data()) {
        s += v;
    }
    return s;
}

} // namespace

TEST_CASE("flips are exact involutions") {
    Rng rng(61);
    const Tensor img = oracles::random_tensor(rng, {1, 3, 9, 14}, 0.0, 1.0);
    const ClassMaskSet masks = random_masks(rng, 9, 14);
    for (const auto kind : {AugmentationKind::hflip(), AugmentationKind::vflip()}) {
        const auto once = apply_augmentation(kind, img, masks);
        const auto twice = apply_augmentation(kind, once.first, once.second);
        CHECK(oracles::max_abs_diff(twice.first, img) == 0.0);
        for (int c = 0; c < kClassCount; ++c) {
            CHECK(twice.second[static_cast<std::size_t>(c)] == masks[static_cast<std::size_t>(c)]);
        }
        // a flip is a pure permutation of pixel values
        CHECK(tensor_sum(once.first) == doctest::Approx(tensor_sum(img)).epsilon(1e-12));
    }
}

TEST_CASE("flip hand case on a 2x3 frame") {
    Tensor img({1, 1, 2, 3});
    // row 0: 1 2 3 / row 1: 4 5 6
    for (std::int64_t y = 0; y < 2; ++y) {
        for (std::int64_t x = 0; x < 3; ++x) {
            img.at(0, 0, y, x) = static_cast<float>(y * 3 + x + 1);
        }
    }
    ClassMaskSet masks;
    for (auto& m : masks) {
        m = BinaryMask(2, 3);
    }
    masks[0].at(0, 0) = 1;

    const auto h = apply_augmentation(AugmentationKind::hflip(), img, masks);
    CHECK(h.first.at(0, 0, 0, 0) == 3.0f);
    CHECK(h.first.at(0, 0, 0, 2) == 1.0f);
    CHECK(h.first.at(0, 0, 1, 1) == 5.0f);
    CHECK(h.second[0].at(0, 2) == 1);

    const auto v = apply_augmentation(AugmentationKind::vflip(), img, masks);
    CHECK(v.first.at(0, 0, 0, 0) == 4.0f);
    CHECK(v.first.at(0, 0, 1, 0) == 1.0f);
    CHECK(v.second[0].at(1, 0) == 1);
}

TEST_CASE("rotate by zero is the identity") {
    Rng rng(62);
    const Tensor img = oracles::random_tensor(rng, {1, 3, 8, 11}, 0.0, 1.0);
    const ClassMaskSet masks = random_masks(rng, 8, 11);
    const auto out = apply_augmentation(AugmentationKind::rotate(0.0), img, masks);
    CHECK(oracles::max_abs_diff(out.first, img) == 0.0);
    for (int c = 0; c < kClassCount; ++c) {
        CHECK(out.second[static_cast<std::size_t>(c)] == masks[static_cast<std::size_t>(c)]);
    }
}

TEST_CASE("rotation angle is capped at 20 degrees") {
    CHECK_NOTHROW(AugmentationKind::rotate(20.0));
    CHECK_NOTHROW(AugmentationKind::rotate(-20.0));
    CHECK_THROWS_AS(AugmentationKind::rotate(20.0001), std::invalid_argument);
    CHECK_THROWS_AS(AugmentationKind::rotate(-33.0), std::invalid_argument);
}

TEST_CASE("small rotations keep interior content and dims") {
    // bright centered square on a dark field; at 15 degrees the square stays
    // inside the frame, so total mass moves only a little
    Tensor img({1, 1, 32, 32});
    for (std::int64_t y = 10; y < 22; ++y) {
        for (std::int64_t x = 10; x < 22; ++x) {
            img.at(0, 0, y, x) = 1.0f;
        }
    }
    ClassMaskSet masks;
    for (auto& m : masks) {
        m = BinaryMask(32, 32);
    }
    for (std::int64_t y = 10; y < 22; ++y) {
        for (std::int64_t x = 10; x < 22; ++x) {
            masks[1].at(y, x) = 1;
        }
    }

    const auto out = apply_augmentation(AugmentationKind::rotate(15.0), img, masks);
    CHECK(out.first.shape() == img.shape());
    const double before = tensor_sum(img);
    const double after = tensor_sum(out.first);
    CHECK(after == doctest::Approx(before).epsilon(0.10));
    const double mask_before = static_cast<double>(masks[1].area());
    const double mask_after = static_cast<double>(out.second[1].area());
    CHECK(mask_after == doctest::Approx(mask_before).epsilon(0.10));
    // and the content actually moved
    CHECK(oracles::max_abs_diff(out.first, img) > 0.1);
}

TEST_CASE("grid distortion identity cases") {
    Rng rng(63);
    const Tensor img = oracles::random_tensor(rng, {1, 3, 12, 10}, 0.0, 1.0);
    const ClassMaskSet masks = random_masks(rng, 12, 10);

    SUBCASE("empty scales") {
        const auto out = apply_augmentation(AugmentationKind::grid_distort({4, {}, {}}), img, masks);
        CHECK(oracles::max_abs_diff(out.first, img) == 0.0);
        for (int c = 0; c < kClassCount; ++c) {
            CHECK(out.second[static_cast<std::size_t>(c)] == masks[static_cast<std::size_t>(c)]);
        }
    }
    SUBCASE("uniform non-unit scales") {
        const std::vector<double> twos(4, 2.0);
        const DistortField f = grid_distort_field({4, twos, twos}, 12, 10);
        for (std::int64_t y = 0; y < 12; ++y) {
            CHECK(f.src_y[static_cast<std::size_t>(y)] == static_cast<double>(y));
        }
        for (std::int64_t x = 0; x < 10; ++x) {
            CHECK(f.src_x[static_cast<std::size_t>(x)] == static_cast<double>(x));
        }
    }
}

TEST_CASE("grid distortion hand-computed knots") {
    // cells = 2, width 100, y uniform; x scales (2, 1): raw knots 0, 2, 3,
    // normalized by 99/3 = 33 -> src_x knots 0, 66, 99
    const DistortField f = grid_distort_field({2, {}, {2.0, 1.0}}, 10, 100);
    CHECK(f.src_x[0] == 0.0);
    CHECK(f.src_x[99] == doctest::Approx(99.0).epsilon(1e-12)); // endpoints pinned
    // midpoint of the first segment: t = 49.5/99 of the axis -> within the
    // first cell (t < .5), src = lerp(0, 66) at local 2t
    CHECK(f.src_x[33] == doctest::Approx(66.0 * (33.0 / 49.5)).epsilon(1e-9));
    // the first half is stretched (samples advance 2x), the second compressed
    CHECK(f.src_x[49] > 49.0);
    CHECK(f.src_x[75] > 75.0);

    // monotone non-decreasing everywhere
    for (std::size_t i = 1; i < f.src_x.size(); ++i) {
        CHECK(f.src_x[i] >= f.src_x[i - 1]);
    }
    for (std::size_t i = 1; i < f.src_y.size(); ++i) {
        CHECK(f.src_y[i] >= f.src_y[i - 1]);
    }
}

TEST_CASE("grid distortion validation") {
    CHECK_THROWS_AS(grid_distort_field({1, {}, {}}, 8, 8), std::invalid_argument);       // cells < 2
    CHECK_THROWS_AS(grid_distort_field({3, {1.0}, {}}, 8, 8), std::invalid_argument);    // wrong length
    CHECK_THROWS_AS(grid_distort_field({3, {1.0, -1.0, 1.0}, {}}, 8, 8), std::invalid_argument);
    CHECK_THROWS_AS(grid_distort_field({5, {}, {}}, 4, 8), std::invalid_argument);       // h < cells
}

TEST_CASE("masks commute with the transform as a union") {
    // transforming the union equals the union of transformed masks: nearest
    // sampling acts pointwise on each mask with the same source grid
    Rng rng(64);
    const Tensor img = oracles::random_tensor(rng, {1, 1, 16, 16}, 0.0, 1.0);
    ClassMaskSet masks = random_masks(rng, 16, 16);
    BinaryMask unioned(16, 16);
    for (std::int64_t i = 0; i < 16 * 16; ++i) {
        std::uint8_t v = 0;
        for (const auto& m : masks) {
            v = v || m.pixels[static_cast<std::size_t>(i)];
        }
        unioned.pixels[static_cast<std::size_t>(i)] = v;
    }
    ClassMaskSet with_union = masks;
    with_union[0] = unioned;

    const auto kind = AugmentationKind::grid_distort({4, {0.8, 1.2, 1.1, 0.9}, {1.3, 0.7, 1.0, 1.0}});
    const auto a = apply_augmentation(kind, img, masks);
    const auto b = apply_augmentation(kind, img, with_union);
    BinaryMask union_after(16, 16);
    for (std::int64_t i = 0; i < 16 * 16; ++i) {
        std::uint8_t v = 0;
        for (const auto& m : a.second) {
            v = v || m.pixels[static_cast<std::size_t>(i)];
        }
        union_after.pixels[static_cast<std::size_t>(i)] = v;
    }
    CHECK(b.second[0] == union_after);
}

TEST_CASE("augment_dataset doubles the set deterministically") {
    Rng rng(65);
    std::vector<TrainingRecord> records;
    for (int i = 0; i < 6; ++i) {
        TrainingRecord rec;
        rec.name = "img" + std::to_string(i) + ".ppm";
        rec.image = Image(12, 12, 3);
        for (auto& p : rec.image.pixels) {
            p = static_cast<std::uint8_t>(rng.index(256));
        }
        // deliberately asymmetric content so flips can't be identities
        rec.image.at(0, 0, 0) = 255;
        rec.image.at(11, 11, 0) = 0;
        for (auto& m : rec.masks) {
            m = oracles::random_mask(rng, 12, 12, 0.25);
        }
        records.push_back(std::move(rec));
    }

    const auto out = augment_dataset(records, 77);
    REQUIRE(out.size() == 12);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(out[i].name == records[i].name); // originals first, untouched
        CHECK(out[i].image.pixels == records[i].image.pixels);
        CHECK(out[i + 6].name == "img" + std::to_string(i) + "_aug.ppm");
        CHECK(out[i + 6].image.height == 12);
        CHECK(out[i + 6].image.width == 12);
    }

    const auto rerun = augment_dataset(records, 77);
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out[i].image.pixels == rerun[i].image.pixels);
        for (int c = 0; c < kClassCount; ++c) {
            CHECK(out[i].masks[static_cast<std::size_t>(c)] ==
                  rerun[i].masks[static_cast<std::size_t>(c)]);
        }
    }

    const auto reseeded = augment_dataset(records, 78);
    bool any_difference = false;
    for (std::size_t i = 6; i < out.size(); ++i) {
        any_difference = any_difference || out[i].image.pixels != reseeded[i].image.pixels;
    }
    CHECK(any_difference);
}

TEST_CASE("per-record draws cover all four kinds uniformly") {
    // the dataset augmenter derives one generator per record from the seed;
    // the first draw selects among 4 kinds. Check the selector's distribution
    // directly over many records: binomial(10000, 1/4), 4 sigma ~ 173.
    std::array<int, 4> counts{};
    for (std::uint64_t i = 0; i < 10000; ++i) {
        Rng rng(Rng::mix(1234, i));
        counts[rng.index(4)] += 1;
    }
    for (const int c : counts) {
        CHECK(c > 2500 - 174);
        CHECK(c < 2500 + 174);
    }
}

TEST_CASE("augmented copies differ from asymmetric originals") {
    // an image with a single bright corner cannot map to itself under any of
    // the four kinds unless the transform is the identity; rotations and grid
    // distortions draw continuous parameters, making exact identity
    // vanishingly unlikely, and flips move the corner by construction.
    Rng rng(66);
    std::vector<TrainingRecord> records;
    TrainingRecord rec;
    rec.name = "corner.ppm";
    rec.image = Image(16, 16, 1);
    std::fill(rec.image.pixels.begin(), rec.image.pixels.end(), 10);
    rec.image.at(0, 0, 0) = 250;
    for (auto& m : rec.masks) {
        m = BinaryMask(16, 16);
    }
    rec.masks[0].at(0, 0) = 1;
    records.push_back(rec);

    int changed = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto out = augment_dataset(records, seed);
        if (out[1].image.pixels != records[0].image.pixels) {
            ++changed;
        }
    }
    CHECK(changed >= 19); // identity transforms should be essentially absent
}
