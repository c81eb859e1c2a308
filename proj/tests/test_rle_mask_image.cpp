#include "cloudseg/errors.hpp"
#include "cloudseg/image.hpp"
#include "cloudseg/mask.hpp"
#include "cloudseg/rle.hpp"
#include "cloudseg/rng.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

using namespace cloudseg;

TEST_CASE("rle decode walks pixels column-major from 1") {
    // linear position j covers pixel (j % h, j / h), 1-indexed start
    const BinaryMask m = rle_decode(Rle{{{1, 3}}}, 4, 4);
    CHECK(m.at(0, 0) == 1);
    CHECK(m.at(1, 0) == 1);
    CHECK(m.at(2, 0) == 1);
    CHECK(m.at(3, 0) == 0);
    CHECK(m.at(0, 1) == 0);
    CHECK(m.area() == 3);

    const BinaryMask wrap = rle_decode(Rle{{{4, 2}}}, 4, 4);
    CHECK(wrap.at(3, 0) == 1); // run crosses into the next column
    CHECK(wrap.at(0, 1) == 1);
    CHECK(wrap.area() == 2);
}

TEST_CASE("rle encode emits maximal runs in order") {
    BinaryMask m(3, 3);
    m.at(0, 0) = 1;
    m.at(1, 0) = 1;
    m.at(0, 1) = 1; // linear 4
    m.at(2, 2) = 1; // linear 9
    const Rle r = rle_encode(m);
    REQUIRE(r.runs.size() == 3);
    CHECK(r.runs[0] == std::pair<std::int64_t, std::int64_t>{1, 2});
    CHECK(r.runs[1] == std::pair<std::int64_t, std::int64_t>{4, 1});
    CHECK(r.runs[2] == std::pair<std::int64_t, std::int64_t>{9, 1});
}

TEST_CASE("rle round trips 1000 random masks quickly") {
    Rng rng(1001);
    for (int iter = 0; iter < 1000; ++iter) {
        const std::int64_t h = 1 + static_cast<std::int64_t>(rng.index(64));
        const std::int64_t w = 1 + static_cast<std::int64_t>(rng.index(64));
        const double density = rng.next_double();
        const BinaryMask mask = oracles::random_mask(rng, h, w, density);
        const Rle r = rle_encode(mask);
        CHECK(rle_decode(r, h, w) == mask);
        CHECK(parse_rle(rle_text(r)) == r);
    }
}

TEST_CASE("rle adversarial fixtures") {
    SUBCASE("empty and full") {
        const BinaryMask empty(5, 7);
        CHECK(rle_encode(empty).empty());
        CHECK(rle_decode(Rle{}, 5, 7) == empty);
        CHECK(rle_text(Rle{}).empty());
        CHECK(parse_rle("").empty());
        CHECK(parse_rle("  \t ").empty());

        BinaryMask full(5, 7);
        std::fill(full.pixels.begin(), full.pixels.end(), 1);
        const Rle r = rle_encode(full);
        REQUIRE(r.runs.size() == 1);
        CHECK(r.runs[0] == std::pair<std::int64_t, std::int64_t>{1, 35});
    }
    SUBCASE("single-pixel masks and 1-wide strips") {
        BinaryMask dot(1, 1);
        dot.at(0, 0) = 1;
        CHECK(rle_decode(rle_encode(dot), 1, 1) == dot);
        Rng rng(5);
        const BinaryMask row = oracles::random_mask(rng, 1, 40, 0.5);
        CHECK(rle_decode(rle_encode(row), 1, 40) == row);
        const BinaryMask col = oracles::random_mask(rng, 40, 1, 0.5);
        CHECK(rle_decode(rle_encode(col), 40, 1) == col);
    }
    SUBCASE("adjacent runs merge under re-encoding") {
        const Rle split{{{1, 2}, {3, 2}}};
        const BinaryMask m = rle_decode(split, 4, 4);
        const Rle merged = rle_encode(m);
        REQUIRE(merged.runs.size() == 1);
        CHECK(merged.runs[0] == std::pair<std::int64_t, std::int64_t>{1, 4});
    }
    SUBCASE("last pixel exactly") {
        CHECK_NOTHROW(rle_decode(Rle{{{16, 1}}}, 4, 4));
        CHECK_THROWS_AS(rle_decode(Rle{{{16, 2}}}, 4, 4), std::invalid_argument);
    }
}

TEST_CASE("rle decode rejects malformed runs") {
    CHECK_THROWS_AS(rle_decode(Rle{{{0, 3}}}, 4, 4), std::invalid_argument);  // start < 1
    CHECK_THROWS_AS(rle_decode(Rle{{{1, 0}}}, 4, 4), std::invalid_argument);  // length < 1
    CHECK_THROWS_AS(rle_decode(Rle{{{1, 99}}}, 4, 4), std::invalid_argument); // past the end
    CHECK_THROWS_AS(rle_decode(Rle{{{1, 5}, {3, 2}}}, 4, 4), std::invalid_argument); // overlap
    CHECK_THROWS_AS(rle_decode(Rle{{{9, 2}, {1, 3}}}, 4, 4), std::invalid_argument); // reorder
    CHECK_THROWS_AS(rle_decode(Rle{}, 0, 4), std::invalid_argument);          // bad dims

    // error message names the offending run
    try {
        rle_decode(Rle{{{1, 5}, {3, 2}}}, 4, 4);
        FAIL("expected a throw");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("run 1") != std::string::npos);
    }
}

TEST_CASE("parse_rle rejects malformed text") {
    CHECK_THROWS_AS(parse_rle("1 2 3"), std::invalid_argument);   // odd token count
    CHECK_THROWS_AS(parse_rle("1 two"), std::invalid_argument);   // not a number
    CHECK_THROWS_AS(parse_rle("1 2x"), std::invalid_argument);    // trailing junk in token
    CHECK_THROWS_AS(parse_rle("-1 2"), std::invalid_argument);    // negative
    CHECK_THROWS_AS(parse_rle("1 0"), std::invalid_argument);     // zero length
    try {
        parse_rle("1 2 zzz 4");
        FAIL("expected a throw");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("token 2") != std::string::npos);
    }
}

TEST_CASE("rle_text formatting") {
    CHECK(rle_text(Rle{{{1, 3}, {10, 5}}}) == "1 3 10 5");
    CHECK(parse_rle(" 1  3\t10 5 ") == Rle{{{1, 3}, {10, 5}}});
}

TEST_CASE("scale_mask samples pixel (4r+2, 4c+2)") {
    SUBCASE("dims must divide by 4") {
        CHECK_THROWS_AS(scale_mask(BinaryMask(5, 8)), std::invalid_argument);
        CHECK_THROWS_AS(scale_mask(BinaryMask(8, 5)), std::invalid_argument);
    }
    SUBCASE("exact sampling rule") {
        BinaryMask src(16, 8);
        // set only the sampled lattice; everything else stays 0
        for (std::int64_t r = 0; r < 4; ++r) {
            for (std::int64_t c = 0; c < 2; ++c) {
                src.at(4 * r + 2, 4 * c + 2) = 1;
            }
        }
        BinaryMask full(4, 2);
        std::fill(full.pixels.begin(), full.pixels.end(), 1);
        CHECK(scale_mask(src) == full);

        // invert: saturate everything EXCEPT the lattice -> scaled all zero
        BinaryMask inv(16, 8);
        for (std::int64_t r = 0; r < 16; ++r) {
            for (std::int64_t c = 0; c < 8; ++c) {
                inv.at(r, c) = (r % 4 == 2 && c % 4 == 2) ? 0 : 1;
            }
        }
        CHECK(scale_mask(inv).none_set());
    }
    SUBCASE("kaggle dims") {
        const BinaryMask native(1400, 2100);
        const BinaryMask scaled = scale_mask(native);
        CHECK(scaled.height == 350);
        CHECK(scaled.width == 525);
    }
}

TEST_CASE("mask_resize_nearest") {
    SUBCASE("identity") {
        Rng rng(21);
        const BinaryMask m = oracles::random_mask(rng, 9, 13, 0.4);
        CHECK(mask_resize_nearest(m, 9, 13) == m);
    }
    SUBCASE("floor((d + 0.5) * in / out) sampling") {
        BinaryMask m(2, 4);
        m.at(0, 0) = 1;
        m.at(1, 2) = 1;
        const BinaryMask up = mask_resize_nearest(m, 4, 4);
        // rows 0,1 sample src row 0; rows 2,3 sample src row 1
        CHECK(up.at(0, 0) == 1);
        CHECK(up.at(1, 0) == 1);
        CHECK(up.at(2, 0) == 0);
        CHECK(up.at(2, 2) == 1);
        CHECK(up.at(3, 2) == 1);
        const BinaryMask down = mask_resize_nearest(m, 1, 2);
        // row 0 samples src row floor(0.5*2/1)=1; cols sample 1 and 3
        CHECK(down.at(0, 0) == 0);
        CHECK(down.at(0, 1) == 0);
    }
    SUBCASE("validation") {
        CHECK_THROWS_AS(mask_resize_nearest(BinaryMask(2, 2), 0, 4), std::invalid_argument);
    }
}

TEST_CASE("netpbm image round trips") {
    const auto dir = std::filesystem::temp_directory_path() / "cloudseg_img_test";
    std::filesystem::create_directories(dir);

    SUBCASE("binary P6 rgb") {
        Image img(3, 2, 3);
        for (std::size_t i = 0; i < img.pixels.size(); ++i) {
            img.pixels[i] = static_cast<std::uint8_t>(7 * i + 3);
        }
        const auto path = dir / "rt.ppm";
        save_image(path, img);
        const Image back = load_image(path);
        CHECK(back.height == 3);
        CHECK(back.width == 2);
        CHECK(back.channels == 3);
        CHECK(back.pixels == img.pixels);
    }
    SUBCASE("binary P5 gray") {
        Image img(2, 5, 1);
        for (std::size_t i = 0; i < img.pixels.size(); ++i) {
            img.pixels[i] = static_cast<std::uint8_t>(11 * i);
        }
        const auto path = dir / "rt.pgm";
        save_image(path, img);
        CHECK(load_image(path).pixels == img.pixels);
    }
    SUBCASE("ascii P2 with comments") {
        const auto path = dir / "ascii.pgm";
        std::ofstream f(path);
        f << "P2\n# a comment\n3 2\n# another\n255\n0 10 20\n30 40 255\n";
        f.close();
        const Image img = load_image(path);
        CHECK(img.height == 2);
        CHECK(img.width == 3);
        CHECK(img.channels == 1);
        CHECK(img.at(0, 1, 0) == 10);
        CHECK(img.at(1, 2, 0) == 255);
    }
    SUBCASE("ascii P3 rgb") {
        const auto path = dir / "ascii.ppm";
        std::ofstream f(path);
        f << "P3\n2 1\n255\n1 2 3 4 5 6\n";
        f.close();
        const Image img = load_image(path);
        CHECK(img.channels == 3);
        CHECK(img.at(0, 0, 0) == 1);
        CHECK(img.at(0, 1, 2) == 6);
    }
    SUBCASE("errors mention the path") {
        CHECK_THROWS_AS(load_image(dir / "missing.pgm"), io_error);
        const auto bad = dir / "bad.pgm";
        std::ofstream f(bad);
        f << "P9\n2 2\n255\n";
        f.close();
        CHECK_THROWS_AS(load_image(bad), io_error);
        const auto trunc = dir / "trunc.pgm";
        std::ofstream t(trunc, std::ios::binary);
        t << "P5\n4 4\n255\nab";
        t.close();
        CHECK_THROWS_AS(load_image(trunc), io_error);
        const auto big = dir / "big.pgm";
        std::ofstream b(big);
        b << "P2\n1 1\n65535\n1000\n";
        b.close();
        CHECK_THROWS_AS(load_image(big), io_error);
    }
}

TEST_CASE("mask and tensor conversions") {
    SUBCASE("mask_to_image and back") {
        Rng rng(31);
        const BinaryMask m = oracles::random_mask(rng, 6, 7, 0.5);
        const Image img = mask_to_image(m);
        CHECK(img.channels == 1);
        CHECK(mask_from_image(img) == m);
        bool saw255 = false;
        for (const auto p : img.pixels) {
            CHECK((p == 0 || p == 255));
            saw255 = saw255 || p == 255;
        }
        CHECK(saw255 == (m.area() > 0));
    }
    SUBCASE("u8 -> tensor -> u8 is lossless") {
        Image img(16, 16, 1);
        for (int i = 0; i < 256; ++i) {
            img.pixels[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
        }
        const Tensor t = image_to_tensor(img);
        CHECK(t.shape() == TensorShape{1, 1, 16, 16});
        CHECK(t.at(0, 0, 0, 0) == 0.0f);
        CHECK(t.at(0, 0, 15, 15) == 1.0f);
        const Image back = tensor_to_image(t);
        CHECK(back.pixels == img.pixels);
    }
    SUBCASE("tensor_to_image clamps") {
        const Tensor t({1, 1, 1, 3}, {-0.5f, 0.5f, 1.75f});
        const Image img = tensor_to_image(t);
        CHECK(img.pixels[0] == 0);
        CHECK(img.pixels[1] == 128); // lround(0.5*255) = 128
        CHECK(img.pixels[2] == 255);
    }
}

TEST_CASE("class names") {
    CHECK(class_names()[0] == "Fish");
    CHECK(class_names()[1] == "Flower");
    CHECK(class_names()[2] == "Gravel");
    CHECK(class_names()[3] == "Sugar");
    CHECK(class_from_name("Sugar") == CloudClass::sugar);
    CHECK_THROWS_AS(class_from_name("Cumulus"), std::invalid_argument);
}
