#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "mudseg/error.hpp"
#include "mudseg/image_io.hpp"
#include "mudseg/resample.hpp"
#include "oracles.hpp"
#include "tempdir.hpp"

using namespace mudseg;
using namespace mudseg::testing;

TEST_CASE("raster constructors reject bad shapes") {
    CHECK_THROWS_AS(Raster<std::uint8_t>(0, 3), InvalidArgument);
    CHECK_THROWS_AS(Raster<std::uint8_t>(2, 2, std::vector<std::uint8_t>(3)), InvalidArgument);
    CHECK_THROWS_AS(GrayImage(2, 2, std::vector<std::uint8_t>(4), -1.0), InvalidArgument);
    CHECK_THROWS_AS(GrayImage(2, 2, std::vector<std::uint8_t>(4), std::nan("")), InvalidArgument);
}

TEST_CASE("class mask rejects codes outside 0..2 with value and index") {
    try {
        ClassMask(2, 2, std::vector<std::uint8_t>{0, 1, 3, 2});
        FAIL("expected throw");
    } catch (const InvalidArgument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("invalid class code 3") != std::string::npos);
        CHECK(msg.find("2") != std::string::npos);
    }
}

TEST_CASE("sidecar pitch is hfw over width") {
    TempDir dir("raster");
    Raster<std::uint8_t> img(2048, 2);
    save_gray(img, dir / "frame.png");
    write_text(dir / "frame.meta.json", R"({"source_id":"f","magnification":15000,"hfw_um":20})");
    ImageMeta meta;
    auto loaded = load_gray(dir / "frame.png", &meta);
    REQUIRE(loaded.pitch_um());
    CHECK(*loaded.pitch_um() == doctest::Approx(0.009765625).epsilon(1e-15));
    CHECK(meta.magnification == 15000);
    CHECK(meta.source_id == "f");
}

TEST_CASE("1x1 P5 file loads without pitch") {
    TempDir dir("raster");
    std::ofstream(dir / "one.pgm", std::ios::binary) << "P5\n1 1\n255\n" << '\0';
    auto img = load_gray(dir / "one.pgm");
    CHECK(img.width() == 1);
    CHECK(img.height() == 1);
    CHECK(img(0, 0) == 0);
    CHECK_FALSE(img.pitch_um());
}

TEST_CASE("gray round trip is byte exact for png and pgm") {
    TempDir dir("raster");
    Xoshiro256 rng(3);
    auto img = random_image(37, 23, rng);
    for (const char* name : {"a.png", "a.pgm"}) {
        save_gray(img, dir / name);
        auto back = load_gray(dir / name);
        CHECK(mismatches<std::uint8_t>(img, back) == 0);
        save_gray(back, dir / (std::string("b") + name));
        CHECK(read_file(dir / name) == read_file(dir / (std::string("b") + name)));
    }
}

TEST_CASE("mask round trip and load-time validation") {
    TempDir dir("raster");
    Xoshiro256 rng(5);
    auto mask = random_classes(16, 16, rng);
    save_mask(mask, dir / "m.png");
    CHECK(load_mask(dir / "m.png") == mask);

    ClassMask zeros(4, 4);
    save_mask(zeros, dir / "z.png");
    CHECK(load_mask(dir / "z.png") == zeros);

    Raster<std::uint8_t> bad(3, 1);
    bad(2, 0) = 3;
    save_gray(bad, dir / "bad.png");
    CHECK_THROWS_WITH_AS(load_mask(dir / "bad.png"), doctest::Contains("invalid class code 3"), InvalidArgument);
}

TEST_CASE("decoder errors are distinct") {
    TempDir dir("raster");
    CHECK_THROWS_AS(load_gray(dir / "missing.png"), IoError);
    write_text(dir / "junk.png", "not an image");
    CHECK_THROWS_AS(load_gray(dir / "junk.png"), FormatError);
    std::ofstream(dir / "deep.pgm", std::ios::binary) << "P5\n1 1\n65535\n" << '\0' << '\0';
    CHECK_THROWS_AS(load_gray(dir / "deep.pgm"), FormatError);
    RgbaImage rgba{1, 1, {1, 2, 3, 255}};
    save_rgba(rgba, dir / "color.png");
    CHECK_THROWS_AS(load_gray(dir / "color.png"), FormatError);

    Raster<std::uint8_t> img(1, 1);
    save_gray(img, dir / "x.png");
    write_text(dir / "x.meta.json", R"({"source_id":"x","magnification":15000})");
    CHECK_THROWS_WITH_AS(load_gray(dir / "x.png"), doctest::Contains("hfw_um"), MetadataError);
    write_text(dir / "x.meta.json", "{");
    CHECK_THROWS_AS(load_gray(dir / "x.png"), MetadataError);
}

TEST_CASE("label map export is 16-bit big-endian PGM") {
    Raster<std::uint32_t> ids(2, 1);
    ids(0, 0) = 1;
    ids(1, 0) = 258;
    const auto bytes = encode_pgm16(ids);
    const std::string header = "P5\n2 1\n65535\n";
    REQUIRE(bytes.size() == header.size() + 4);
    CHECK(std::string(bytes.begin(), bytes.begin() + static_cast<long>(header.size())) == header);
    CHECK(bytes[header.size() + 1] == 1);
    CHECK(bytes[header.size() + 2] == 1);
    CHECK(bytes[header.size() + 3] == 2);
    ids(0, 0) = 70000;
    CHECK_THROWS_AS(encode_pgm16(ids), InvalidArgument);
}

TEST_CASE("rescale at the source pitch is the identity") {
    Xoshiro256 rng(7);
    auto raw = random_image(19, 11, rng);
    GrayImage img(19, 11, raw.vector(), 0.01);
    for (auto mode : {Interpolation::Bilinear, Interpolation::Nearest}) {
        auto out = rescale(img, 0.01, mode);
        CHECK(mismatches<std::uint8_t>(out, img) == 0);
        CHECK(*out.pitch_um() == 0.01);
    }
}

TEST_CASE("bilinear upscale of [0,100] follows centre-aligned sampling") {
    // Output i samples x = (i + 0.5) * 0.5 - 0.5 -> -0.25, 0.25, 0.75, 1.25; clamped to [0,1].
    GrayImage img(2, 1, std::vector<std::uint8_t>{0, 100}, 1.0);
    auto out = rescale(img, 0.5);
    REQUIRE(out.width() == 4);
    REQUIRE(out.height() == 2);
    CHECK(out(0, 0) == 0);
    CHECK(out(1, 0) == 25);
    CHECK(out(2, 0) == 75);
    CHECK(out(3, 0) == 100);
}

TEST_CASE("40000x frame rescaled to 15000x pitch shrinks by 0.375") {
    const int W = 2048;
    GrayImage img(W, 8, std::vector<std::uint8_t>(W * 8, 9), 7.5 / W);
    auto out = rescale(img, 20.0 / W);
    CHECK(out.width() == static_cast<int>(std::lround(W * 0.375)));
    CHECK(out.width() == 768);
    CHECK(out.height() == 3);
}

TEST_CASE("rescale requires pitch") {
    GrayImage img(4, 4);
    CHECK_THROWS_AS(rescale(img, 1.0), MetadataError);
}

TEST_CASE("nearest rescale never invents values and halving round-trips dimensions") {
    Xoshiro256 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const int w = 1 + static_cast<int>(rng.below(40));
        const int h = 1 + static_cast<int>(rng.below(40));
        auto raw = random_image(w, h, rng, 6);
        const double p = 0.01 + rng.uniform() * 0.05;
        GrayImage img(w, h, raw.vector(), p);
        const double target = p * (0.3 + rng.uniform() * 3.0);
        auto near = rescale(img, target, Interpolation::Nearest);
        std::set<int> src(raw.samples().begin(), raw.samples().end());
        for (auto v : near.samples()) CHECK(src.count(v) == 1);

        auto half = rescale(img, p / 2);
        auto back = rescale(half, p);
        CHECK(std::abs(back.width() - w) <= 1);
        CHECK(std::abs(back.height() - h) <= 1);

        auto mask = random_classes(w, h, rng);
        auto m2 = rescale(mask, p, target);
        CHECK(m2.width() == near.width());
        for (auto v : m2.samples()) CHECK(v <= 2);
    }
}
