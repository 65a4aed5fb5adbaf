#include <doctest.h>

#include <algorithm>

#include "mudseg/morphology.hpp"
#include "oracles.hpp"

using namespace mudseg;
using namespace mudseg::testing;

namespace {

bool leq(const Raster<std::uint8_t>& a, const Raster<std::uint8_t>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.samples()[i] > b.samples()[i]) return false;
    }
    return true;
}

Raster<std::uint8_t> invert(const Raster<std::uint8_t>& a) {
    Raster<std::uint8_t> out(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i) out.samples()[i] = static_cast<std::uint8_t>(255 - a.samples()[i]);
    return out;
}

}  // namespace

TEST_CASE("disk offsets") {
    CHECK(disk(0).offsets() == std::vector<Offset>{{0, 0}});
    CHECK(disk(1).offsets().size() == 5);
    CHECK(disk(2).offsets().size() == 13);
    for (int r = 0; r <= 6; ++r) {
        const auto se = disk(r);
        const auto& off = se.offsets();
        for (const auto& o : off) {
            CHECK(o.dx * o.dx + o.dy * o.dy <= r * r);
            CHECK(std::find(off.begin(), off.end(), Offset{-o.dx, -o.dy}) != off.end());
        }
    }
}

TEST_CASE("radius 0 and constant images") {
    Xoshiro256 rng(1);
    auto img = random_image(9, 7, rng);
    for (auto* f : {&median_filter, &erode, &dilate, &open, &close}) CHECK(mismatches(f(img, disk(0)), img) == 0);

    Raster<std::uint8_t> seven(10, 10, 7);
    for (int r = 0; r <= 4; ++r) {
        CHECK(mismatches(median_filter(seven, disk(r)), seven) == 0);
        CHECK(mismatches(enhance_contrast(seven, disk(r)), seven) == 0);
        for (const auto out = top_hat(seven, disk(r)); double v : out.samples()) CHECK(v == 0.0);
        for (const auto out = bottom_hat(seven, disk(r)); double v : out.samples()) CHECK(v == 0.0);
    }
}

TEST_CASE("single pixel dilates to a 5-pixel cross") {
    BinaryMask m(5, 5);
    m(2, 2) = 1;
    auto d = dilate(m, disk(1));
    int set = 0;
    for (auto v : d.samples()) set += v;
    CHECK(set == 5);
    CHECK(d(1, 2) == 1);
    CHECK(d(3, 2) == 1);
    CHECK(d(2, 1) == 1);
    CHECK(d(2, 3) == 1);
    CHECK(d(1, 1) == 0);
}

TEST_CASE("binary erosion keeps pixels whose whole neighborhood is set") {
    BinaryMask m(7, 7);
    for (int y = 1; y <= 5; ++y) {
        for (int x = 1; x <= 5; ++x) m(x, y) = 1;
    }
    auto e = erode(m, disk(1));
    CHECK(mismatches(e, oracle_erode(m, 1)) == 0);
    CHECK(e(3, 3) == 1);
    CHECK(e(1, 3) == 0);
    CHECK(e(2, 2) == 1);
}

TEST_CASE("spike of +100 is isolated by the top hat") {
    Raster<std::uint8_t> img(5, 5, 50);
    img(2, 2) = 150;
    auto th = top_hat(img, disk(1));
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 5; ++x) CHECK(th(x, y) == (x == 2 && y == 2 ? 100.0 : 0.0));
    }
}

TEST_CASE("filters match brute-force window oracles") {
    Xoshiro256 rng(2024);
    for (int i = 0; i < 30; ++i) {
        const int w = 1 + static_cast<int>(rng.below(20));
        const int h = 1 + static_cast<int>(rng.below(20));
        auto img = random_image(w, h, rng, i % 2 ? 256 : 4);
        for (int r : {1, 2, 3, 5}) {
            CHECK(mismatches(median_filter(img, disk(r)), oracle_median(img, r)) == 0);
            CHECK(mismatches(erode(img, disk(r)), oracle_erode(img, r)) == 0);
            CHECK(mismatches(dilate(img, disk(r)), oracle_dilate(img, r)) == 0);
            CHECK(mismatches(open(img, disk(r)), oracle_open(img, r)) == 0);
            CHECK(mismatches(close(img, disk(r)), oracle_close(img, r)) == 0);
            CHECK(mismatches(enhance_contrast(img, disk(r)), oracle_enhance(img, r)) == 0);
            const auto th = top_hat(img, disk(r));
            const auto bh = bottom_hat(img, disk(r));
            const auto oth = oracle_top_hat(img, r);
            const auto obh = oracle_bottom_hat(img, r);
            for (std::size_t k = 0; k < img.size(); ++k) {
                CHECK(th.samples()[k] == oth[k]);
                CHECK(bh.samples()[k] == obh[k]);
            }
        }
    }
}

TEST_CASE("morphology algebra on random inputs") {
    Xoshiro256 rng(99);
    for (int i = 0; i < 40; ++i) {
        auto x = random_image(24, 24, rng);
        auto bump = random_image(24, 24, rng, 30);
        Raster<std::uint8_t> y(24, 24);
        for (std::size_t k = 0; k < x.size(); ++k) {
            y.samples()[k] = static_cast<std::uint8_t>(std::min(255, x.samples()[k] + bump.samples()[k]));
        }
        const auto se = disk(1 + i % 3);
        const auto o = open(x, se);
        const auto c = close(x, se);
        CHECK(mismatches(open(o, se), o) == 0);
        CHECK(mismatches(close(c, se), c) == 0);
        CHECK(mismatches(erode(x, se), invert(dilate(invert(x), se))) == 0);
        CHECK(leq(erode(x, se), x));
        CHECK(leq(x, dilate(x, se)));
        CHECK(leq(o, x));
        CHECK(leq(x, c));
        for (auto* f : {&median_filter, &erode, &dilate, &open, &close}) CHECK(leq(f(x, se), f(y, se)));
    }
}

TEST_CASE("reconstruction keeps whole components touching the marker") {
    Xoshiro256 rng(17);
    for (int i = 0; i < 40; ++i) {
        auto mask = random_binary(20, 20, rng, 0.55);
        auto marker = random_binary(20, 20, rng, 0.05);
        CHECK(mismatches(reconstruct(marker, mask), oracle_reconstruct(marker, mask)) == 0);
    }
}

TEST_CASE("repeat applies the operation n times") {
    Xoshiro256 rng(4);
    auto img = random_image(16, 16, rng);
    auto twice = erode(erode(img, disk(1)), disk(1));
    CHECK(mismatches(repeat(img, 2, disk(1), [](const auto& a, const auto& se) { return erode(a, se); }), twice) == 0);
    CHECK(mismatches(repeat(img, 0, disk(1), [](const auto& a, const auto& se) { return erode(a, se); }), img) == 0);
}
