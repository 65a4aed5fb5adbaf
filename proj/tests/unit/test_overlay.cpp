#include <doctest.h>

#include "mudseg/error.hpp"
#include "mudseg/overlay.hpp"
#include "oracles.hpp"

using namespace mudseg;
using namespace mudseg::testing;

namespace {

std::array<int, 4> px(const RgbaImage& img, int x, int y) {
    const auto* p = &img.samples[(static_cast<std::size_t>(y) * img.width + x) * 4];
    return {p[0], p[1], p[2], p[3]};
}

}  // namespace

TEST_CASE("alpha extremes and the pore blend") {
    Raster<std::uint8_t> img(3, 1, std::vector<std::uint8_t>{100, 100, 100});
    ClassMask mask(3, 1, std::vector<std::uint8_t>{0, 1, 2});
    const auto zero = overlay(img, mask, 0.0);
    for (int x = 0; x < 3; ++x) CHECK(px(zero, x, 0) == std::array<int, 4>{100, 100, 100, 255});
    const auto one = overlay(img, mask, 1.0);
    CHECK(px(one, 1, 0) == std::array<int, 4>{255, 0, 0, 255});
    CHECK(px(one, 2, 0) == std::array<int, 4>{0, 255, 0, 255});
    CHECK(px(one, 0, 0) == std::array<int, 4>{100, 100, 100, 255});
    const auto half = overlay(img, mask, 0.5);
    CHECK(px(half, 2, 0) == std::array<int, 4>{50, 178, 50, 255});
    CHECK(px(half, 1, 0) == std::array<int, 4>{178, 50, 50, 255});
}

TEST_CASE("overlay only alters non-clay pixels and matches the blend formula") {
    Xoshiro256 rng(6);
    const auto img = random_image(17, 13, rng);
    const auto mask = random_classes(17, 13, rng);
    const double alpha = 0.37;
    const auto out = overlay(img, mask, alpha);
    REQUIRE(out.samples.size() == 4u * 17 * 13);
    for (int y = 0; y < 13; ++y) {
        for (int x = 0; x < 17; ++x) {
            const int g = img(x, y);
            const auto c = mask.at(x, y);
            std::array<int, 3> color{g, g, g};
            if (c == ClassCode::Silt) color = {255, 0, 0};
            if (c == ClassCode::Pore) color = {0, 255, 0};
            const auto got = px(out, x, y);
            for (int k = 0; k < 3; ++k) {
                const int want = c == ClassCode::Clay ? g : static_cast<int>(std::lround((1 - alpha) * g + alpha * color[static_cast<std::size_t>(k)]));
                CHECK(got[static_cast<std::size_t>(k)] == want);
            }
            CHECK(got[3] == 255);
        }
    }
    CHECK(overlay(img, mask, alpha).samples == out.samples);
}

TEST_CASE("overlay argument checks") {
    CHECK_THROWS_AS(overlay(Raster<std::uint8_t>(2, 2), ClassMask(2, 3)), InvalidArgument);
    CHECK_THROWS_AS(overlay(Raster<std::uint8_t>(2, 2), ClassMask(2, 2), 1.5), InvalidArgument);
    CHECK_THROWS_AS(overlay(Raster<std::uint8_t>(2, 2), ClassMask(2, 2), -0.1), InvalidArgument);
}
