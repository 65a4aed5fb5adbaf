#include "mudseg/overlay.hpp"

#include <array>
#include <cmath>

namespace mudseg {

RgbaImage overlay(const Raster<std::uint8_t>& img, const ClassMask& mask, double alpha) {
    if (!img.same_shape(mask)) throw InvalidArgument("overlay: image and mask dimensions differ");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("overlay: alpha must be in [0,1]");
    ClassMask::check_codes(mask.samples());

    // Per-class lookup of blended values for every gray level.
    constexpr std::array<std::array<int, 3>, kNumClasses> kColor{{{0, 0, 0}, {255, 0, 0}, {0, 255, 0}}};
    std::array<std::array<std::array<std::uint8_t, 3>, 256>, kNumClasses> lut{};
    for (int g = 0; g < 256; ++g) {
        lut[0][static_cast<std::size_t>(g)] = {static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(g),
                                               static_cast<std::uint8_t>(g)};
        for (std::size_t c = 1; c < kNumClasses; ++c) {
            for (std::size_t ch = 0; ch < 3; ++ch) {
                const double v = (1.0 - alpha) * g + alpha * kColor[c][ch];
                lut[c][static_cast<std::size_t>(g)][ch] = static_cast<std::uint8_t>(std::lround(v));
            }
        }
    }

    RgbaImage out{img.width(), img.height(), std::vector<std::uint8_t>(img.size() * 4)};
    for (std::size_t i = 0; i < img.size(); ++i) {
        const auto& rgb = lut[mask.samples()[i]][img.samples()[i]];
        out.samples[4 * i + 0] = rgb[0];
        out.samples[4 * i + 1] = rgb[1];
        out.samples[4 * i + 2] = rgb[2];
        out.samples[4 * i + 3] = 255;
    }
    return out;
}

}  // namespace mudseg
