#pragma once

#include <cstdint>
#include <vector>

#include "mudseg/labeling.hpp"
#include "mudseg/raster.hpp"
#include "mudseg/rng.hpp"

// Deliberately naive reference implementations. They share nothing with the library
// beyond the Raster container.
namespace mudseg::testing {

Raster<std::uint8_t> random_image(int w, int h, Xoshiro256& rng, int levels = 256);
BinaryMask random_binary(int w, int h, Xoshiro256& rng, double p = 0.5);
ClassMask random_classes(int w, int h, Xoshiro256& rng);

/// Window values under a disk of `radius`, clamp-to-edge, in offset enumeration order.
std::vector<int> window(const Raster<std::uint8_t>& img, int x, int y, int radius);

Raster<std::uint8_t> oracle_median(const Raster<std::uint8_t>& img, int radius);
Raster<std::uint8_t> oracle_erode(const Raster<std::uint8_t>& img, int radius);
Raster<std::uint8_t> oracle_dilate(const Raster<std::uint8_t>& img, int radius);
Raster<std::uint8_t> oracle_open(const Raster<std::uint8_t>& img, int radius);
Raster<std::uint8_t> oracle_close(const Raster<std::uint8_t>& img, int radius);
std::vector<int> oracle_top_hat(const Raster<std::uint8_t>& img, int radius);
std::vector<int> oracle_bottom_hat(const Raster<std::uint8_t>& img, int radius);
Raster<std::uint8_t> oracle_enhance(const Raster<std::uint8_t>& img, int radius);

/// Component count by explicit-stack flood fill.
std::uint32_t flood_fill_count(const BinaryMask& mask, int connectivity);

/// Geodesic reconstruction by iterating 3x3 dilation intersected with the mask.
BinaryMask oracle_reconstruct(const BinaryMask& marker, const BinaryMask& mask);

/// Mismatching sample count.
template <typename T>
std::size_t mismatches(const Raster<T>& a, const Raster<T>& b) {
    if (a.width() != b.width() || a.height() != b.height()) return static_cast<std::size_t>(-1);
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) n += a.samples()[i] != b.samples()[i];
    return n;
}

}  // namespace mudseg::testing
