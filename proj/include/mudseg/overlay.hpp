#pragma once

#include "mudseg/raster.hpp"

namespace mudseg {

inline constexpr double kDefaultOverlayAlpha = 0.5;

/// Composites class colors over the grayscale frame: silt blends toward red, pore toward
/// green, clay stays gray. channel = round((1 - alpha) * g + alpha * color); output alpha is 255.
RgbaImage overlay(const Raster<std::uint8_t>& img, const ClassMask& mask, double alpha = kDefaultOverlayAlpha);

}  // namespace mudseg
