#pragma once

#include "mudseg/raster.hpp"

namespace mudseg {

enum class Interpolation { Bilinear, Nearest };

/// round(dim * pitch / target), never below 1.
int rescaled_dimension(int dim, double pitch_um, double target_pitch_um);

/// Center-aligned resampling: output pixel i samples source coordinate
/// (i + 0.5) * (src_dim / out_dim) - 0.5, clamped to the frame.
GrayImage rescale(const GrayImage& img, double target_pitch_um, Interpolation mode = Interpolation::Bilinear);

/// Class masks carry no pitch of their own, so the source pitch is explicit. Always nearest.
ClassMask rescale(const ClassMask& mask, double source_pitch_um, double target_pitch_um);

/// Nearest-neighbour resize to explicit dimensions (preview downscaling).
Raster<std::uint8_t> resize_nearest(const Raster<std::uint8_t>& img, int out_w, int out_h);

}  // namespace mudseg
