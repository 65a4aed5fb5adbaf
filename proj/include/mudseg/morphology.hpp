#pragma once

#include <vector>

#include "mudseg/raster.hpp"

namespace mudseg {

struct Offset {
    int dx = 0;
    int dy = 0;
    friend bool operator==(const Offset&, const Offset&) = default;
};

/// Euclidean disk {(dx,dy) : dx^2 + dy^2 <= r^2}. Used for morphology and the median window alike.
class StructuringElement {
public:
    explicit StructuringElement(int radius_px);

    [[nodiscard]] int radius() const noexcept { return radius_; }
    [[nodiscard]] const std::vector<Offset>& offsets() const noexcept { return offsets_; }
    /// Horizontal half-extent of the disk on row dy, for dy in [-r, r].
    [[nodiscard]] int half_width(int dy) const noexcept { return half_width_[static_cast<std::size_t>(dy + radius_)]; }

private:
    int radius_;
    std::vector<Offset> offsets_;
    std::vector<int> half_width_;
};

inline StructuringElement disk(int radius_px) { return StructuringElement(radius_px); }

// All filters use clamp-to-edge padding. The 8-bit overloads also serve BinaryMask
// (0/1 samples), where min/max reduce to AND/OR over the neighborhood.

Raster<std::uint8_t> median_filter(const Raster<std::uint8_t>& img, const StructuringElement& se);
Raster<std::uint8_t> erode(const Raster<std::uint8_t>& img, const StructuringElement& se);
Raster<std::uint8_t> dilate(const Raster<std::uint8_t>& img, const StructuringElement& se);
Raster<std::uint8_t> open(const Raster<std::uint8_t>& img, const StructuringElement& se);
Raster<std::uint8_t> close(const Raster<std::uint8_t>& img, const StructuringElement& se);

/// img - open(img)
FloatImage top_hat(const Raster<std::uint8_t>& img, const StructuringElement& se);
/// close(img) - img
FloatImage bottom_hat(const Raster<std::uint8_t>& img, const StructuringElement& se);
/// clamp(img + top_hat - bottom_hat) in signed arithmetic.
Raster<std::uint8_t> enhance_contrast(const Raster<std::uint8_t>& img, const StructuringElement& se);

/// Repeats `op` `times` times.
template <typename Op>
Raster<std::uint8_t> repeat(Raster<std::uint8_t> img, int times, const StructuringElement& se, Op op) {
    for (int i = 0; i < times; ++i) img = op(img, se);
    return img;
}

/// Keeps the 8-connected components of `mask` that intersect `marker`
/// (fixpoint of 3x3 dilation intersected with mask).
BinaryMask reconstruct(const BinaryMask& marker, const BinaryMask& mask);

}  // namespace mudseg
