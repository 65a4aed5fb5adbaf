#pragma once

#include <array>
#include <string>
#include <vector>

#include "mudseg/raster.hpp"

namespace mudseg {

/// Smoothing scales shared by the Gaussian, Sobel and Hessian channels.
inline constexpr std::array<double, 4> kFeatureSigmas{1.0, 2.0, 4.0, 8.0};
inline constexpr int kDefaultFeatureCount = 18;

/// Per-pixel feature planes in a fixed channel order.
struct FeatureStack {
    int width = 0;
    int height = 0;
    std::vector<std::string> names;
    std::vector<std::vector<float>> channels;  ///< channels[c][y * width + x]

    [[nodiscard]] std::size_t channel_count() const noexcept { return channels.size(); }
    [[nodiscard]] std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }
};

/// Channel names of the default stack, in order.
std::vector<std::string> default_feature_names();

/// intensity; gaussian s={1,2,4,8}; sobel of raw and of each gaussian;
/// hessian (lambda_max, lambda_min) at each s. 1 + 4 + 5 + 8 = 18 channels.
FeatureStack extract_features(const Raster<std::uint8_t>& img);

}  // namespace mudseg
