#include "mudseg/raster.hpp"

#include <cmath>

namespace mudseg {

const char* class_name(ClassCode c) noexcept {
    switch (c) {
        case ClassCode::Clay: return "clay";
        case ClassCode::Silt: return "silt";
        case ClassCode::Pore: return "pore";
    }
    return "unknown";
}

std::optional<ClassCode> parse_class_name(const std::string& name) {
    if (name == "clay") return ClassCode::Clay;
    if (name == "silt") return ClassCode::Silt;
    if (name == "pore") return ClassCode::Pore;
    return std::nullopt;
}

void ImageMeta::validate() const {
    if (!(hfw_um > 0.0) || !std::isfinite(hfw_um)) {
        throw MetadataError("hfw_um must be a positive finite number");
    }
    if (magnification <= 0) {
        throw MetadataError("magnification must be positive");
    }
}

void GrayImage::set_pitch(std::optional<double> pitch_um) {
    if (pitch_um && !(*pitch_um > 0.0 && std::isfinite(*pitch_um))) {
        throw InvalidArgument("pitch_um must be positive and finite");
    }
    pitch_um_ = pitch_um;
}

double GrayImage::require_pitch(const char* what) const {
    if (!pitch_um_) {
        throw MetadataError(std::string(what) + ": image has no pixel pitch metadata");
    }
    return *pitch_um_;
}

ClassMask::ClassMask(int width, int height, std::vector<std::uint8_t> labels)
    : Raster(width, height, std::move(labels)) {
    check_codes(samples());
}

void ClassMask::check_codes(std::span<const std::uint8_t> labels) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= kNumClasses) {
            throw InvalidArgument("invalid class code " + std::to_string(labels[i]) + " at pixel index " +
                                  std::to_string(i));
        }
    }
}

FloatImage to_float(const Raster<std::uint8_t>& img) {
    FloatImage out(img.width(), img.height());
    std::copy(img.samples().begin(), img.samples().end(), out.samples().begin());
    return out;
}

GrayImage to_gray(const FloatImage& img) {
    GrayImage out(img.width(), img.height());
    auto src = img.samples();
    auto dst = out.samples();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = static_cast<std::uint8_t>(std::clamp(std::lround(src[i]), 0L, 255L));
    }
    return out;
}

GrayImage binary_to_gray(const BinaryMask& mask) {
    GrayImage out(mask.width(), mask.height());
    auto src = mask.samples();
    auto dst = out.samples();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] ? 255 : 0;
    return out;
}

}  // namespace mudseg
