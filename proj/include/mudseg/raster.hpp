#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mudseg/error.hpp"

namespace mudseg {

/// Segmentation classes. The numeric value is the on-disk mask code.
enum class ClassCode : std::uint8_t { Clay = 0, Silt = 1, Pore = 2 };

inline constexpr int kNumClasses = 3;

const char* class_name(ClassCode c) noexcept;
std::optional<ClassCode> parse_class_name(const std::string& name);

/// Row-major 2-D grid of samples with clamp-to-edge access.
template <typename T>
class Raster {
public:
    using value_type = T;

    Raster() = default;
    Raster(int width, int height, T fill = T{}) : width_(width), height_(height) {
        if (width < 1 || height < 1) {
            throw InvalidArgument("raster dimensions must be positive, got " + std::to_string(width) +
                                  "x" + std::to_string(height));
        }
        samples_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }
    Raster(int width, int height, std::vector<T> samples) : width_(width), height_(height) {
        if (width < 1 || height < 1) {
            throw InvalidArgument("raster dimensions must be positive, got " + std::to_string(width) +
                                  "x" + std::to_string(height));
        }
        if (samples.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
            throw InvalidArgument("sample count " + std::to_string(samples.size()) + " does not match " +
                                  std::to_string(width) + "x" + std::to_string(height));
        }
        samples_ = std::move(samples);
    }

    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] std::size_t size() const noexcept { return samples_.size(); }
    [[nodiscard]] bool empty() const noexcept { return samples_.empty(); }

    [[nodiscard]] std::span<const T> samples() const noexcept { return samples_; }
    [[nodiscard]] std::span<T> samples() noexcept { return samples_; }
    [[nodiscard]] const std::vector<T>& vector() const noexcept { return samples_; }

    [[nodiscard]] T& operator()(int x, int y) noexcept { return samples_[index(x, y)]; }
    [[nodiscard]] const T& operator()(int x, int y) const noexcept { return samples_[index(x, y)]; }

    /// Replicate-border read.
    [[nodiscard]] const T& clamped(int x, int y) const noexcept {
        return samples_[index(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1))];
    }

    [[nodiscard]] std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    [[nodiscard]] bool same_shape(int w, int h) const noexcept { return w == width_ && h == height_; }
    template <typename U>
    [[nodiscard]] bool same_shape(const Raster<U>& other) const noexcept {
        return other.width() == width_ && other.height() == height_;
    }

    friend bool operator==(const Raster& a, const Raster& b) {
        return a.width_ == b.width_ && a.height_ == b.height_ && a.samples_ == b.samples_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> samples_;
};

/// Physical acquisition parameters carried in the `<stem>.meta.json` sidecar.
struct ImageMeta {
    std::string source_id;
    int magnification = 0;
    double hfw_um = 0.0;

    void validate() const;
    friend bool operator==(const ImageMeta&, const ImageMeta&) = default;
};

/// 8-bit grayscale SEM frame, optionally with pixel pitch in micrometres.
class GrayImage : public Raster<std::uint8_t> {
public:
    GrayImage() = default;
    GrayImage(int width, int height, std::uint8_t fill = 0) : Raster(width, height, fill) {}
    GrayImage(int width, int height, std::vector<std::uint8_t> samples,
              std::optional<double> pitch_um = std::nullopt)
        : Raster(width, height, std::move(samples)) {
        set_pitch(pitch_um);
    }

    [[nodiscard]] std::optional<double> pitch_um() const noexcept { return pitch_um_; }
    void set_pitch(std::optional<double> pitch_um);

    /// Pitch or an error naming the operation that needed it.
    [[nodiscard]] double require_pitch(const char* what) const;

    friend bool operator==(const GrayImage& a, const GrayImage& b) {
        return static_cast<const Raster&>(a) == static_cast<const Raster&>(b) && a.pitch_um_ == b.pitch_um_;
    }

private:
    std::optional<double> pitch_um_;
};

/// Per-pixel class raster over {clay, silt, pore}.
class ClassMask : public Raster<std::uint8_t> {
public:
    ClassMask() = default;
    ClassMask(int width, int height, ClassCode fill = ClassCode::Clay)
        : Raster(width, height, static_cast<std::uint8_t>(fill)) {}
    /// Throws InvalidArgument naming the first out-of-range code and its pixel index.
    ClassMask(int width, int height, std::vector<std::uint8_t> labels);

    [[nodiscard]] ClassCode at(int x, int y) const noexcept {
        return static_cast<ClassCode>((*this)(x, y));
    }
    void set(int x, int y, ClassCode c) noexcept { (*this)(x, y) = static_cast<std::uint8_t>(c); }

    /// Raises if any label is outside {0,1,2}.
    static void check_codes(std::span<const std::uint8_t> labels);
};

/// Boolean raster stored one byte per pixel (0 or 1).
using BinaryMask = Raster<std::uint8_t>;

/// Real-valued intermediate filter result.
using FloatImage = Raster<double>;

struct RgbaImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> samples;  // 4 bytes per pixel

    friend bool operator==(const RgbaImage&, const RgbaImage&) = default;
};

FloatImage to_float(const Raster<std::uint8_t>& img);

/// Round-to-nearest with clamping into [0,255].
GrayImage to_gray(const FloatImage& img);

/// Binary mask rendered as 0/255 for viewing.
GrayImage binary_to_gray(const BinaryMask& mask);

template <typename T>
Raster<T> flip_horizontal(const Raster<T>& in) {
    Raster<T> out(in.width(), in.height());
    for (int y = 0; y < in.height(); ++y) {
        for (int x = 0; x < in.width(); ++x) {
            out(x, y) = in(in.width() - 1 - x, y);
        }
    }
    return out;
}

template <typename T>
Raster<T> flip_vertical(const Raster<T>& in) {
    Raster<T> out(in.width(), in.height());
    for (int y = 0; y < in.height(); ++y) {
        for (int x = 0; x < in.width(); ++x) {
            out(x, y) = in(x, in.height() - 1 - y);
        }
    }
    return out;
}

template <typename T>
Raster<T> crop(const Raster<T>& in, int x0, int y0, int w, int h) {
    if (x0 < 0 || y0 < 0 || w < 1 || h < 1 || x0 + w > in.width() || y0 + h > in.height()) {
        throw InvalidArgument("crop window outside raster");
    }
    Raster<T> out(w, h);
    for (int y = 0; y < h; ++y) {
        std::copy_n(in.samples().begin() + static_cast<std::ptrdiff_t>(in.index(x0, y0 + y)), w,
                    out.samples().begin() + static_cast<std::ptrdiff_t>(out.index(0, y)));
    }
    return out;
}

}  // namespace mudseg
