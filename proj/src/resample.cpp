#include "mudseg/resample.hpp"

#include <cmath>

namespace mudseg {

namespace {

void check_target(double target_pitch_um) {
    if (!(target_pitch_um > 0.0) || !std::isfinite(target_pitch_um)) {
        throw InvalidArgument("target pitch must be positive and finite");
    }
}

std::vector<int> nearest_index(int src, int out) {
    const double scale = static_cast<double>(src) / out;
    std::vector<int> idx(static_cast<std::size_t>(out));
    for (int i = 0; i < out; ++i) {
        idx[static_cast<std::size_t>(i)] = std::clamp(static_cast<int>(std::floor((i + 0.5) * scale)), 0, src - 1);
    }
    return idx;
}

}  // namespace

int rescaled_dimension(int dim, double pitch_um, double target_pitch_um) {
    check_target(target_pitch_um);
    return std::max(1, static_cast<int>(std::lround(dim * pitch_um / target_pitch_um)));
}

Raster<std::uint8_t> resize_nearest(const Raster<std::uint8_t>& img, int out_w, int out_h) {
    const auto xs = nearest_index(img.width(), out_w);
    const auto ys = nearest_index(img.height(), out_h);
    Raster<std::uint8_t> out(out_w, out_h);
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            out(x, y) = img(xs[static_cast<std::size_t>(x)], ys[static_cast<std::size_t>(y)]);
        }
    }
    return out;
}

GrayImage rescale(const GrayImage& img, double target_pitch_um, Interpolation mode) {
    const double pitch = img.require_pitch("rescale");
    const int out_w = rescaled_dimension(img.width(), pitch, target_pitch_um);
    const int out_h = rescaled_dimension(img.height(), pitch, target_pitch_um);

    if (mode == Interpolation::Nearest) {
        auto r = resize_nearest(img, out_w, out_h);
        return GrayImage(out_w, out_h, std::vector<std::uint8_t>(r.vector()), target_pitch_um);
    }

    struct Tap {
        int i0;
        int i1;
        double t;
    };
    auto taps = [](int src, int out) {
        const double scale = static_cast<double>(src) / out;
        std::vector<Tap> v(static_cast<std::size_t>(out));
        for (int i = 0; i < out; ++i) {
            const double c = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(src - 1));
            const int i0 = static_cast<int>(std::floor(c));
            const int i1 = std::min(i0 + 1, src - 1);
            v[static_cast<std::size_t>(i)] = {i0, i1, c - i0};
        }
        return v;
    };
    const auto tx = taps(img.width(), out_w);
    const auto ty = taps(img.height(), out_h);

    std::vector<std::uint8_t> out(static_cast<std::size_t>(out_w) * out_h);
    for (int y = 0; y < out_h; ++y) {
        const auto& vy = ty[static_cast<std::size_t>(y)];
        for (int x = 0; x < out_w; ++x) {
            const auto& vx = tx[static_cast<std::size_t>(x)];
            const double top = (1.0 - vx.t) * img(vx.i0, vy.i0) + vx.t * img(vx.i1, vy.i0);
            const double bottom = (1.0 - vx.t) * img(vx.i0, vy.i1) + vx.t * img(vx.i1, vy.i1);
            const double v = (1.0 - vy.t) * top + vy.t * bottom;
            out[static_cast<std::size_t>(y) * out_w + x] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
    }
    return GrayImage(out_w, out_h, std::move(out), target_pitch_um);
}

ClassMask rescale(const ClassMask& mask, double source_pitch_um, double target_pitch_um) {
    if (!(source_pitch_um > 0.0)) throw MetadataError("rescale: mask has no pixel pitch");
    const int out_w = rescaled_dimension(mask.width(), source_pitch_um, target_pitch_um);
    const int out_h = rescaled_dimension(mask.height(), source_pitch_um, target_pitch_um);
    auto r = resize_nearest(mask, out_w, out_h);
    return ClassMask(out_w, out_h, std::vector<std::uint8_t>(r.vector()));
}

}  // namespace mudseg
