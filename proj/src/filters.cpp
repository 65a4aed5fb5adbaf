#include "mudseg/filters.hpp"

#include <cmath>

namespace mudseg {

std::vector<double> gaussian_kernel(double sigma_px) {
    if (!(sigma_px >= 0.0) || !std::isfinite(sigma_px)) throw InvalidArgument("gaussian sigma must be >= 0");
    if (sigma_px == 0.0) return {1.0};
    const int radius = static_cast<int>(std::ceil(3.0 * sigma_px));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma_px * sigma_px));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (auto& v : k) v /= sum;
    return k;
}

FloatImage gaussian(const FloatImage& img, double sigma_px) {
    const auto k = gaussian_kernel(sigma_px);
    if (k.size() == 1) return img;
    const int radius = static_cast<int>(k.size() / 2);
    const int W = img.width();
    const int H = img.height();

    FloatImage tmp(W, H);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                acc += k[static_cast<std::size_t>(i + radius)] * img(std::clamp(x + i, 0, W - 1), y);
            }
            tmp(x, y) = acc;
        }
    }
    FloatImage out(W, H);
    std::vector<double> acc(static_cast<std::size_t>(W));
    for (int y = 0; y < H; ++y) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int i = -radius; i <= radius; ++i) {
            const double w = k[static_cast<std::size_t>(i + radius)];
            const double* row = &tmp(0, std::clamp(y + i, 0, H - 1));
            for (int x = 0; x < W; ++x) acc[static_cast<std::size_t>(x)] += w * row[x];
        }
        std::copy(acc.begin(), acc.end(), &out(0, y));
    }
    return out;
}

FloatImage gaussian(const Raster<std::uint8_t>& img, double sigma_px) { return gaussian(to_float(img), sigma_px); }

FloatImage sobel_magnitude(const FloatImage& img) {
    const int W = img.width();
    const int H = img.height();
    FloatImage out(W, H);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            auto f = [&](int dx, int dy) { return img.clamped(x + dx, y + dy); };
            const double gx = (f(1, -1) + 2.0 * f(1, 0) + f(1, 1)) - (f(-1, -1) + 2.0 * f(-1, 0) + f(-1, 1));
            const double gy = (f(-1, 1) + 2.0 * f(0, 1) + f(1, 1)) - (f(-1, -1) + 2.0 * f(0, -1) + f(1, -1));
            out(x, y) = std::sqrt(gx * gx + gy * gy);
        }
    }
    return out;
}

HessianEigen hessian_eigen_unsmoothed(const FloatImage& img) {
    const int W = img.width();
    const int H = img.height();
    HessianEigen out{FloatImage(W, H), FloatImage(W, H)};
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            auto f = [&](int dx, int dy) { return img.clamped(x + dx, y + dy); };
            const double c = f(0, 0);
            const double hxx = f(1, 0) - 2.0 * c + f(-1, 0);
            const double hyy = f(0, 1) - 2.0 * c + f(0, -1);
            const double hxy = (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / 4.0;
            const double mean = (hxx + hyy) / 2.0;
            const double half_diff = (hxx - hyy) / 2.0;
            const double root = std::sqrt(half_diff * half_diff + hxy * hxy);
            out.lambda_max(x, y) = mean + root;
            out.lambda_min(x, y) = mean - root;
        }
    }
    return out;
}

HessianEigen hessian_eigen(const FloatImage& img, double sigma_px) {
    return hessian_eigen_unsmoothed(gaussian(img, sigma_px));
}

HessianEigen hessian_eigen(const Raster<std::uint8_t>& img, double sigma_px) {
    return hessian_eigen(to_float(img), sigma_px);
}

}  // namespace mudseg
