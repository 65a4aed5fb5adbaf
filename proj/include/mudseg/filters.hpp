#pragma once

#include <utility>
#include <vector>

#include "mudseg/raster.hpp"

namespace mudseg {

/// Sampled exp(-x^2 / 2 sigma^2) on [-ceil(3 sigma), ceil(3 sigma)], normalised to sum 1.
std::vector<double> gaussian_kernel(double sigma_px);

/// Separable Gaussian smoothing with clamp-to-edge padding; sigma 0 is the identity.
FloatImage gaussian(const FloatImage& img, double sigma_px);
FloatImage gaussian(const Raster<std::uint8_t>& img, double sigma_px);

/// sqrt(gx^2 + gy^2) with the 3x3 Sobel kernels.
FloatImage sobel_magnitude(const FloatImage& img);

struct HessianEigen {
    FloatImage lambda_max;
    FloatImage lambda_min;
};

/// Eigenvalues of the finite-difference Hessian of `img` (no smoothing).
HessianEigen hessian_eigen_unsmoothed(const FloatImage& img);

/// Hessian eigenvalues after gaussian(sigma_px) smoothing.
HessianEigen hessian_eigen(const FloatImage& img, double sigma_px);
HessianEigen hessian_eigen(const Raster<std::uint8_t>& img, double sigma_px);

}  // namespace mudseg
