#include "mudseg/features.hpp"

#include "mudseg/filters.hpp"

namespace mudseg {

namespace {

std::string sigma_tag(double s) { return "s" + std::to_string(static_cast<int>(s)); }

std::vector<float> as_float(const FloatImage& img) {
    return std::vector<float>(img.samples().begin(), img.samples().end());
}

}  // namespace

std::vector<std::string> default_feature_names() {
    std::vector<std::string> names{"intensity"};
    for (double s : kFeatureSigmas) names.push_back("gaussian_" + sigma_tag(s));
    names.push_back("sobel_raw");
    for (double s : kFeatureSigmas) names.push_back("sobel_gaussian_" + sigma_tag(s));
    for (double s : kFeatureSigmas) {
        names.push_back("hessian_max_" + sigma_tag(s));
        names.push_back("hessian_min_" + sigma_tag(s));
    }
    return names;
}

FeatureStack extract_features(const Raster<std::uint8_t>& img) {
    FeatureStack stack;
    stack.width = img.width();
    stack.height = img.height();
    stack.names = default_feature_names();

    const FloatImage raw = to_float(img);
    std::vector<FloatImage> smoothed;
    for (double s : kFeatureSigmas) smoothed.push_back(gaussian(raw, s));

    stack.channels.push_back(as_float(raw));
    for (const auto& g : smoothed) stack.channels.push_back(as_float(g));
    stack.channels.push_back(as_float(sobel_magnitude(raw)));
    for (const auto& g : smoothed) stack.channels.push_back(as_float(sobel_magnitude(g)));
    for (const auto& g : smoothed) {
        auto h = hessian_eigen_unsmoothed(g);
        stack.channels.push_back(as_float(h.lambda_max));
        stack.channels.push_back(as_float(h.lambda_min));
    }
    return stack;
}

}  // namespace mudseg
