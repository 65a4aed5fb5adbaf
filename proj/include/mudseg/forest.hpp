#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mudseg/features.hpp"
#include "mudseg/raster.hpp"

namespace mudseg {

/// Flat row-major sample matrix with one label and provenance per row.
struct TrainingSet {
    std::vector<std::string> channel_names;
    std::vector<float> features;  ///< rows() x channel_count()
    std::vector<std::uint8_t> labels;
    std::vector<std::string> source_ids;  ///< provenance table
    struct Provenance {
        std::uint32_t source = 0;  ///< index into source_ids
        std::uint64_t pixel = 0;   ///< y * width + x
    };
    std::vector<Provenance> provenance;

    [[nodiscard]] std::size_t channel_count() const noexcept { return channel_names.size(); }
    [[nodiscard]] std::size_t rows() const noexcept { return labels.size(); }
    [[nodiscard]] std::span<const float> row(std::size_t i) const noexcept {
        return {features.data() + i * channel_count(), channel_count()};
    }
    void add_row(std::span<const float> values, ClassCode label, std::uint32_t source, std::uint64_t pixel);
};

struct LabeledImage {
    std::string source_id;
    Raster<std::uint8_t> image;
    ClassMask mask;
};

inline constexpr int kDefaultSamplesPerClass = 1000;

/// For each image and class, a seeded uniform draw without replacement of
/// min(available, per_class) pixels. Throws if a class is absent from every image.
TrainingSet sample_training(const std::vector<LabeledImage>& images, int per_class, std::uint64_t seed);

struct TreeNode {
    int feature = -1;  ///< -1 marks a leaf
    double threshold = 0.0;
    int left = -1;   ///< value <= threshold
    int right = -1;
    std::array<std::uint32_t, kNumClasses> counts{};  ///< leaf class histogram

    [[nodiscard]] bool is_leaf() const noexcept { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
    std::vector<TreeNode> nodes;  ///< nodes[0] is the root
    friend bool operator==(const Tree&, const Tree&) = default;
};

struct ForestParams {
    int n_trees = 200;
    int mtry = 2;
    std::uint64_t seed = 0;
};

struct Forest {
    int n_trees = 0;
    int mtry = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> channels;
    std::vector<Tree> trees;

    friend bool operator==(const Forest&, const Forest&) = default;
};

inline constexpr int kForestFormatVersion = 1;

/// Bootstrap + fully grown Gini trees. Tree t draws from xoshiro256**(seed ^ t), so the
/// result does not depend on `jobs`. `oob_error`, when non-null, receives the out-of-bag
/// misclassification rate (0 when no row is ever out of bag).
Forest train_forest(const TrainingSet& ts, const ForestParams& params, int jobs = 1, double* oob_error = nullptr);

/// Leaf-histogram argmax per tree, then majority vote; ties go to the lower class code.
ClassCode predict_row(const Forest& forest, std::span<const float> features);
ClassMask predict(const Forest& forest, const FeatureStack& stack, int jobs = 1);

std::string forest_to_json(const Forest& forest);
Forest forest_from_json(const std::string& text);
void save_forest(const Forest& forest, const std::filesystem::path& path);
Forest load_forest(const std::filesystem::path& path);

}  // namespace mudseg
