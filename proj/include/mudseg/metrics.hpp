#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mudseg/raster.hpp"

namespace mudseg {

/// counts[truth][pred]
struct ConfusionMatrix {
    std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

    [[nodiscard]] std::uint64_t total() const noexcept;
    [[nodiscard]] std::uint64_t correct() const noexcept;
    [[nodiscard]] std::uint64_t true_positive(ClassCode c) const noexcept;
    [[nodiscard]] std::uint64_t false_positive(ClassCode c) const noexcept;
    [[nodiscard]] std::uint64_t false_negative(ClassCode c) const noexcept;

    ConfusionMatrix& operator+=(const ConfusionMatrix& other) noexcept;
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(const ClassMask& pred, const ClassMask& truth);

double pixel_accuracy(const ConfusionMatrix& cm);

/// TP / (TP + FP + FN); nullopt when the class is absent from both masks.
std::optional<double> class_iou(const ConfusionMatrix& cm, ClassCode c);

/// 2 TP / (2 TP + FP + FN); nullopt under the same condition as class_iou.
std::optional<double> class_dice(const ConfusionMatrix& cm, ClassCode c);

struct ImageScore {
    std::string image_id;
    std::array<std::optional<double>, kNumClasses> iou{};  ///< indexed by ClassCode
    double pixel_accuracy = 0.0;
    ConfusionMatrix confusion;

    /// IoU > 0.5 counts as a true-positive detection; nullopt when IoU is undefined.
    [[nodiscard]] std::optional<bool> true_positive(ClassCode c) const;
};

enum class Aggregation { PerImageMean, PooledPixels };

struct EvalReport {
    std::vector<ImageScore> images;
    Aggregation aggregation = Aggregation::PerImageMean;
    /// Mean over images where the class IoU is defined (or the pooled IoU).
    std::array<std::optional<double>, kNumClasses> mean_iou{};
    /// Pooled correct / total over all images.
    double overall_pixel_accuracy = 0.0;
    /// Number of images whose class IoU exceeds 0.5.
    std::array<int, kNumClasses> true_positive_images{};
};

struct ScoredPair {
    const ClassMask* pred;
    const ClassMask* truth;
    std::string image_id;
};

EvalReport evaluate_set(const std::vector<ScoredPair>& pairs, Aggregation agg = Aggregation::PerImageMean);

inline constexpr const char* kReportCsvHeader = "image,iou_clay,iou_silt,iou_pore,pixel_accuracy";

std::string report_to_json(const EvalReport& report);
std::string report_to_csv(const EvalReport& report);

enum class ReportFormat { Json, Csv };
void write_report(const EvalReport& report, const std::filesystem::path& path, ReportFormat format);

}  // namespace mudseg
