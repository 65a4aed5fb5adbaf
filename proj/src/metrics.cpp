#include "mudseg/metrics.hpp"

#include <sstream>

#include <json.hpp>

#include "mudseg/image_io.hpp"

namespace mudseg {

namespace {
constexpr std::array<ClassCode, kNumClasses> kAll{ClassCode::Clay, ClassCode::Silt, ClassCode::Pore};
std::size_t idx(ClassCode c) { return static_cast<std::size_t>(c); }
}  // namespace

std::uint64_t ConfusionMatrix::total() const noexcept {
    std::uint64_t n = 0;
    for (const auto& row : counts) {
        for (auto v : row) n += v;
    }
    return n;
}

std::uint64_t ConfusionMatrix::correct() const noexcept {
    std::uint64_t n = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) n += counts[c][c];
    return n;
}

std::uint64_t ConfusionMatrix::true_positive(ClassCode c) const noexcept { return counts[idx(c)][idx(c)]; }

std::uint64_t ConfusionMatrix::false_positive(ClassCode c) const noexcept {
    std::uint64_t n = 0;
    for (std::size_t t = 0; t < kNumClasses; ++t) {
        if (t != idx(c)) n += counts[t][idx(c)];
    }
    return n;
}

std::uint64_t ConfusionMatrix::false_negative(ClassCode c) const noexcept {
    std::uint64_t n = 0;
    for (std::size_t p = 0; p < kNumClasses; ++p) {
        if (p != idx(c)) n += counts[idx(c)][p];
    }
    return n;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) noexcept {
    for (std::size_t t = 0; t < kNumClasses; ++t) {
        for (std::size_t p = 0; p < kNumClasses; ++p) counts[t][p] += other.counts[t][p];
    }
    return *this;
}

ConfusionMatrix confusion(const ClassMask& pred, const ClassMask& truth) {
    if (!pred.same_shape(truth)) {
        throw InvalidArgument("confusion: prediction is " + std::to_string(pred.width()) + "x" +
                              std::to_string(pred.height()) + " but truth is " + std::to_string(truth.width()) +
                              "x" + std::to_string(truth.height()));
    }
    ConfusionMatrix cm;
    const auto p = pred.samples();
    const auto t = truth.samples();
    for (std::size_t i = 0; i < p.size(); ++i) ++cm.counts[t[i]][p[i]];
    return cm;
}

double pixel_accuracy(const ConfusionMatrix& cm) {
    const auto total = cm.total();
    if (total == 0) throw InvalidArgument("pixel_accuracy: empty confusion matrix");
    return static_cast<double>(cm.correct()) / static_cast<double>(total);
}

std::optional<double> class_iou(const ConfusionMatrix& cm, ClassCode c) {
    const auto tp = cm.true_positive(c);
    const auto denom = tp + cm.false_positive(c) + cm.false_negative(c);
    if (denom == 0) return std::nullopt;
    return static_cast<double>(tp) / static_cast<double>(denom);
}

std::optional<double> class_dice(const ConfusionMatrix& cm, ClassCode c) {
    const auto tp = cm.true_positive(c);
    const auto denom = 2 * tp + cm.false_positive(c) + cm.false_negative(c);
    if (denom == 0) return std::nullopt;
    return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

std::optional<bool> ImageScore::true_positive(ClassCode c) const {
    const auto& v = iou[idx(c)];
    if (!v) return std::nullopt;
    return *v > 0.5;
}

EvalReport evaluate_set(const std::vector<ScoredPair>& pairs, Aggregation agg) {
    if (pairs.empty()) throw InvalidArgument("evaluate_set: no image pairs");
    EvalReport report;
    report.aggregation = agg;
    ConfusionMatrix pooled;
    std::array<double, kNumClasses> sum{};
    std::array<int, kNumClasses> defined{};
    for (const auto& pair : pairs) {
        ImageScore score;
        score.image_id = pair.image_id;
        score.confusion = confusion(*pair.pred, *pair.truth);
        score.pixel_accuracy = pixel_accuracy(score.confusion);
        for (auto c : kAll) {
            score.iou[idx(c)] = class_iou(score.confusion, c);
            if (score.iou[idx(c)]) {
                sum[idx(c)] += *score.iou[idx(c)];
                ++defined[idx(c)];
                if (*score.iou[idx(c)] > 0.5) ++report.true_positive_images[idx(c)];
            }
        }
        pooled += score.confusion;
        report.images.push_back(std::move(score));
    }
    for (auto c : kAll) {
        if (agg == Aggregation::PooledPixels) {
            report.mean_iou[idx(c)] = class_iou(pooled, c);
        } else if (defined[idx(c)] > 0) {
            report.mean_iou[idx(c)] = sum[idx(c)] / defined[idx(c)];
        }
    }
    report.overall_pixel_accuracy = pixel_accuracy(pooled);
    return report;
}

namespace {

nlohmann::ordered_json opt_json(const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
    if (report.images.empty()) throw InvalidArgument("write_report: empty report");
    nlohmann::ordered_json j;
    j["aggregation"] = report.aggregation == Aggregation::PerImageMean ? "per_image_mean" : "pooled_pixels";
    auto& agg = j["aggregate"];
    for (auto c : kAll) agg[std::string("mean_iou_") + class_name(c)] = opt_json(report.mean_iou[idx(c)]);
    agg["overall_pixel_accuracy"] = report.overall_pixel_accuracy;
    for (auto c : kAll) {
        agg[std::string("true_positive_images_") + class_name(c)] = report.true_positive_images[idx(c)];
    }
    agg["image_count"] = report.images.size();
    j["images"] = nlohmann::ordered_json::array();
    for (const auto& s : report.images) {
        nlohmann::ordered_json ji;
        ji["image"] = s.image_id;
        for (auto c : kAll) ji[std::string("iou_") + class_name(c)] = opt_json(s.iou[idx(c)]);
        ji["pixel_accuracy"] = s.pixel_accuracy;
        nlohmann::ordered_json cm = nlohmann::ordered_json::array();
        for (const auto& row : s.confusion.counts) cm.push_back(row);
        ji["confusion"] = cm;
        j["images"].push_back(ji);
    }
    return j.dump(2) + "\n";
}

std::string report_to_csv(const EvalReport& report) {
    if (report.images.empty()) throw InvalidArgument("write_report: empty report");
    std::ostringstream os;
    os.precision(17);
    os << kReportCsvHeader << '\n';
    for (const auto& s : report.images) {
        os << s.image_id;
        for (auto c : {ClassCode::Clay, ClassCode::Silt, ClassCode::Pore}) {
            os << ',';
            if (s.iou[idx(c)]) os << *s.iou[idx(c)];
        }
        os << ',' << s.pixel_accuracy << '\n';
    }
    return os.str();
}

void write_report(const EvalReport& report, const std::filesystem::path& path, ReportFormat format) {
    write_text(path, format == ReportFormat::Json ? report_to_json(report) : report_to_csv(report));
}

}  // namespace mudseg
