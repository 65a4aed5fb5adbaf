#include "mudseg/pipeline.hpp"

#include <cmath>

#include <json.hpp>

#include "mudseg/morphology.hpp"

namespace mudseg {

void PipelineParams::validate() const {
    if (scales.empty()) throw InvalidArgument("params: at least one scale is required");
    for (std::size_t i = 0; i < scales.size(); ++i) {
        const auto& s = scales[i];
        const std::string where = "params: scales[" + std::to_string(i) + "]";
        if (s.median_radius_px < 0) throw InvalidArgument(where + ".median_radius_px must be >= 0");
        if (s.se_radius_px < 0) throw InvalidArgument(where + ".se_radius_px must be >= 0");
        if (s.threshold < 0 || s.threshold > 255) throw InvalidArgument(where + ".threshold must be in [0,255]");
    }
    if (erosion_count < 0) throw InvalidArgument("params: erosion_count must be >= 0");
    if (erosion_se_radius_px < 1) throw InvalidArgument("params: erosion_se_radius_px must be >= 1");
    if (!(silt_ecd_min_um > 0.0) || !std::isfinite(silt_ecd_min_um)) {
        throw InvalidArgument("params: silt_ecd_min_um must be positive");
    }
}

PipelineParams default_params() {
    PipelineParams p;
    p.scales = {{1, 3, 80}, {2, 8, 80}};
    p.erosion_count = 5;
    p.erosion_se_radius_px = 4;
    p.reconstruct = false;
    p.silt_ecd_min_um = 2.0;
    return p;
}

std::string params_to_json(const PipelineParams& params) {
    nlohmann::ordered_json j;
    j["scales"] = nlohmann::ordered_json::array();
    for (const auto& s : params.scales) {
        nlohmann::ordered_json js;
        js["median_radius_px"] = s.median_radius_px;
        js["se_radius_px"] = s.se_radius_px;
        js["threshold"] = s.threshold;
        j["scales"].push_back(js);
    }
    j["erosion_count"] = params.erosion_count;
    j["erosion_se_radius_px"] = params.erosion_se_radius_px;
    j["reconstruct"] = params.reconstruct;
    j["silt_ecd_min_um"] = params.silt_ecd_min_um;
    return j.dump(2) + "\n";
}

namespace {

int get_int(const nlohmann::json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw InvalidArgument(where + ": missing " + key);
    const auto& v = j.at(key);
    if (!v.is_number_integer()) throw InvalidArgument(where + ": " + key + " must be an integer");
    const auto wide = v.get<long long>();
    if (wide < -1'000'000 || wide > 1'000'000) throw InvalidArgument(where + ": " + key + " out of range");
    return static_cast<int>(wide);
}

}  // namespace

PipelineParams params_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("params: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw InvalidArgument("params: manifest must be a JSON object");
    PipelineParams p;
    if (!j.contains("scales") || !j["scales"].is_array()) throw InvalidArgument("params: scales must be an array");
    std::size_t i = 0;
    for (const auto& js : j["scales"]) {
        const std::string where = "params: scales[" + std::to_string(i++) + "]";
        if (!js.is_object()) throw InvalidArgument(where + " must be an object");
        p.scales.push_back({get_int(js, "median_radius_px", where), get_int(js, "se_radius_px", where),
                            get_int(js, "threshold", where)});
    }
    p.erosion_count = get_int(j, "erosion_count", "params");
    p.erosion_se_radius_px = get_int(j, "erosion_se_radius_px", "params");
    if (!j.contains("reconstruct") || !j["reconstruct"].is_boolean()) {
        throw InvalidArgument("params: reconstruct must be a boolean");
    }
    p.reconstruct = j["reconstruct"].get<bool>();
    if (j.contains("silt_ecd_min_um")) {
        if (!j["silt_ecd_min_um"].is_number()) throw InvalidArgument("params: silt_ecd_min_um must be a number");
        p.silt_ecd_min_um = j["silt_ecd_min_um"].get<double>();
    }
    p.validate();
    return p;
}

BinaryMask segment_pores(const Raster<std::uint8_t>& img, const PipelineParams& params, StageTrace* trace) {
    params.validate();
    BinaryMask pores(img.width(), img.height(), 0);
    for (const auto& s : params.scales) {
        auto smoothed = median_filter(img, disk(s.median_radius_px));
        auto enhanced = enhance_contrast(smoothed, disk(s.se_radius_px));
        BinaryMask thresholded(img.width(), img.height(), 0);
        for (std::size_t i = 0; i < img.size(); ++i) {
            const bool dark = enhanced.samples()[i] <= s.threshold;
            thresholded.samples()[i] = dark ? 1 : 0;
            if (dark) pores.samples()[i] = 1;
        }
        if (trace) trace->scales.push_back({std::move(smoothed), std::move(enhanced), std::move(thresholded)});
    }
    if (trace) trace->pores = pores;
    return pores;
}

SiltSplit extract_silt(const BinaryMask& grain, const PipelineParams& params, double pitch_um) {
    params.validate();
    if (!(pitch_um > 0.0) || !std::isfinite(pitch_um)) throw MetadataError("extract_silt: missing pixel pitch");
    const auto se = disk(params.erosion_se_radius_px);
    const BinaryMask eroded = repeat(grain, params.erosion_count, se,
                                     [](const BinaryMask& m, const StructuringElement& s) { return erode(m, s); });
    BinaryMask seeds;
    if (params.reconstruct) {
        seeds = reconstruct(eroded, grain);
    } else {
        seeds = repeat(eroded, params.erosion_count, se,
                       [](const BinaryMask& m, const StructuringElement& s) { return dilate(m, s); });
        for (std::size_t i = 0; i < seeds.size(); ++i) seeds.samples()[i] &= grain.samples()[i];
    }

    const LabelMap labels = label_components(seeds, Connectivity::Eight);
    const auto stats = component_stats(labels, pitch_um);
    std::vector<std::uint8_t> is_silt(labels.count + 1, 0);
    for (const auto& s : stats) is_silt[s.id] = s.ecd_um > params.silt_ecd_min_um ? 1 : 0;

    SiltSplit out{BinaryMask(grain.width(), grain.height(), 0), BinaryMask(grain.width(), grain.height(), 0)};
    for (std::size_t i = 0; i < grain.size(); ++i) {
        const bool silt = is_silt[labels.ids.samples()[i]] != 0 && labels.ids.samples()[i] != 0;
        out.silt.samples()[i] = silt ? 1 : 0;
        out.clay.samples()[i] = grain.samples()[i] && !silt ? 1 : 0;
    }
    return out;
}

ClassMask make_class_mask(const BinaryMask& pore, const BinaryMask& silt) {
    if (!pore.same_shape(silt)) throw InvalidArgument("make_class_mask: mask dimensions differ");
    ClassMask out(pore.width(), pore.height());
    for (std::size_t i = 0; i < pore.size(); ++i) {
        const bool p = pore.samples()[i] != 0;
        const bool s = silt.samples()[i] != 0;
        if (p && s) throw InvalidArgument("make_class_mask: pore and silt overlap at pixel index " + std::to_string(i));
        out.samples()[i] = static_cast<std::uint8_t>(p ? ClassCode::Pore : s ? ClassCode::Silt : ClassCode::Clay);
    }
    return out;
}

PipelineResult run_pipeline(const GrayImage& img, const ImageMeta& meta, const PipelineParams& params) {
    params.validate();
    double pitch = 0.0;
    if (img.pitch_um()) {
        pitch = *img.pitch_um();
    } else {
        meta.validate();
        pitch = meta.hfw_um / img.width();
    }

    PipelineResult result;
    const BinaryMask pores = segment_pores(img, params, &result.trace);
    BinaryMask grain(img.width(), img.height());
    for (std::size_t i = 0; i < grain.size(); ++i) grain.samples()[i] = pores.samples()[i] ? 0 : 1;
    auto split = extract_silt(grain, params, pitch);
    result.mask = make_class_mask(pores, split.silt);
    result.trace.silt = std::move(split.silt);

    for (ClassCode c : {ClassCode::Clay, ClassCode::Silt, ClassCode::Pore}) {
        const LabelMap labels = label_instances(result.mask, c, Connectivity::Eight);
        result.stats.push_back({c, component_stats(labels, pitch)});
    }
    return result;
}

}  // namespace mudseg
