#pragma once

#include <string>
#include <vector>

#include "mudseg/labeling.hpp"
#include "mudseg/raster.hpp"

namespace mudseg {

/// One spatial scale of pore extraction.
struct ScaleParams {
    int median_radius_px = 0;
    int se_radius_px = 0;   ///< top-hat / bottom-hat element
    int threshold = 0;      ///< enhanced value <= threshold is pore

    friend bool operator==(const ScaleParams&, const ScaleParams&) = default;
};

/// Full parameterisation of the conventional ground-truth workflow.
struct PipelineParams {
    std::vector<ScaleParams> scales;
    int erosion_count = 0;
    int erosion_se_radius_px = 1;
    bool reconstruct = false;
    double silt_ecd_min_um = 2.0;

    /// Throws InvalidArgument describing the first violated constraint.
    void validate() const;

    friend bool operator==(const PipelineParams&, const PipelineParams&) = default;
};

/// Defaults tuned for 15,000x frames at ~0.01-0.02 um/px (see README).
PipelineParams default_params();

std::string params_to_json(const PipelineParams& params);
/// Parses and validates a manifest; throws InvalidArgument on any schema violation.
PipelineParams params_from_json(const std::string& text);

struct ScaleTrace {
    Raster<std::uint8_t> smoothed;
    Raster<std::uint8_t> enhanced;
    BinaryMask thresholded;
};

/// Intermediate images kept for inspection.
struct StageTrace {
    std::vector<ScaleTrace> scales;
    BinaryMask pores;
    BinaryMask silt;
};

/// Union over scales of {enhance(median(img)) <= threshold}.
BinaryMask segment_pores(const Raster<std::uint8_t>& img, const PipelineParams& params,
                         StageTrace* trace = nullptr);

struct SiltSplit {
    BinaryMask silt;
    BinaryMask clay;
};

/// Separates large (silt) grains from the clay matrix by erosion, reconstruction or
/// re-dilation, and an ECD cutoff.
SiltSplit extract_silt(const BinaryMask& grain, const PipelineParams& params, double pitch_um);

/// 2 where pore, 1 where silt, 0 elsewhere; throws if the masks overlap.
ClassMask make_class_mask(const BinaryMask& pore, const BinaryMask& silt);

struct PipelineResult {
    ClassMask mask;
    std::vector<ClassComponentStats> stats;  ///< clay, silt, pore in that order
    StageTrace trace;
};

/// Pitch comes from the image when present, otherwise from meta.hfw_um / width.
PipelineResult run_pipeline(const GrayImage& img, const ImageMeta& meta, const PipelineParams& params);

}  // namespace mudseg
