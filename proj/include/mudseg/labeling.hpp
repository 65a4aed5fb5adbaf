#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mudseg/raster.hpp"

namespace mudseg {

enum class Connectivity { Four = 4, Eight = 8 };

/// Instance ids: 0 is background, objects are numbered 1..count in raster order
/// of their first pixel.
struct LabelMap {
    Raster<std::uint32_t> ids;
    std::uint32_t count = 0;
};

LabelMap label_components(const BinaryMask& mask, Connectivity conn = Connectivity::Eight);
LabelMap label_instances(const ClassMask& mask, ClassCode cls, Connectivity conn = Connectivity::Eight);

/// 2 sqrt(area / pi) * pitch.
double equivalent_circular_diameter(double area_px, double pitch_um) noexcept;

struct BoundingBox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;
    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct ComponentStats {
    std::uint32_t id = 0;
    std::uint64_t area_px = 0;
    double ecd_um = 0.0;
    double centroid_x = 0.0;
    double centroid_y = 0.0;
    BoundingBox bbox;
};

/// Per-instance area, ECD, centroid and bounding box, sorted by id.
std::vector<ComponentStats> component_stats(const LabelMap& labels, double pitch_um);

struct ClassComponentStats {
    ClassCode cls;
    std::vector<ComponentStats> components;
};

inline constexpr const char* kStatsCsvHeader =
    "class,id,area_px,ecd_um,centroid_x,centroid_y,bbox_x,bbox_y,bbox_w,bbox_h";

std::string stats_to_csv(const std::vector<ClassComponentStats>& stats);

}  // namespace mudseg
