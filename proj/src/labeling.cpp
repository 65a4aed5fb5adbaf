#include "mudseg/labeling.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace mudseg {

namespace {

struct DisjointSet {
    std::vector<std::uint32_t> parent;

    std::uint32_t make() {
        parent.push_back(static_cast<std::uint32_t>(parent.size()));
        return parent.back();
    }
    std::uint32_t find(std::uint32_t a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    }
    void unite(std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        // Smaller root wins so the provisional order survives.
        if (b < a) std::swap(a, b);
        parent[b] = a;
    }
};

}  // namespace

LabelMap label_components(const BinaryMask& mask, Connectivity conn) {
    const int W = mask.width();
    const int H = mask.height();
    Raster<std::uint32_t> provisional(W, H, 0u);
    DisjointSet sets;
    sets.make();  // index 0 = background

    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            if (!mask(x, y)) continue;
            std::uint32_t label = 0;
            auto visit = [&](int nx, int ny) {
                if (nx < 0 || ny < 0 || nx >= W) return;
                const std::uint32_t n = provisional(nx, ny);
                if (n == 0) return;
                if (label == 0) {
                    label = n;
                } else {
                    sets.unite(label, n);
                }
            };
            visit(x - 1, y);
            visit(x, y - 1);
            if (conn == Connectivity::Eight) {
                visit(x - 1, y - 1);
                visit(x + 1, y - 1);
            }
            provisional(x, y) = label != 0 ? label : sets.make();
        }
    }

    // Renumber by first appearance in raster order.
    std::vector<std::uint32_t> final_id(sets.parent.size(), 0);
    LabelMap out{Raster<std::uint32_t>(W, H, 0u), 0};
    auto src = provisional.samples();
    auto dst = out.ids.samples();
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (src[i] == 0) continue;
        const std::uint32_t root = sets.find(src[i]);
        if (final_id[root] == 0) final_id[root] = ++out.count;
        dst[i] = final_id[root];
    }
    return out;
}

LabelMap label_instances(const ClassMask& mask, ClassCode cls, Connectivity conn) {
    BinaryMask bin(mask.width(), mask.height());
    const auto code = static_cast<std::uint8_t>(cls);
    for (std::size_t i = 0; i < mask.size(); ++i) bin.samples()[i] = mask.samples()[i] == code ? 1 : 0;
    return label_components(bin, conn);
}

double equivalent_circular_diameter(double area_px, double pitch_um) noexcept {
    return 2.0 * std::sqrt(area_px / std::numbers::pi) * pitch_um;
}

std::vector<ComponentStats> component_stats(const LabelMap& labels, double pitch_um) {
    if (!(pitch_um > 0.0)) throw InvalidArgument("component_stats: pitch_um must be positive");
    struct Acc {
        std::uint64_t n = 0;
        double sx = 0.0;
        double sy = 0.0;
        int x0 = 0, y0 = 0, x1 = -1, y1 = -1;
    };
    std::vector<Acc> acc(labels.count + 1);
    for (int y = 0; y < labels.ids.height(); ++y) {
        for (int x = 0; x < labels.ids.width(); ++x) {
            const auto id = labels.ids(x, y);
            if (id == 0) continue;
            auto& a = acc[id];
            if (a.n == 0) {
                a.x0 = a.x1 = x;
                a.y0 = a.y1 = y;
            }
            ++a.n;
            a.sx += x;
            a.sy += y;
            a.x0 = std::min(a.x0, x);
            a.x1 = std::max(a.x1, x);
            a.y0 = std::min(a.y0, y);
            a.y1 = std::max(a.y1, y);
        }
    }
    std::vector<ComponentStats> out;
    out.reserve(labels.count);
    for (std::uint32_t id = 1; id <= labels.count; ++id) {
        const auto& a = acc[id];
        if (a.n == 0) continue;
        ComponentStats s;
        s.id = id;
        s.area_px = a.n;
        s.ecd_um = equivalent_circular_diameter(static_cast<double>(a.n), pitch_um);
        s.centroid_x = a.sx / static_cast<double>(a.n);
        s.centroid_y = a.sy / static_cast<double>(a.n);
        s.bbox = {a.x0, a.y0, a.x1 - a.x0 + 1, a.y1 - a.y0 + 1};
        out.push_back(s);
    }
    return out;
}

std::string stats_to_csv(const std::vector<ClassComponentStats>& stats) {
    std::ostringstream os;
    os.precision(10);
    os << kStatsCsvHeader << '\n';
    for (const auto& group : stats) {
        for (const auto& s : group.components) {
            os << class_name(group.cls) << ',' << s.id << ',' << s.area_px << ',' << s.ecd_um << ','
               << s.centroid_x << ',' << s.centroid_y << ',' << s.bbox.x << ',' << s.bbox.y << ',' << s.bbox.w
               << ',' << s.bbox.h << '\n';
        }
    }
    return os.str();
}

}  // namespace mudseg
