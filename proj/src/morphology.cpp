#include "mudseg/morphology.hpp"

#include <array>
#include <functional>

#include "mudseg/labeling.hpp"

namespace mudseg {

StructuringElement::StructuringElement(int radius_px) : radius_(radius_px) {
    if (radius_px < 0) throw InvalidArgument("structuring element radius must be >= 0");
    const long r2 = static_cast<long>(radius_px) * radius_px;
    half_width_.resize(static_cast<std::size_t>(2 * radius_px + 1));
    for (int dy = -radius_px; dy <= radius_px; ++dy) {
        int w = 0;
        while (static_cast<long>(w + 1) * (w + 1) + static_cast<long>(dy) * dy <= r2) ++w;
        half_width_[static_cast<std::size_t>(dy + radius_px)] = w;
        for (int dx = -w; dx <= w; ++dx) offsets_.push_back({dx, dy});
    }
}

namespace {

using Gray = Raster<std::uint8_t>;

/// 1-D running extremum of width 2w+1 over a clamped row (van Herk / Gil-Werman).
template <typename Cmp>
void row_extremum(const std::uint8_t* src, int n, int w, std::uint8_t* dst, std::vector<std::uint8_t>& pad,
                  std::vector<std::uint8_t>& fwd, std::vector<std::uint8_t>& bwd, Cmp better) {
    if (w == 0) {
        std::copy_n(src, n, dst);
        return;
    }
    const int len = n + 2 * w;
    const int k = 2 * w + 1;
    pad.resize(static_cast<std::size_t>(len));
    fwd.resize(static_cast<std::size_t>(len));
    bwd.resize(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) pad[static_cast<std::size_t>(i)] = src[std::clamp(i - w, 0, n - 1)];
    for (int i = 0; i < len; ++i) {
        auto v = pad[static_cast<std::size_t>(i)];
        fwd[static_cast<std::size_t>(i)] = (i % k == 0) ? v : better(fwd[static_cast<std::size_t>(i - 1)], v);
    }
    for (int i = len - 1; i >= 0; --i) {
        auto v = pad[static_cast<std::size_t>(i)];
        bwd[static_cast<std::size_t>(i)] =
            (i == len - 1 || (i + 1) % k == 0) ? v : better(bwd[static_cast<std::size_t>(i + 1)], v);
    }
    // Window [x, x+k-1] in padded coordinates.
    for (int x = 0; x < n; ++x) {
        dst[x] = better(bwd[static_cast<std::size_t>(x)], fwd[static_cast<std::size_t>(x + k - 1)]);
    }
}

template <typename Cmp>
Gray rank_extremum(const Gray& img, const StructuringElement& se, Cmp better) {
    const int r = se.radius();
    if (r == 0) return img;
    const int W = img.width();
    const int H = img.height();

    // One horizontally filtered plane per distinct half-width.
    std::vector<int> plane_of_width(static_cast<std::size_t>(r + 1), -1);
    std::vector<Gray> planes;
    std::vector<std::uint8_t> pad, fwd, bwd;
    for (int dy = -r; dy <= r; ++dy) {
        const int w = se.half_width(dy);
        if (plane_of_width[static_cast<std::size_t>(w)] >= 0) continue;
        plane_of_width[static_cast<std::size_t>(w)] = static_cast<int>(planes.size());
        Gray plane(W, H);
        for (int y = 0; y < H; ++y) {
            row_extremum(&img(0, y), W, w, &plane(0, y), pad, fwd, bwd, better);
        }
        planes.push_back(std::move(plane));
    }

    Gray out(W, H);
    for (int y = 0; y < H; ++y) {
        std::uint8_t* dst = &out(0, y);
        bool first = true;
        for (int dy = -r; dy <= r; ++dy) {
            const Gray& plane = planes[static_cast<std::size_t>(plane_of_width[static_cast<std::size_t>(se.half_width(dy))])];
            const std::uint8_t* src = &plane(0, std::clamp(y + dy, 0, H - 1));
            if (first) {
                std::copy_n(src, W, dst);
                first = false;
            } else {
                for (int x = 0; x < W; ++x) dst[x] = better(dst[x], src[x]);
            }
        }
    }
    return out;
}

constexpr auto min_u8 = [](std::uint8_t a, std::uint8_t b) { return b < a ? b : a; };
constexpr auto max_u8 = [](std::uint8_t a, std::uint8_t b) { return b > a ? b : a; };

}  // namespace

Gray erode(const Gray& img, const StructuringElement& se) { return rank_extremum(img, se, min_u8); }
Gray dilate(const Gray& img, const StructuringElement& se) { return rank_extremum(img, se, max_u8); }
Gray open(const Gray& img, const StructuringElement& se) { return dilate(erode(img, se), se); }
Gray close(const Gray& img, const StructuringElement& se) { return erode(dilate(img, se), se); }

Gray median_filter(const Gray& img, const StructuringElement& se) {
    const int r = se.radius();
    if (r == 0) return img;
    const int W = img.width();
    const int H = img.height();
    const int n = static_cast<int>(se.offsets().size());
    const int k = (n - 1) / 2;  // lower-middle order statistic

    Gray out(W, H);
    std::array<int, 256> hist{};
    for (int y = 0; y < H; ++y) {
        hist.fill(0);
        for (const auto& o : se.offsets()) ++hist[img.clamped(o.dx, y + o.dy)];
        int med = 0;
        int below = 0;
        while (below + hist[static_cast<std::size_t>(med)] <= k) below += hist[static_cast<std::size_t>(med++)];
        out(0, y) = static_cast<std::uint8_t>(med);

        for (int x = 1; x < W; ++x) {
            for (int dy = -r; dy <= r; ++dy) {
                const int w = se.half_width(dy);
                const int yy = y + dy;
                const int gone = img.clamped(x - 1 - w, yy);
                const int added = img.clamped(x + w, yy);
                if (gone == added) continue;
                --hist[static_cast<std::size_t>(gone)];
                if (gone < med) --below;
                ++hist[static_cast<std::size_t>(added)];
                if (added < med) ++below;
            }
            while (below > k) {
                --med;
                below -= hist[static_cast<std::size_t>(med)];
            }
            while (below + hist[static_cast<std::size_t>(med)] <= k) {
                below += hist[static_cast<std::size_t>(med)];
                ++med;
            }
            out(x, y) = static_cast<std::uint8_t>(med);
        }
    }
    return out;
}

FloatImage top_hat(const Gray& img, const StructuringElement& se) {
    const Gray opened = open(img, se);
    FloatImage out(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i) {
        out.samples()[i] = static_cast<double>(img.samples()[i]) - opened.samples()[i];
    }
    return out;
}

FloatImage bottom_hat(const Gray& img, const StructuringElement& se) {
    const Gray closed = close(img, se);
    FloatImage out(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i) {
        out.samples()[i] = static_cast<double>(closed.samples()[i]) - img.samples()[i];
    }
    return out;
}

Gray enhance_contrast(const Gray& img, const StructuringElement& se) {
    const Gray opened = open(img, se);
    const Gray closed = close(img, se);
    Gray out(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i) {
        const int v = img.samples()[i];
        const int enhanced = v + (v - opened.samples()[i]) - (closed.samples()[i] - v);
        out.samples()[i] = static_cast<std::uint8_t>(std::clamp(enhanced, 0, 255));
    }
    return out;
}

BinaryMask reconstruct(const BinaryMask& marker, const BinaryMask& mask) {
    if (!marker.same_shape(mask)) throw InvalidArgument("reconstruct: marker and mask differ in size");
    const LabelMap labels = label_components(mask, Connectivity::Eight);
    std::vector<std::uint8_t> keep(static_cast<std::size_t>(labels.count) + 1, 0);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (marker.samples()[i] && mask.samples()[i]) keep[labels.ids.samples()[i]] = 1;
    }
    BinaryMask out(mask.width(), mask.height());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        out.samples()[i] = keep[labels.ids.samples()[i]] && labels.ids.samples()[i] != 0 ? 1 : 0;
    }
    return out;
}

}  // namespace mudseg
