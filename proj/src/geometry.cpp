#include "guire/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace guire {

namespace {

// Round n/2 to the nearest integer, ties to even. n is a sum of two
// non-negative pixel coordinates, so it is non-negative.
int64_t half_round_even(int64_t n) {
    const int64_t q = n / 2;
    if (n % 2 == 0) return q;
    // exact half: q + 0.5 rounds to whichever of q, q+1 is even
    return (q % 2 == 0) ? q : q + 1;
}

}  // namespace

bool valid(const BBox& b) {
    return b.x_min >= 0 && b.y_min >= 0 && b.x_min < b.x_max && b.y_min < b.y_max;
}

bool valid(const ScreenDims& d) { return d.width > 0 && d.height > 0; }

bool in_screen(const ScreenDims& d, const Point& p) {
    return p.x >= 0 && p.y >= 0 && p.x < d.width && p.y < d.height;
}

Point bbox_center(const BBox& b) {
    if (!valid(b)) throw std::invalid_argument("bbox_center: invalid box");
    return Point{half_round_even(b.x_min + b.x_max), half_round_even(b.y_min + b.y_max)};
}

bool contains(const BBox& b, const Point& p) {
    return b.x_min <= p.x && p.x <= b.x_max && b.y_min <= p.y && p.y <= b.y_max;
}

CropWindow make_crop(const Point& center, const ScreenDims& full, const CropConfig& cfg) {
    if (!valid(full)) throw std::invalid_argument("make_crop: invalid image dims");
    if (!in_screen(full, center)) throw std::invalid_argument("make_crop: center outside image");
    if (cfg.fraction <= 0.0 || cfg.fraction > 1.0)
        throw std::invalid_argument("make_crop: fraction must be in (0, 1]");

    auto side = [&](int64_t full_side) {
        int64_t s = std::llround(static_cast<double>(full_side) * cfg.fraction);
        s = std::max(s, cfg.min_px);
        return std::min(s, full_side);
    };
    const int64_t w = side(full.width);
    const int64_t h = side(full.height);

    int64_t ox = center.x - w / 2;
    int64_t oy = center.y - h / 2;
    ox = std::clamp<int64_t>(ox, 0, full.width - w);
    oy = std::clamp<int64_t>(oy, 0, full.height - h);
    return CropWindow{Point{ox, oy}, ScreenDims{w, h}};
}

bool window_contains(const CropWindow& w, const Point& p) {
    return p.x >= w.origin.x && p.y >= w.origin.y && p.x < w.origin.x + w.dims.width &&
           p.y < w.origin.y + w.dims.height;
}

Point to_crop_coords(const CropWindow& w, const Point& p) {
    if (!window_contains(w, p)) throw OutOfWindowError("to_crop_coords: point outside window");
    return Point{p.x - w.origin.x, p.y - w.origin.y};
}

Point from_crop_coords(const CropWindow& w, const Point& p) {
    return Point{p.x + w.origin.x, p.y + w.origin.y};
}

BBox remap_bbox(const Point& offset, const BBox& b) {
    return BBox{b.x_min + offset.x, b.y_min + offset.y, b.x_max + offset.x, b.y_max + offset.y};
}

}  // namespace guire
