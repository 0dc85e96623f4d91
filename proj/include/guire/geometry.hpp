#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace guire {

// Integer pixel space throughout. The only rounding point is bbox_center,
// which rounds half-sums to the nearest integer with ties to even.

struct Point {
    int64_t x = 0;
    int64_t y = 0;

    friend bool operator==(const Point&, const Point&) = default;
};

struct BBox {
    int64_t x_min = 0;
    int64_t y_min = 0;
    int64_t x_max = 0;
    int64_t y_max = 0;

    int64_t width() const { return x_max - x_min; }
    int64_t height() const { return y_max - y_min; }

    friend bool operator==(const BBox&, const BBox&) = default;
};

struct ScreenDims {
    int64_t width = 0;
    int64_t height = 0;

    friend bool operator==(const ScreenDims&, const ScreenDims&) = default;
};

// Sub-rectangle of a parent image. origin is the top-left corner in parent
// coordinates; dims is the window size.
struct CropWindow {
    Point origin;
    ScreenDims dims;

    friend bool operator==(const CropWindow&, const CropWindow&) = default;
};

struct CropConfig {
    double fraction = 0.25;  // window side as a fraction of the full side
    int64_t min_px = 200;    // lower bound per side, clamped to image size
};

bool valid(const BBox& b);
bool valid(const ScreenDims& d);

// True iff p is a pixel of the screen, i.e. 0 <= x < width and 0 <= y < height.
bool in_screen(const ScreenDims& d, const Point& p);

// Geometric center of the box; each halved corner sum is rounded to the
// nearest integer, ties to even. Throws std::invalid_argument on an invalid box.
Point bbox_center(const BBox& b);

// Boundary-inclusive containment: x_min <= p.x <= x_max and likewise for y.
bool contains(const BBox& b, const Point& p);

// Window of size round(full * fraction) per side, at least cfg.min_px and at
// most the full image, centered on `center`, then translated (never shrunk)
// to lie inside the image. Throws if center is outside the image.
CropWindow make_crop(const Point& center, const ScreenDims& full, const CropConfig& cfg = {});

struct OutOfWindowError : std::invalid_argument {
    explicit OutOfWindowError(const std::string& what) : std::invalid_argument(what) {}
};

// Exact coordinate remap between full-image and window coordinates.
// to_crop_coords throws OutOfWindowError if p lies outside the window.
Point to_crop_coords(const CropWindow& w, const Point& p);
Point from_crop_coords(const CropWindow& w, const Point& p);

bool window_contains(const CropWindow& w, const Point& p);

// Translate all four corners by offset; width and height are preserved.
BBox remap_bbox(const Point& offset, const BBox& b);

}  // namespace guire
