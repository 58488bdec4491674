#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "netoas/errors.hpp"

namespace netoas {

// Owned RGB8 raster, row-major, with its position in the session stream.
class Frame {
public:
    static constexpr int kMinSide = 16;

    Frame() = default;
    Frame(int width, int height, std::uint64_t seq = 0, std::int64_t timestamp_ms = 0);
    Frame(int width, int height, std::vector<std::uint8_t> pixels, std::uint64_t seq = 0,
          std::int64_t timestamp_ms = 0);

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return pixels_.empty(); }
    std::uint64_t seq() const { return seq_; }
    std::int64_t timestamp_ms() const { return timestamp_ms_; }
    void set_seq(std::uint64_t seq) { seq_ = seq; }
    void set_timestamp_ms(std::int64_t ts) { timestamp_ms_ = ts; }

    std::span<const std::uint8_t> pixels() const { return pixels_; }
    std::span<std::uint8_t> pixels() { return pixels_; }

    const std::uint8_t* at(int x, int y) const { return &pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3]; }
    std::uint8_t* at(int x, int y) { return &pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3]; }
    void fill(std::uint8_t r, std::uint8_t g, std::uint8_t b);

    bool operator==(const Frame&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
    std::uint64_t seq_ = 0;
    std::int64_t timestamp_ms_ = 0;
};

struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t value = 0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, value) {}
    std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

// One byte per pixel, 0 or 1.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(int w, int h, bool value = false)
        : width(w), height(h), bits(static_cast<std::size_t>(w) * h, value ? 1 : 0) {}
    bool get(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v = true) { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
    std::size_t count() const;
};

struct Rect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    int area() const { return w * h; }
    int right() const { return x + w; }   // exclusive
    int bottom() const { return y + h; }  // exclusive
    double cx() const { return x + w / 2.0; }
    double cy() const { return y + h / 2.0; }
    bool inside(int width, int height) const {
        return w >= 1 && h >= 1 && x >= 0 && y >= 0 && x + w <= width && y + h <= height;
    }
    bool contains_point(double px, double py) const { return px >= x && px < x + w && py >= y && py < y + h; }
    bool strictly_contains(const Rect& o) const {
        return o.x > x && o.y > y && o.right() < right() && o.bottom() < bottom();
    }
    bool overlaps(const Rect& o) const {
        return x < o.right() && o.x < right() && y < o.bottom() && o.y < bottom();
    }
    bool operator==(const Rect&) const = default;
};

Rect intersect(const Rect& a, const Rect& b);
double iou(const Rect& a, const Rect& b);
// Rect of size w x h centred (rounded) on (cx, cy).
Rect centered_rect(double cx, double cy, int w, int h);

// Horizontal run of set pixels [x0, x1] on row y.
struct Run {
    int y = 0;
    int x0 = 0;
    int x1 = 0;
    int length() const { return x1 - x0 + 1; }
};

// A pixel set stored as sorted runs.
struct Region {
    std::vector<Run> runs;
    long area = 0;
    Rect bbox;

    static Region from_pixels(std::span<const std::array<int, 2>> pixels);
    std::vector<std::array<int, 2>> pixels() const;
    void finalize();  // sorts runs, recomputes area and bbox
};

struct RegionMoments {
    double area = 0;
    double cx = 0;
    double cy = 0;
    double mu20 = 0;
    double mu02 = 0;
    double mu11 = 0;
};

struct HueBand {
    double lo = 0;   // degrees
    double hi = 0;   // degrees; lo > hi wraps through 360
    double min_sat = 0.2;
    double min_val = 0.25;

    bool contains_hue(double hue) const {
        return lo <= hi ? (hue >= lo && hue <= hi) : (hue >= lo || hue <= hi);
    }
    bool operator==(const HueBand&) const = default;
};

struct Hsv {
    double h = 0;  // [0, 360)
    double s = 0;  // [0, 1]
    double v = 0;  // [0, 1]
};

Hsv rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b);

// Integer-weighted luma (r*299 + g*587 + b*114) / 1000.
inline std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    return static_cast<std::uint8_t>((r * 299 + g * 587 + b * 114) / 1000);
}
GrayImage to_gray(const Frame& frame);

BinaryMask segment_by_hue(const Frame& frame, const HueBand& band);

long mask_sum_in_rect(const BinaryMask& mask, const Rect& r);

// 8-connected components, largest first.
std::vector<Region> connected_regions(const BinaryMask& mask);

RegionMoments central_moments(const Region& region);

double eccentricity(const RegionMoments& m);

// Minimum Euclidean distance between any pixel of a and any pixel of b.
double boundary_distance(const Region& a, const Region& b);
Region merge_regions(const Region& a, const Region& b);

struct GridDiff {
    int changed_cells = 0;
    double intensity = 0;                 // mean over changed cells
    std::array<double, 100> cell_means{};  // row-major 10x10
};

GridDiff grid_diff(const Frame& prev, const Frame& curr, double cell_change_thresh);
GridDiff grid_diff(const GrayImage& prev, const GrayImage& curr, double cell_change_thresh);

}  // namespace netoas
