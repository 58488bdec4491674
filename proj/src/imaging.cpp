#include "netoas/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace netoas {

Frame::Frame(int width, int height, std::uint64_t seq, std::int64_t timestamp_ms)
    : Frame(width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                                      std::max(height, 0) * 3),
            seq, timestamp_ms) {}

Frame::Frame(int width, int height, std::vector<std::uint8_t> pixels, std::uint64_t seq,
             std::int64_t timestamp_ms)
    : width_(width), height_(height), pixels_(std::move(pixels)), seq_(seq), timestamp_ms_(timestamp_ms) {
    if (width < kMinSide || height < kMinSide)
        throw ContractViolation("frame must be at least 16x16, got " + std::to_string(width) + "x" +
                                std::to_string(height));
    if (pixels_.size() != static_cast<std::size_t>(width) * height * 3)
        throw ContractViolation("pixel buffer length does not match width*height*3");
}

void Frame::fill(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    for (std::size_t i = 0; i < pixels_.size(); i += 3) {
        pixels_[i] = r;
        pixels_[i + 1] = g;
        pixels_[i + 2] = b;
    }
}

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

Rect intersect(const Rect& a, const Rect& b) {
    const int x0 = std::max(a.x, b.x);
    const int y0 = std::max(a.y, b.y);
    const int x1 = std::min(a.right(), b.right());
    const int y1 = std::min(a.bottom(), b.bottom());
    if (x1 <= x0 || y1 <= y0) return Rect{x0, y0, 0, 0};
    return Rect{x0, y0, x1 - x0, y1 - y0};
}

double iou(const Rect& a, const Rect& b) {
    const Rect i = intersect(a, b);
    const double inter = static_cast<double>(i.w) * i.h;
    const double uni = static_cast<double>(a.area()) + b.area() - inter;
    return uni > 0 ? inter / uni : 0.0;
}

Rect centered_rect(double cx, double cy, int w, int h) {
    return Rect{static_cast<int>(std::lround(cx - w / 2.0)), static_cast<int>(std::lround(cy - h / 2.0)), w, h};
}

Region Region::from_pixels(std::span<const std::array<int, 2>> pixels) {
    std::vector<std::array<int, 2>> sorted(pixels.begin(), pixels.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        return a[1] != b[1] ? a[1] < b[1] : a[0] < b[0];
    });
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    Region r;
    for (const auto& p : sorted) {
        if (!r.runs.empty() && r.runs.back().y == p[1] && r.runs.back().x1 + 1 == p[0])
            r.runs.back().x1 = p[0];
        else
            r.runs.push_back(Run{p[1], p[0], p[0]});
    }
    r.finalize();
    return r;
}

std::vector<std::array<int, 2>> Region::pixels() const {
    std::vector<std::array<int, 2>> out;
    out.reserve(static_cast<std::size_t>(area));
    for (const auto& run : runs)
        for (int x = run.x0; x <= run.x1; ++x) out.push_back({x, run.y});
    return out;
}

void Region::finalize() {
    std::sort(runs.begin(), runs.end(), [](const Run& a, const Run& b) {
        return a.y != b.y ? a.y < b.y : a.x0 < b.x0;
    });
    area = 0;
    if (runs.empty()) {
        bbox = Rect{};
        return;
    }
    int x0 = std::numeric_limits<int>::max(), x1 = std::numeric_limits<int>::min();
    for (const auto& run : runs) {
        area += run.length();
        x0 = std::min(x0, run.x0);
        x1 = std::max(x1, run.x1);
    }
    bbox = Rect{x0, runs.front().y, x1 - x0 + 1, runs.back().y - runs.front().y + 1};
}

Hsv rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const int mx = std::max({r, g, b});
    const int mn = std::min({r, g, b});
    Hsv out;
    out.v = mx / 255.0;
    out.s = mx == 0 ? 0.0 : static_cast<double>(mx - mn) / mx;
    const int d = mx - mn;
    if (d == 0) {
        out.h = 0;
    } else if (mx == r) {
        out.h = 60.0 * (g - b) / d;
        if (out.h < 0) out.h += 360.0;
    } else if (mx == g) {
        out.h = 60.0 * (b - r) / d + 120.0;
    } else {
        out.h = 60.0 * (r - g) / d + 240.0;
    }
    return out;
}

GrayImage to_gray(const Frame& frame) {
    GrayImage g(frame.width(), frame.height());
    const auto px = frame.pixels();
    const std::size_t n = g.data.size();
    for (std::size_t i = 0; i < n; ++i) g.data[i] = luma(px[3 * i], px[3 * i + 1], px[3 * i + 2]);
    return g;
}

BinaryMask segment_by_hue(const Frame& frame, const HueBand& band) {
    BinaryMask mask(frame.width(), frame.height());
    // Per-max lookup tables reproduce the rgb_to_hsv comparisons without a division per pixel.
    std::array<bool, 256> val_ok{};
    std::array<int, 256> min_delta{};
    for (int mx = 0; mx < 256; ++mx) {
        val_ok[mx] = mx / 255.0 >= band.min_val;
        int d = 0;
        while (d <= mx && !((mx == 0 ? 0.0 : static_cast<double>(d) / mx) >= band.min_sat)) ++d;
        min_delta[mx] = d;  // d > mx means never saturated enough
    }
    const auto px = frame.pixels();
    const std::size_t n = mask.bits.size();
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t r = px[3 * i], g = px[3 * i + 1], b = px[3 * i + 2];
        const int mx = std::max({r, g, b});
        if (!val_ok[mx]) continue;
        const int mn = std::min({r, g, b});
        if (mx - mn < min_delta[mx]) continue;
        if (band.contains_hue(rgb_to_hsv(r, g, b).h)) mask.bits[i] = 1;
    }
    return mask;
}

long mask_sum_in_rect(const BinaryMask& mask, const Rect& r) {
    if (!r.inside(mask.width, mask.height))
        throw ContractViolation("rect outside mask bounds");
    long sum = 0;
    for (int y = r.y; y < r.bottom(); ++y) {
        const std::uint8_t* row = &mask.bits[static_cast<std::size_t>(y) * mask.width];
        for (int x = r.x; x < r.right(); ++x) sum += row[x];
    }
    return sum;
}

namespace {

int find_root(std::vector<int>& parent, int i) {
    while (parent[i] != i) {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    return i;
}

}  // namespace

std::vector<Region> connected_regions(const BinaryMask& mask) {
    std::vector<Run> runs;
    std::vector<std::size_t> row_start(static_cast<std::size_t>(mask.height) + 1, 0);
    for (int y = 0; y < mask.height; ++y) {
        row_start[y] = runs.size();
        const std::uint8_t* row = &mask.bits[static_cast<std::size_t>(y) * mask.width];
        const std::uint8_t* end = row + mask.width;
        const std::uint8_t* p = row;
        while (p < end) {
            p = std::find(p, end, std::uint8_t{1});
            if (p == end) break;
            const std::uint8_t* q = std::find(p, end, std::uint8_t{0});
            runs.push_back(Run{y, static_cast<int>(p - row), static_cast<int>(q - row) - 1});
            p = q;
        }
    }
    row_start[mask.height] = runs.size();
    if (runs.empty()) return {};

    std::vector<int> parent(runs.size());
    std::iota(parent.begin(), parent.end(), 0);
    for (int y = 1; y < mask.height; ++y) {
        std::size_t a = row_start[y - 1];
        const std::size_t a_end = row_start[y];
        for (std::size_t i = row_start[y]; i < row_start[y + 1]; ++i) {
            const Run& cur = runs[i];
            // 8-connectivity: runs touch if their x ranges overlap after widening by one.
            while (a < a_end && runs[a].x1 < cur.x0 - 1) ++a;
            for (std::size_t j = a; j < a_end && runs[j].x0 <= cur.x1 + 1; ++j) {
                const int ri = find_root(parent, static_cast<int>(i));
                const int rj = find_root(parent, static_cast<int>(j));
                if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
            }
        }
    }

    std::vector<int> label(runs.size(), -1);
    std::vector<Region> regions;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const int root = find_root(parent, static_cast<int>(i));
        if (label[root] < 0) {
            label[root] = static_cast<int>(regions.size());
            regions.emplace_back();
        }
        regions[label[root]].runs.push_back(runs[i]);
    }
    for (auto& r : regions) r.finalize();
    std::stable_sort(regions.begin(), regions.end(),
                     [](const Region& a, const Region& b) { return a.area > b.area; });
    return regions;
}

RegionMoments central_moments(const Region& region) {
    if (region.runs.empty() || region.area <= 0) throw ContractViolation("central moments of an empty region");
    // Exact integer sums in coordinates local to the bounding box.
    const long ox = region.bbox.x, oy = region.bbox.y;
    __int128 n = 0, sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    auto s1 = [](__int128 k) { return k * (k + 1) / 2; };
    auto s2 = [](__int128 k) { return k * (k + 1) * (2 * k + 1) / 6; };
    for (const auto& run : region.runs) {
        const __int128 a = run.x0 - ox, b = run.x1 - ox, y = run.y - oy;
        const __int128 len = b - a + 1;
        const __int128 rx = s1(b) - (a > 0 ? s1(a - 1) : 0);
        const __int128 rxx = s2(b) - (a > 0 ? s2(a - 1) : 0);
        n += len;
        sx += rx;
        sxx += rxx;
        sy += len * y;
        syy += len * y * y;
        sxy += rx * y;
    }
    const __int128 num20 = n * sxx - sx * sx;
    const __int128 num02 = n * syy - sy * sy;
    const __int128 num11 = n * sxy - sx * sy;
    const double dn = static_cast<double>(n);
    RegionMoments m;
    m.area = dn;
    m.cx = static_cast<double>(ox) + static_cast<double>(sx) / dn;
    m.cy = static_cast<double>(oy) + static_cast<double>(sy) / dn;
    m.mu20 = static_cast<double>(num20) / dn;
    m.mu02 = static_cast<double>(num02) / dn;
    m.mu11 = static_cast<double>(num11) / dn;
    // Cauchy-Schwarz holds exactly on the integers; keep it exact after rounding.
    const __int128 det = num20 * num02 - num11 * num11;
    if (det == 0 || m.mu11 * m.mu11 > m.mu20 * m.mu02)
        m.mu11 = std::copysign(std::sqrt(m.mu20 * m.mu02), m.mu11);
    return m;
}

double eccentricity(const RegionMoments& m) {
    constexpr double kEps = 1e-9;
    const double trace = m.mu20 + m.mu02;
    const double disc = std::sqrt((m.mu20 - m.mu02) * (m.mu20 - m.mu02) + 4.0 * m.mu11 * m.mu11);
    const double det = m.mu20 * m.mu02 - m.mu11 * m.mu11;
    // trace - disc, rewritten as 4*det / (trace + disc) to avoid cancellation.
    const double denom = (trace + disc) > 0 ? 4.0 * det / (trace + disc) : 0.0;
    if (!(denom > kEps)) throw DegenerateRegion("second-moment matrix is singular");
    return (trace + disc) / denom;
}

double boundary_distance(const Region& a, const Region& b) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& ra : a.runs) {
        for (const auto& rb : b.runs) {
            const double dy = std::abs(ra.y - rb.y);
            if (dy >= best) continue;
            const int gap = std::max(ra.x0, rb.x0) - std::min(ra.x1, rb.x1);
            const double dx = gap > 0 ? gap : 0;
            best = std::min(best, std::hypot(dx, dy));
        }
    }
    return best;
}

Region merge_regions(const Region& a, const Region& b) {
    Region out;
    out.runs = a.runs;
    out.runs.insert(out.runs.end(), b.runs.begin(), b.runs.end());
    out.finalize();
    return out;
}

GridDiff grid_diff(const GrayImage& prev, const GrayImage& curr, double cell_change_thresh) {
    if (prev.width != curr.width || prev.height != curr.height)
        throw ContractViolation("grid_diff: frame dimensions differ");
    GridDiff out;
    const int w = curr.width, h = curr.height;
    std::array<long, 100> sums{};
    std::array<int, 11> xb{}, yb{};
    for (int i = 0; i <= 10; ++i) {
        xb[i] = i * w / 10;
        yb[i] = i * h / 10;
    }
    for (int gy = 0; gy < 10; ++gy) {
        for (int y = yb[gy]; y < yb[gy + 1]; ++y) {
            const std::uint8_t* pa = &prev.data[static_cast<std::size_t>(y) * w];
            const std::uint8_t* pb = &curr.data[static_cast<std::size_t>(y) * w];
            for (int gx = 0; gx < 10; ++gx) {
                long s = 0;
                for (int x = xb[gx]; x < xb[gx + 1]; ++x) s += std::abs(static_cast<int>(pa[x]) - pb[x]);
                sums[gy * 10 + gx] += s;
            }
        }
    }
    double total = 0;
    for (int gy = 0; gy < 10; ++gy) {
        for (int gx = 0; gx < 10; ++gx) {
            const int k = gy * 10 + gx;
            const long npx = static_cast<long>(xb[gx + 1] - xb[gx]) * (yb[gy + 1] - yb[gy]);
            out.cell_means[k] = npx > 0 ? static_cast<double>(sums[k]) / npx : 0.0;
            if (out.cell_means[k] >= cell_change_thresh) {
                ++out.changed_cells;
                total += out.cell_means[k];
            }
        }
    }
    out.intensity = out.changed_cells > 0 ? total / out.changed_cells : 0.0;
    return out;
}

GridDiff grid_diff(const Frame& prev, const Frame& curr, double cell_change_thresh) {
    if (prev.width() != curr.width() || prev.height() != curr.height())
        throw ContractViolation("grid_diff: frame dimensions differ");
    return grid_diff(to_gray(prev), to_gray(curr), cell_change_thresh);
}

}  // namespace netoas
