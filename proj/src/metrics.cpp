#include "netoas/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "netoas/errors.hpp"

namespace netoas {

namespace {

void require_increasing(std::span<const TrackPoint> seg) {
    for (std::size_t i = 1; i < seg.size(); ++i)
        if (seg[i].seq <= seg[i - 1].seq) throw ContractViolation("track samples must have increasing seq");
}

double dt(const TrackPoint& a, const TrackPoint& b) { return static_cast<double>(b.seq - a.seq); }

}  // namespace

double smoothness(std::span<const TrackPoint> seg) {
    if (seg.size() < 3) throw InsufficientData("smoothness needs at least 3 samples");
    require_increasing(seg);
    std::vector<double> v;
    v.reserve(seg.size() - 1);
    for (std::size_t i = 0; i + 1 < seg.size(); ++i)
        v.push_back(std::hypot(seg[i + 1].x - seg[i].x, seg[i + 1].y - seg[i].y) / dt(seg[i], seg[i + 1]));
    double mean = 0;
    for (double s : v) mean += s;
    mean /= v.size();
    double var = 0;
    for (double s : v) var += (s - mean) * (s - mean);
    return std::sqrt(var / v.size());
}

std::vector<std::array<int, 2>> rasterize_polyline(std::span<const TrackPoint> seg) {
    std::vector<std::array<int, 2>> px;
    if (seg.empty()) return px;
    auto rnd = [](double v) { return static_cast<int>(std::lround(v)); };
    px.push_back({rnd(seg[0].x), rnd(seg[0].y)});
    for (std::size_t i = 1; i < seg.size(); ++i) {
        int x0 = rnd(seg[i - 1].x), y0 = rnd(seg[i - 1].y);
        const int x1 = rnd(seg[i].x), y1 = rnd(seg[i].y);
        const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
        const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
        int err = dx + dy;
        while (x0 != x1 || y0 != y1) {
            const int e2 = 2 * err;
            if (e2 >= dy) {
                err += dy;
                x0 += sx;
            }
            if (e2 <= dx) {
                err += dx;
                y0 += sy;
            }
            px.push_back({x0, y0});
        }
    }
    std::sort(px.begin(), px.end());
    px.erase(std::unique(px.begin(), px.end()), px.end());
    return px;
}

long arc_length(std::span<const TrackPoint> seg) {
    if (seg.empty()) throw InsufficientData("arc length needs at least one sample");
    return static_cast<long>(rasterize_polyline(seg).size());
}

std::vector<double> curvature_series(std::span<const TrackPoint> seg) {
    const std::size_t n = seg.size();
    if (n < 5) throw InsufficientData("curvature needs at least 5 samples");
    require_increasing(seg);
    std::vector<double> k(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        // three-point stencil, shifted inward at the ends
        const std::size_t c = std::clamp<std::size_t>(i, 1, n - 2);
        const TrackPoint &a = seg[c - 1], &b = seg[c], &d = seg[c + 1];
        const double h1 = dt(a, b), h2 = dt(b, d);
        double xd, yd;
        if (i == c) {
            xd = (d.x - a.x) / (h1 + h2);
            yd = (d.y - a.y) / (h1 + h2);
        } else if (i == 0) {
            xd = (b.x - a.x) / h1;
            yd = (b.y - a.y) / h1;
        } else {
            xd = (d.x - b.x) / h2;
            yd = (d.y - b.y) / h2;
        }
        const double xdd = 2.0 * ((d.x - b.x) / h2 - (b.x - a.x) / h1) / (h1 + h2);
        const double ydd = 2.0 * ((d.y - b.y) / h2 - (b.y - a.y) / h1) / (h1 + h2);
        const double sp = xd * xd + yd * yd;
        if (sp < kMinSpeedSq) continue;
        k[i] = std::abs(xd * ydd - yd * xdd) / std::pow(sp, 1.5);
    }
    return k;
}

std::vector<JerkExcursion> jerk_excursions(std::span<const double> kappas, double thresh) {
    std::vector<JerkExcursion> out;
    std::size_t i = 0;
    while (i < kappas.size()) {
        if (kappas[i] < kJerkFloor) {
            ++i;
            continue;
        }
        JerkExcursion e{i, i, kappas[i]};
        for (; i < kappas.size() && kappas[i] >= kJerkFloor; ++i)
            if (kappas[i] > e.peak) {
                e.peak = kappas[i];
                e.peak_index = i;
            }
        if (e.peak >= thresh) out.push_back(e);
    }
    return out;
}

int count_jerks(std::span<const double> kappas, double thresh) {
    return static_cast<int>(jerk_excursions(kappas, thresh).size());
}

}  // namespace netoas
