#include "netoas/lk_flow.hpp"

#include <algorithm>
#include <cmath>

namespace netoas {

float FloatImage::sample(float x, float y) const {
    x = std::clamp(x, 0.0f, static_cast<float>(width - 1));
    y = std::clamp(y, 0.0f, static_cast<float>(height - 1));
    const int x0 = static_cast<int>(x);
    const int y0 = static_cast<int>(y);
    const int x1 = std::min(x0 + 1, width - 1);
    const int y1 = std::min(y0 + 1, height - 1);
    const float ax = x - x0;
    const float ay = y - y0;
    const float* r0 = &data[static_cast<std::size_t>(y0) * width];
    const float* r1 = &data[static_cast<std::size_t>(y1) * width];
    const float top = r0[x0] + ax * (r0[x1] - r0[x0]);
    const float bot = r1[x0] + ax * (r1[x1] - r1[x0]);
    return top + ay * (bot - top);
}

Pyramid Pyramid::build(const GrayImage& gray, int n_levels) {
    Pyramid p;
    build_into(p, gray, n_levels);
    return p;
}

void Pyramid::build_into(Pyramid& p, const GrayImage& gray, int n_levels) {
    if (p.levels.empty()) p.levels.resize(1);
    FloatImage& base = p.levels[0];
    base.width = gray.width;
    base.height = gray.height;
    base.data.assign(gray.data.begin(), gray.data.end());
    std::size_t used = 1;
    for (int l = 1; l < n_levels; ++l) {
        const FloatImage& src = p.levels[used - 1];
        if (src.width < 8 || src.height < 8) break;
        if (p.levels.size() <= used) p.levels.emplace_back();
        FloatImage& dst = p.levels[used];
        const FloatImage& s = p.levels[used - 1];
        dst.width = s.width / 2;
        dst.height = s.height / 2;
        dst.data.resize(static_cast<std::size_t>(dst.width) * dst.height);
        for (int y = 0; y < dst.height; ++y) {
            const float* a = &s.data[static_cast<std::size_t>(2 * y) * s.width];
            const float* b = a + s.width;
            float* out = &dst.data[static_cast<std::size_t>(y) * dst.width];
            for (int x = 0; x < dst.width; ++x)
                out[x] = 0.25f * (a[2 * x] + a[2 * x + 1] + b[2 * x] + b[2 * x + 1]);
        }
        ++used;
    }
    p.levels.resize(used);
}

namespace {

// Samples a side x side grid starting at (x0, y0) with unit spacing. All samples share one
// fractional offset, so the interior case needs a single set of bilinear weights.
void sample_grid(const FloatImage& img, float x0, float y0, int side, float* out) {
    const float fx = std::floor(x0), fy = std::floor(y0);
    const int ix = static_cast<int>(fx), iy = static_cast<int>(fy);
    if (ix < 0 || iy < 0 || ix + side >= img.width || iy + side >= img.height) {
        for (int v = 0; v < side; ++v)
            for (int u = 0; u < side; ++u) out[v * side + u] = img.sample(x0 + u, y0 + v);
        return;
    }
    const float ax = x0 - fx, ay = y0 - fy;
    const float w00 = (1 - ax) * (1 - ay), w10 = ax * (1 - ay), w01 = (1 - ax) * ay, w11 = ax * ay;
    for (int v = 0; v < side; ++v) {
        const float* r0 = &img.data[static_cast<std::size_t>(iy + v) * img.width + ix];
        const float* r1 = r0 + img.width;
        float* o = out + v * side;
        for (int u = 0; u < side; ++u) o[u] = w00 * r0[u] + w10 * r0[u + 1] + w01 * r1[u] + w11 * r1[u + 1];
    }
}

// Runs the iterative update at one level. `disp` holds the displacement guess in level
// coordinates and is refined in place. Returns false when the point cannot be tracked.
bool lk_level(const FloatImage& I, const FloatImage& J, float px, float py, float& dx, float& dy,
              const LkParams& params, std::vector<float>& patch, std::vector<float>& gx, std::vector<float>& gy) {
    const int r = params.window / 2;
    const int side = params.window + 2;  // one pixel border for central differences
    patch.resize(static_cast<std::size_t>(side) * side + static_cast<std::size_t>(params.window) * params.window);
    sample_grid(I, px - r - 1, py - r - 1, side, patch.data());
    float* warped = patch.data() + static_cast<std::size_t>(side) * side;

    const int n = params.window * params.window;
    gx.resize(n);
    gy.resize(n);
    double gxx = 0, gxy = 0, gyy = 0;
    for (int v = 0; v < params.window; ++v) {
        for (int u = 0; u < params.window; ++u) {
            const std::size_t c = static_cast<std::size_t>(v + 1) * side + (u + 1);
            const float ix = 0.5f * (patch[c + 1] - patch[c - 1]);
            const float iy = 0.5f * (patch[c + side] - patch[c - side]);
            gx[v * params.window + u] = ix;
            gy[v * params.window + u] = iy;
            gxx += ix * ix;
            gxy += ix * iy;
            gyy += iy * iy;
        }
    }
    const double det = gxx * gyy - gxy * gxy;
    const double min_eig = 0.5 * (gxx + gyy - std::sqrt((gxx - gyy) * (gxx - gyy) + 4 * gxy * gxy)) / n;
    const bool conditioned = min_eig >= params.min_eigen && det > 1e-12;

    for (int it = 0; it < params.max_iterations; ++it) {
        double bx = 0, by = 0;
        sample_grid(J, px + dx - r, py + dy - r, params.window, warped);
        for (int v = 0; v < params.window; ++v) {
            for (int u = 0; u < params.window; ++u) {
                const float iv = patch[static_cast<std::size_t>(v + 1) * side + (u + 1)];
                const float jv = warped[v * params.window + u];
                const float e = iv - jv;
                bx += e * gx[v * params.window + u];
                by += e * gy[v * params.window + u];
            }
        }
        if (bx == 0.0 && by == 0.0) return true;  // exact match, nothing to solve
        if (!conditioned) return false;
        const double ux = (gyy * bx - gxy * by) / det;
        const double uy = (gxx * by - gxy * bx) / det;
        dx += static_cast<float>(ux);
        dy += static_cast<float>(uy);
        if (!std::isfinite(dx) || !std::isfinite(dy)) return false;
        if (ux * ux + uy * uy < params.epsilon * params.epsilon) break;
    }
    return true;
}

}  // namespace

std::vector<FlowPoint> lk_track(const Pyramid& prev, const Pyramid& next, std::span<const std::array<float, 2>> points,
                                const LkParams& params) {
    std::vector<FlowPoint> out(points.size());
    const int n_levels = static_cast<int>(std::min(prev.levels.size(), next.levels.size()));
    std::vector<float> patch, gx, gy;
    for (std::size_t i = 0; i < points.size(); ++i) {
        float gxl = 0, gyl = 0;  // displacement guess at current level
        bool ok = true;
        for (int l = n_levels - 1; l >= 0 && ok; --l) {
            const float scale = 1.0f / static_cast<float>(1 << l);
            float dx = gxl, dy = gyl;
            ok = lk_level(prev.levels[l], next.levels[l], points[i][0] * scale, points[i][1] * scale, dx, dy, params,
                          patch, gx, gy);
            if (l > 0) {
                gxl = 2.0f * dx;
                gyl = 2.0f * dy;
            } else {
                gxl = dx;
                gyl = dy;
            }
        }
        const float nx = points[i][0] + gxl;
        const float ny = points[i][1] + gyl;
        out[i].x = nx;
        out[i].y = ny;
        out[i].ok = ok && nx >= 0 && ny >= 0 && nx <= prev.width() - 1 && ny <= prev.height() - 1;
    }
    return out;
}

}  // namespace netoas
