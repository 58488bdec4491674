#pragma once

#include <array>
#include <span>
#include <vector>

#include "netoas/imaging.hpp"

namespace netoas {

struct FloatImage {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    // Bilinear sample with border replication.
    float sample(float x, float y) const;
};

// Level 0 is full resolution; each further level halves both sides (2x2 box average).
struct Pyramid {
    std::vector<FloatImage> levels;

    static Pyramid build(const GrayImage& gray, int n_levels);
    static void build_into(Pyramid& p, const GrayImage& gray, int n_levels);
    int width() const { return levels.empty() ? 0 : levels.front().width; }
    int height() const { return levels.empty() ? 0 : levels.front().height; }
};

struct LkParams {
    int levels = 3;
    int window = 11;          // odd side length
    int max_iterations = 20;
    double epsilon = 0.01;    // pixels
    double min_eigen = 1e-2;  // per-pixel minimum eigenvalue of the gradient matrix
};

struct FlowPoint {
    float x = 0;
    float y = 0;
    bool ok = false;
};

// Tracks points from `prev` into `next` with coarse-to-fine Lucas-Kanade.
std::vector<FlowPoint> lk_track(const Pyramid& prev, const Pyramid& next, std::span<const std::array<float, 2>> points,
                                const LkParams& params);

}  // namespace netoas
