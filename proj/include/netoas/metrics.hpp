#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace netoas {

struct TrackPoint {
    std::uint64_t seq = 0;
    double x = 0;
    double y = 0;
};

using TrackSegment = std::vector<TrackPoint>;

// Population std of per-frame speed; throws InsufficientData below 3 samples.
double smoothness(std::span<const TrackPoint> seg);

// Distinct pixels of the 8-connected polyline through the rounded samples.
long arc_length(std::span<const TrackPoint> seg);
std::vector<std::array<int, 2>> rasterize_polyline(std::span<const TrackPoint> seg);

inline constexpr double kMinSpeedSq = 1e-6;

// Curvature per sample; throws InsufficientData below 5 samples.
std::vector<double> curvature_series(std::span<const TrackPoint> seg);

// Excursions are maximal runs with kappa >= kJerkFloor; one counts as a jerk when its peak reaches thresh.
// The fixed floor keeps the count nonincreasing in thresh.
inline constexpr double kJerkFloor = 0.1;

struct JerkExcursion {
    std::size_t start = 0;  // first index at or above the floor
    std::size_t peak_index = 0;
    double peak = 0;
};

std::vector<JerkExcursion> jerk_excursions(std::span<const double> kappas, double thresh);
int count_jerks(std::span<const double> kappas, double thresh);

}  // namespace netoas
