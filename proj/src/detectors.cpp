#include "netoas/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace netoas {

std::optional<EventRecord> detect_hit(const GrayImage& prev, const GrayImage& curr, const CalibrationProfile& calib,
                                      std::uint64_t seq) {
    const GridDiff g = grid_diff(prev, curr, calib.hit_cell_thresh);
    if (g.changed_cells < calib.hit_cell_min) return std::nullopt;
    return EventRecord{EventKind::Hit, seq, static_cast<double>(g.changed_cells), g.intensity};
}

std::optional<EventRecord> detect_hit(const Frame& prev, const Frame& curr, const CalibrationProfile& calib) {
    return detect_hit(to_gray(prev), to_gray(curr), calib, curr.seq());
}

std::optional<EventRecord> HitDetector::update(const GrayImage& prev, const GrayImage& curr,
                                               const CalibrationProfile& calib, std::uint64_t seq) {
    auto ev = detect_hit(prev, curr, calib, seq);
    if (!ev) return std::nullopt;
    if (last_hit_ && seq - *last_hit_ < static_cast<std::uint64_t>(refractory_)) return std::nullopt;
    last_hit_ = seq;
    return ev;
}

namespace {

void region_centroid(const Region& r, double& cx, double& cy) {
    double sx = 0, sy = 0;
    for (const auto& run : r.runs) {
        const double n = run.length();
        sx += n * (run.x0 + run.x1) / 2.0;
        sy += n * run.y;
    }
    cx = sx / r.area;
    cy = sy / r.area;
}

}  // namespace

std::optional<double> ring_eccentricity(const std::vector<Region>& regions, const CalibrationProfile& calib, int peg,
                                        double merge_gap) {
    const Rect& big = calib.big_box(peg);
    const double reach = kTugSelectDiameters * calib.ring_diameter_px;
    std::vector<const Region*> near;
    for (const auto& r : regions) {
        double cx, cy;
        region_centroid(r, cx, cy);
        if (std::hypot(cx - big.cx(), cy - big.cy()) <= reach) near.push_back(&r);
    }
    if (near.empty()) return std::nullopt;
    // regions arrive largest first, so near[0] is the largest candidate
    Region merged = *near.front();
    for (std::size_t i = 1; i < near.size(); ++i)
        if (boundary_distance(*near.front(), *near[i]) <= merge_gap) merged = merge_regions(merged, *near[i]);
    try {
        return eccentricity(central_moments(merged));
    } catch (const DegenerateRegion&) {
        return std::nullopt;
    }
}

std::optional<EventRecord> detect_tug(const ActivityState& state, const std::vector<Region>& regions,
                                      const CalibrationProfile& calib, std::uint64_t seq) {
    if (state.status == Status::Moving || !state.ring_id) return std::nullopt;
    const auto ecc = ring_eccentricity(regions, calib, *state.ring_id);
    if (!ecc || *ecc < calib.tug_ecc_thresh) return std::nullopt;
    return EventRecord{EventKind::Tug, seq, *ecc, 0};
}

std::optional<EventRecord> detect_tug(const ActivityState& state, const BinaryMask& mask,
                                      const CalibrationProfile& calib, std::uint64_t seq) {
    if (state.status == Status::Moving) return std::nullopt;
    return detect_tug(state, connected_regions(mask), calib, seq);
}

std::optional<EventRecord> TugDetector::update(const ActivityState& state, const std::vector<Region>& regions,
                                               const CalibrationProfile& calib, std::uint64_t seq) {
    auto ev = detect_tug(state, regions, calib, seq);
    const bool was = above_;
    above_ = ev.has_value();
    if (ev && !was) return ev;
    return std::nullopt;
}

double point_region_distance(double x, double y, const Region& region) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& run : region.runs) {
        const double dy = run.y - y;
        if (dy * dy >= best * best) continue;
        const double nx = std::clamp(x, static_cast<double>(run.x0), static_cast<double>(run.x1));
        best = std::min(best, std::hypot(nx - x, dy));
    }
    return best;
}

std::optional<EventRecord> DropDetector::update(const ActivityState& state, const TrackEstimate& tool,
                                                const std::vector<Region>& regions, const CalibrationProfile& calib,
                                                std::uint64_t seq) {
    if (state.status != Status::Moving || !tool.valid || regions.empty()) {
        run_ = 0;
        return std::nullopt;
    }
    const double d = point_region_distance(tool.cx, tool.cy, regions.front());
    if (d <= calib.drop_dist_thresh) {
        run_ = 0;
        return std::nullopt;
    }
    if (run_ == 0) {
        onset_ = seq;
        onset_distance_ = d;
    }
    if (++run_ == persist_) return EventRecord{EventKind::Drop, onset_, onset_distance_, d};
    return std::nullopt;
}

}  // namespace netoas
