#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "netoas/activity_fsm.hpp"
#include "netoas/calibration.hpp"
#include "netoas/tracker.hpp"

namespace netoas {

inline constexpr int kHitRefractoryFrames = 10;
inline constexpr int kDropPersistFrames = 3;
inline constexpr double kMergeGapPx = 6.0;
inline constexpr double kTugSelectDiameters = 1.5;

// Stateless hit rule on a consecutive pair.
std::optional<EventRecord> detect_hit(const GrayImage& prev, const GrayImage& curr, const CalibrationProfile& calib,
                                      std::uint64_t seq = 0);
std::optional<EventRecord> detect_hit(const Frame& prev, const Frame& curr, const CalibrationProfile& calib);

class HitDetector {
public:
    explicit HitDetector(int refractory = kHitRefractoryFrames) : refractory_(refractory) {}
    std::optional<EventRecord> update(const GrayImage& prev, const GrayImage& curr, const CalibrationProfile& calib,
                                      std::uint64_t seq);

private:
    int refractory_;
    std::optional<std::uint64_t> last_hit_;
};

// Eccentricity of the largest ring region near the holder peg merged with its close neighbours.
// Returns nullopt when nothing qualifies or the merged region is degenerate.
std::optional<double> ring_eccentricity(const std::vector<Region>& regions, const CalibrationProfile& calib, int peg,
                                        double merge_gap = kMergeGapPx);

std::optional<EventRecord> detect_tug(const ActivityState& state, const std::vector<Region>& regions,
                                      const CalibrationProfile& calib, std::uint64_t seq = 0);
std::optional<EventRecord> detect_tug(const ActivityState& state, const BinaryMask& mask,
                                      const CalibrationProfile& calib, std::uint64_t seq = 0);

// Emits once per excursion above the threshold.
class TugDetector {
public:
    std::optional<EventRecord> update(const ActivityState& state, const std::vector<Region>& regions,
                                      const CalibrationProfile& calib, std::uint64_t seq);

private:
    bool above_ = false;
};

// Distance from (x, y) to the nearest pixel of the region.
double point_region_distance(double x, double y, const Region& region);

// Reports the first frame of a run of kDropPersistFrames frames over the threshold; fires once per run.
class DropDetector {
public:
    explicit DropDetector(int persist = kDropPersistFrames) : persist_(persist) {}
    std::optional<EventRecord> update(const ActivityState& state, const TrackEstimate& tool,
                                      const std::vector<Region>& regions, const CalibrationProfile& calib,
                                      std::uint64_t seq);

private:
    int persist_;
    int run_ = 0;
    std::uint64_t onset_ = 0;
    double onset_distance_ = 0;
};

}  // namespace netoas
