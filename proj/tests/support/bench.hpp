#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "netoas/session.hpp"

namespace netoas::testkit {

// One scripted session pushed through the full engine, with the truth kept alongside.
struct BenchRun {
    std::uint32_t seed = 0;
    std::string persona;
    GroundTruth truth;
    std::vector<int> status;  // per frame; -1 before the state machine starts
    ActivityLog log;
    std::vector<FeedbackMessage> feedback;
    FeatureVector features;
    double process_seconds = 0;
    double total_seconds = 0;
};

BenchRun run_bench(const std::string& persona, std::uint32_t seed, int placements = 5, int fps = 50);

// Seeds 1-10 novice, 11-20 improved.
std::string bench_persona(std::uint32_t seed);

struct StatusAgreement {
    std::size_t matched = 0;
    std::size_t counted = 0;
    double ratio() const { return counted ? static_cast<double>(matched) / counted : 1.0; }
};

// Frames within `margin` of a ground-truth transition are not counted.
StatusAgreement status_agreement(const BenchRun& run, int margin = 2);

struct MatchCounts {
    std::size_t truth = 0;
    std::size_t detected = 0;
    std::size_t matched = 0;
    double precision() const { return detected ? static_cast<double>(matched) / detected : 1.0; }
    double recall() const { return truth ? static_cast<double>(matched) / truth : 1.0; }
};

// Greedy one-to-one matching of frame indices within +-tolerance.
MatchCounts match_frames(const std::vector<std::uint64_t>& truth, const std::vector<std::uint64_t>& detected,
                         int tolerance);
MatchCounts match_events(const BenchRun& run, EventKind kind, int tolerance = 3);

std::vector<std::uint64_t> truth_frames(const GroundTruth& gt, EventKind kind);
std::vector<std::uint64_t> event_frames(const ActivityLog& log, EventKind kind);

}  // namespace netoas::testkit
