#include "bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>

namespace netoas::testkit {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::string bench_persona(std::uint32_t seed) { return seed <= 10 ? "novice" : "improved"; }

BenchRun run_bench(const std::string& persona, std::uint32_t seed, int placements, int fps) {
    const auto t0 = std::chrono::steady_clock::now();
    const ScriptedSession s(Persona::from_name(persona), placements, fps, seed);
    const CalibrationProfile calib = calibrate(s.reference_frame(), s.seeds());
    SessionEngine engine(calib, fps, seed);

    BenchRun run;
    run.seed = seed;
    run.persona = persona;
    run.truth = s.truth();
    run.status.assign(s.size(), -1);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const Frame f = s.frame(i);
        const auto p0 = std::chrono::steady_clock::now();
        auto out = engine.process(f);
        run.process_seconds += seconds_since(p0);
        if (out.fsm_ready) run.status[i] = static_cast<int>(out.state.status);
        for (auto& m : out.feedback) run.feedback.push_back(std::move(m));
    }
    engine.finish();
    run.log = engine.log();
    run.features = extract_features(run.log, calib.jerk_curvature_thresh);
    run.total_seconds = seconds_since(t0);
    return run;
}

StatusAgreement status_agreement(const BenchRun& run, int margin) {
    const auto& frames = run.truth.frames;
    const std::size_t n = frames.size();
    std::vector<bool> skip(n, false);
    for (std::size_t i = 1; i < n; ++i) {
        if (frames[i].status == frames[i - 1].status) continue;
        for (int d = -margin; d <= margin; ++d) {
            const long j = static_cast<long>(i) + d;
            if (j >= 0 && j < static_cast<long>(n)) skip[j] = true;
        }
    }
    StatusAgreement a;
    for (std::size_t i = 0; i < n; ++i) {
        if (skip[i]) continue;
        ++a.counted;
        if (run.status[i] == static_cast<int>(frames[i].status)) ++a.matched;
    }
    return a;
}

MatchCounts match_frames(const std::vector<std::uint64_t>& truth, const std::vector<std::uint64_t>& detected,
                         int tolerance) {
    MatchCounts c;
    c.truth = truth.size();
    c.detected = detected.size();
    std::vector<bool> used(detected.size(), false);
    for (const auto t : truth) {
        std::size_t best = detected.size();
        long best_gap = tolerance + 1;
        for (std::size_t j = 0; j < detected.size(); ++j) {
            if (used[j]) continue;
            const long gap = std::labs(static_cast<long>(detected[j]) - static_cast<long>(t));
            if (gap < best_gap) {
                best_gap = gap;
                best = j;
            }
        }
        if (best < detected.size()) {
            used[best] = true;
            ++c.matched;
        }
    }
    return c;
}

std::vector<std::uint64_t> truth_frames(const GroundTruth& gt, EventKind kind) {
    std::vector<std::uint64_t> out;
    for (const auto& e : gt.events)
        if (e.kind == kind) out.push_back(e.seq);
    return out;
}

std::vector<std::uint64_t> event_frames(const ActivityLog& log, EventKind kind) {
    std::vector<std::uint64_t> out;
    for (const auto& e : log.events)
        if (e.kind == kind) out.push_back(e.frame_seq);
    return out;
}

MatchCounts match_events(const BenchRun& run, EventKind kind, int tolerance) {
    return match_frames(truth_frames(run.truth, kind), event_frames(run.log, kind), tolerance);
}

}  // namespace netoas::testkit
