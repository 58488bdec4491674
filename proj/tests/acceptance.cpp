// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <unistd.h>

#include "bench.hpp"
#include "netoas/metrics.hpp"

using namespace netoas;
using testkit::BenchRun;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
    if (!ok) ++failures;
}

std::string fmt(double v, int prec = 3) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

Region raster_ellipse(double a, double b, double theta) {
    std::vector<std::array<int, 2>> px;
    const double c = std::cos(theta), s = std::sin(theta);
    const int r = static_cast<int>(std::ceil(std::max(a, b))) + 1;
    for (int y = -r; y <= r; ++y)
        for (int x = -r; x <= r; ++x) {
            const double u = c * x + s * y, v = -s * x + c * y;
            if ((u * u) / (a * a) + (v * v) / (b * b) <= 1.0) px.push_back({x + 100, y + 100});
        }
    return Region::from_pixels(px);
}

void eccentricity_analytics() {
    const double disk = eccentricity(central_moments(raster_ellipse(20, 20, 0)));
    const double ell = eccentricity(central_moments(raster_ellipse(40, 20, 0)));
    double worst = 0;
    for (double deg : {15.0, 45.0, 90.0}) {
        const double e = eccentricity(central_moments(raster_ellipse(40, 20, deg * std::numbers::pi / 180)));
        worst = std::max(worst, std::abs(e - ell) / ell);
    }
    const bool ok = std::abs(disk - 1.0) <= 0.02 && std::abs(ell - 4.0) <= 0.2 && worst <= 0.02;
    report(ok, "eccentricity analytics",
           "disk " + fmt(disk, 4) + ", ellipse " + fmt(ell, 4) + ", worst rotation change " + fmt(100 * worst, 3) + "%");
}

void curvature_analytics() {
    TrackSegment line;
    for (int i = 0; i < 50; ++i) line.push_back({static_cast<std::uint64_t>(i + 1), 3.0 + 2.5 * i, 7.0 - 1.5 * i});
    double line_max = 0;
    for (double k : curvature_series(line)) line_max = std::max(line_max, std::abs(k));

    TrackSegment circle;
    for (int i = 0; i < 180; ++i) {
        const double t = i * 2.0 * std::numbers::pi / 180;
        circle.push_back({static_cast<std::uint64_t>(i + 1), 200 + 50 * std::cos(t), 200 + 50 * std::sin(t)});
    }
    const auto k = curvature_series(circle);
    double worst = 0;
    for (std::size_t i = 1; i + 1 < k.size(); ++i) worst = std::max(worst, std::abs(k[i] - 0.02) / 0.02);
    report(line_max <= 1e-9 && worst <= 0.05, "curvature analytics",
           "line max |k| " + fmt(line_max) + ", circle worst interior error " + fmt(100 * worst) + "%");
}

void fsm_fidelity(const std::vector<BenchRun>& runs) {
    std::size_t matched = 0, counted = 0, placements_ok = 0;
    double seconds = 0;
    for (const auto& r : runs) {
        const auto a = testkit::status_agreement(r);
        matched += a.matched;
        counted += a.counted;
        if (r.log.placements.size() == r.truth.placements.size()) ++placements_ok;
        seconds += r.total_seconds;
    }
    const double ratio = counted ? static_cast<double>(matched) / counted : 0;
    const bool ok = ratio >= 0.99 && placements_ok == runs.size() && seconds < 120;
    report(ok, "state-machine fidelity",
           fmt(100 * ratio, 5) + "% of " + std::to_string(counted) + " frames, placement counts equal in " +
               std::to_string(placements_ok) + "/" + std::to_string(runs.size()) + " sessions, " + fmt(seconds, 3) +
               " s total");
}

void detector_quality(const std::vector<BenchRun>& runs) {
    bool ok = true;
    std::string detail;
    for (auto kind : {EventKind::Hit, EventKind::Tug, EventKind::Drop}) {
        testkit::MatchCounts sum;
        for (const auto& r : runs) {
            const auto c = testkit::match_events(r, kind, 3);
            sum.truth += c.truth;
            sum.detected += c.detected;
            sum.matched += c.matched;
        }
        ok = ok && sum.truth > 0 && sum.precision() >= 0.9 && sum.recall() >= 0.9;
        if (!detail.empty()) detail += "; ";
        detail += std::string(to_string(kind)) + " P " + fmt(sum.precision()) + " R " + fmt(sum.recall()) + " (" +
                  std::to_string(sum.matched) + "/" + std::to_string(sum.truth) + " labels, " +
                  std::to_string(sum.detected) + " detections)";
    }
    report(ok, "detector quality", detail);
}

void tracker_robustness() {
    double worst_clean = 1;
    for (std::uint32_t seed = 1; seed <= 5; ++seed) {
        const auto s = ScriptedSession::clean_move(seed);
        Tracker t;
        int good = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const Frame f = s.frame(i);
            const auto e = i == 0 ? t.init(f, s.truth().frames[0].tool_bbox) : t.step(f);
            if (e.valid && iou(e.bbox, s.truth().frames[i].tool_bbox) >= 0.5) ++good;
        }
        worst_clean = std::min(worst_clean, static_cast<double>(good) / s.size());
    }

    int worst_recovery = 0;
    bool lost_while_hidden = true;
    for (std::uint32_t seed = 1; seed <= 5; ++seed) {
        const auto s = ScriptedSession::occlusion(seed);
        Tracker t;
        std::optional<std::size_t> reappear, recovered;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const Frame f = s.frame(i);
            const auto& gt = s.truth().frames[i];
            const auto e = i == 0 ? t.init(f, gt.tool_bbox) : t.step(f);
            if (!gt.tool_visible) {
                if (e.valid) lost_while_hidden = false;
                continue;
            }
            if (i > 0 && !s.truth().frames[i - 1].tool_visible) reappear = i;
            if (reappear && !recovered && e.valid && iou(e.bbox, gt.tool_bbox) >= 0.5) recovered = i;
        }
        const int frames = recovered && reappear ? static_cast<int>(*recovered - *reappear) : 1000;
        worst_recovery = std::max(worst_recovery, frames);
    }

    const auto s = ScriptedSession::clean_move(1);
    const Frame f = s.frame(0);
    double fb = -1;
    try {
        fb = median_flow_step(f, f, s.truth().frames[0].tool_bbox).fb_error;
    } catch (const FlowLost&) {
    }

    const bool ok = worst_clean >= 0.95 && worst_recovery <= 10 && fb == 0.0;
    report(ok, "tracker robustness",
           "clean-move worst " + fmt(100 * worst_clean) + "% frames IoU>=0.5, worst recovery " +
               std::to_string(worst_recovery) + " frames after reappearance" +
               (lost_while_hidden ? " (lost while hidden)" : " (not lost while hidden)") + ", identity fb_error " +
               fmt(fb));
}

void classifier(const std::vector<BenchRun>& bench) {
    std::vector<FeatureVector> X;
    std::vector<SkillLabel> y;
    const auto add = [&](const BenchRun& r) {
        X.push_back(r.features);
        y.push_back(r.persona == "novice" ? SkillLabel::Novice : SkillLabel::Improved);
    };
    for (const auto& r : bench) add(r);
    for (std::uint32_t seed = 21; seed <= 30; ++seed) add(testkit::run_bench(seed <= 25 ? "novice" : "improved", seed));
    const double cv = cross_validate(X, y, 6);

    // one informative coordinate, two clouds around -1 and +1
    std::vector<FeatureVector> C;
    std::vector<SkillLabel> cy;
    for (int i = 0; i < 40; ++i) {
        FeatureVector f;
        const bool pos = i % 2 == 0;
        f[0] = (pos ? 1.0 : -1.0) + 0.3 * std::sin(1.7 * i);
        C.push_back(f);
        cy.push_back(pos ? SkillLabel::Improved : SkillLabel::Novice);
    }
    const double sep = train_svm(C, cy, 1.0).training_accuracy;

    const SvmModel base = train_svm(X, y);
    std::vector<FeatureVector> Xs = X;
    for (auto& f : Xs)
        for (int j = 0; j < kFeatureCount; ++j) f[j] *= std::pow(10.0, (j % 5) - 2) * (1 + 0.37 * j);
    const SvmModel scaled = train_svm(Xs, y);
    std::size_t same = 0;
    for (std::size_t i = 0; i < X.size(); ++i)
        if (predict(base, X[i]).label == predict(scaled, Xs[i]).label) ++same;

    const bool ok = cv >= 0.85 && sep == 1.0 && same == X.size();
    report(ok, "classifier",
           "leave-5-out accuracy " + fmt(100 * cv) + "% on " + std::to_string(X.size()) +
               " sessions, separable clouds " + fmt(100 * sep) + "%, rescaled labels unchanged " +
               std::to_string(same) + "/" + std::to_string(X.size()));
}

void throughput() {
    const ScriptedSession s(Persona::novice(), 6, 50, 3);
    const auto calib = calibrate(s.reference_frame(), s.seeds());
    SessionEngine engine(calib, 50, 3);
    const std::size_t n = std::min<std::size_t>(1000, s.size());
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Frame f = s.frame(i);
        const auto t0 = std::chrono::steady_clock::now();
        engine.process(f);
        total += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    const double ms = 1000 * total / n;
    report(n == 1000 && ms <= 20, "throughput",
           fmt(ms, 3) + " ms mean per frame over " + std::to_string(n) + " frames at 640x480");
}

void determinism() {
    const auto dir = std::filesystem::temp_directory_path() / ("netoas_accept_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    const ScriptedSession s(Persona::novice(), 1, 50, 12);
    write_simulation(s, dir / "frames");
    const auto calib = calibrate(read_ppm(dir / "frames" / "reference.ppm"), s.seeds());
    save_profile(calib, dir / "calib.json");

    SessionConfig cfg;
    cfg.calibration_path = dir / "calib.json";
    cfg.seed = 12;
    std::string reports[2];
    for (auto& r : reports) {
        PpmDirectorySource src(dir / "frames", cfg.fps);
        r = report_bytes(run_session(cfg, src).synopsis);
    }
    std::filesystem::remove_all(dir);
    report(!reports[0].empty() && reports[0] == reports[1], "determinism",
           "two runs over " + std::to_string(s.size()) + " recorded frames gave " +
               (reports[0] == reports[1] ? "identical " : "different ") + std::to_string(reports[0].size()) +
               "-byte reports");
}

void feedback_latency(const std::vector<BenchRun>& runs) {
    std::size_t messages = 0;
    long worst = 0;
    bool ordered = true;
    long worst_label = 0;
    for (const auto& r : runs) {
        for (const auto& m : r.feedback) {
            ++messages;
            if (m.frame_seq < m.event_seq) ordered = false;
            worst = std::max(worst, static_cast<long>(m.frame_seq) - static_cast<long>(m.event_seq));
            if (m.kind == EventKind::SmoothnessWarn) continue;
            // distance to the nearest label of the same kind
            long gap = 1000;
            for (const auto t : testkit::truth_frames(r.truth, m.kind))
                gap = std::min(gap, std::labs(static_cast<long>(m.frame_seq) - static_cast<long>(t)));
            worst_label = std::max(worst_label, gap);
        }
    }
    report(messages > 0 && ordered && worst <= 2, "feedback latency",
           std::to_string(messages) + " warnings, worst delay " + std::to_string(worst) +
               " frames after the detected event (" + std::to_string(worst_label) +
               " frames from the nearest script label)");
}

}  // namespace

int main() {
    std::cout << "running the 20-session benchmark..." << std::endl;
    std::vector<BenchRun> runs;
    for (std::uint32_t seed = 1; seed <= 20; ++seed) runs.push_back(testkit::run_bench(testkit::bench_persona(seed), seed));

    fsm_fidelity(runs);
    eccentricity_analytics();
    curvature_analytics();
    detector_quality(runs);
    tracker_robustness();
    classifier(runs);
    throughput();
    determinism();
    feedback_latency(runs);

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
