#include <gtest/gtest.h>

#include <thread>

#include "netoas/errors.hpp"
#include "netoas/metrics.hpp"
#include "netoas/session.hpp"
#include "netoas/user_store.hpp"
#include "temp_dir.hpp"

using namespace netoas;
using testkit::TempDir;

namespace {

class EmptySource : public FrameSource {
public:
    std::optional<Frame> next() override { return std::nullopt; }
};

class CountingSource : public FrameSource {
public:
    std::optional<Frame> next() override {
        ++calls;
        return std::nullopt;
    }
    int calls = 0;
};

class StallingSource : public FrameSource {
public:
    std::optional<Frame> next() override {
        std::this_thread::sleep_for(std::chrono::milliseconds(400));
        return std::nullopt;
    }
};

// First full second of scripted Moving motion whose smoothness exceeds thresh.
std::optional<std::vector<TrackSample>> rough_window(const ScriptedSession& s, double thresh) {
    const auto& fr = s.truth().frames;
    const std::size_t n = static_cast<std::size_t>(s.fps());
    for (std::size_t i = 0; i + n <= fr.size(); ++i) {
        std::vector<TrackSample> w;
        std::vector<TrackPoint> pts;
        for (std::size_t j = i; j < i + n; ++j) {
            if (fr[j].status != Status::Moving || !fr[j].tool_visible) break;
            w.push_back({fr[j].seq, fr[j].tool_x, fr[j].tool_y, true});
            pts.push_back({fr[j].seq, fr[j].tool_x, fr[j].tool_y});
        }
        if (w.size() == n && smoothness(pts) >= thresh) return w;
    }
    return std::nullopt;
}

struct Fixture {
    TempDir dir;
    ScriptedSession session{Persona::improved(), 2, 50, 5};
    std::filesystem::path calib_path;

    Fixture() {
        calib_path = dir / "calib.json";
        save_profile(calibrate(session.reference_frame(), session.seeds()), calib_path);
    }

    SessionConfig config() const {
        SessionConfig c;
        c.calibration_path = calib_path;
        c.seed = 5;
        return c;
    }
};

}  // namespace

TEST(FeedbackPolicy, OneMessagePerEvent) {
    FeedbackPolicy p(1.5, 50);
    const auto out = p.update(12, {}, {{EventKind::Hit, 11, 25, 40}});
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].kind, EventKind::Hit);
    EXPECT_EQ(out[0].frame_seq, 12u);
    EXPECT_EQ(out[0].event_seq, 11u);
    EXPECT_FALSE(out[0].text.empty());
}

TEST(FeedbackPolicy, JerksAreNotAnnounced) {
    FeedbackPolicy p(1.5, 50);
    EXPECT_TRUE(p.update(12, {}, {{EventKind::Jerk, 11, 0.5, 0}}).empty());
}

TEST(FeedbackPolicy, SmoothWindowIsQuiet) {
    FeedbackPolicy p(1.5, 50);
    std::vector<TrackSample> w;
    for (std::uint64_t s = 1; s <= 50; ++s) w.push_back({s, 5.0 * s, 100, true});
    std::optional<EventRecord> warn;
    EXPECT_TRUE(p.update(50, w, {}, &warn).empty());
    EXPECT_FALSE(warn);
}

TEST(FeedbackPolicy, ZigzagWarnsOncePerSecond) {
    const ScriptedSession s(Persona::novice(), 3, 50, 9);
    const auto w = rough_window(s, 1.5);
    ASSERT_TRUE(w) << "no rough window in the novice script";
    FeedbackPolicy p(1.5, 50);
    const std::uint64_t seq = w->back().seq;
    std::optional<EventRecord> warn;
    auto out = p.update(seq, *w, {}, &warn);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].kind, EventKind::SmoothnessWarn);
    ASSERT_TRUE(warn);
    EXPECT_EQ(warn->frame_seq, seq);
    for (std::uint64_t k = 1; k < 50; ++k) EXPECT_TRUE(p.update(seq + k, *w, {}).empty()) << k;
    EXPECT_EQ(p.update(seq + 50, *w, {}).size(), 1u);
}

TEST(FrameQueue, DropOldestKeepsNewest) {
    FrameQueue q(4, true);
    for (std::uint64_t s = 1; s <= 6; ++s) q.push(Frame(16, 16, s));
    EXPECT_EQ(q.dropped(), 2u);
    q.close();
    std::vector<std::uint64_t> got;
    while (auto f = q.pop()) got.push_back(f->seq());
    EXPECT_EQ(got, (std::vector<std::uint64_t>{3, 4, 5, 6}));
}

TEST(FrameQueue, BlockingNeverDrops) {
    FrameQueue q(4, false);
    std::thread producer([&] {
        for (std::uint64_t s = 1; s <= 50; ++s) q.push(Frame(16, 16, s));
        q.close();
    });
    std::uint64_t expect = 1;
    while (auto f = q.pop()) EXPECT_EQ(f->seq(), expect++);
    producer.join();
    EXPECT_EQ(expect, 51u);
    EXPECT_EQ(q.dropped(), 0u);
}

TEST(FrameQueue, PopTimesOut) {
    FrameQueue q(4, true);
    EXPECT_FALSE(q.pop(std::chrono::milliseconds(20)));
    EXPECT_TRUE(q.timed_out());
}

TEST(SessionConfig, Validate) {
    SessionConfig c;
    EXPECT_NO_THROW(c.validate());
    c.fps = 30;
    EXPECT_THROW(c.validate(), ContractViolation);
    c.fps = 25;
    c.duration_s = 0;
    EXPECT_THROW(c.validate(), ContractViolation);
    c.duration_s = 10;
    c.user = "bad id!";
    c.user_store_path = "users.jsonl";
    EXPECT_THROW(c.validate(), ContractViolation);
}

TEST(RunSession, MissingCalibrationBeforeAnyFrame) {
    TempDir dir;
    SessionConfig c;
    c.calibration_path = dir / "absent.json";
    CountingSource src;
    EXPECT_THROW(run_session(c, src), NotCalibrated);
    EXPECT_EQ(src.calls, 0);
}

TEST(RunSession, EmptySourceGivesZeroActivity) {
    Fixture fx;
    EmptySource src;
    const auto r = run_session(fx.config(), src);
    EXPECT_TRUE(r.log.placements.empty());
    EXPECT_TRUE(r.log.events.empty());
    EXPECT_EQ(r.synopsis.report["summary"], "no placements");
    for (int i = 0; i < kFeatureCount; ++i) EXPECT_EQ(r.features[i], 0.0);
}

TEST(RunSession, ImprovedPlacementsMatchScript) {
    Fixture fx;
    ScriptedSource src(fx.session);
    const auto r = run_session(fx.config(), src);
    const auto& want = fx.session.truth().placements;
    ASSERT_EQ(r.log.placements.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
        EXPECT_EQ(r.log.placements[i].from_peg, want[i].from_peg);
        EXPECT_EQ(r.log.placements[i].to_peg, want[i].to_peg);
    }
    EXPECT_EQ(r.synopsis.report["placements"].size(), want.size());
    EXPECT_EQ(r.features[10], static_cast<double>(want.size()));
}

TEST(RunSession, DurationStopsEarly) {
    Fixture fx;
    auto c = fx.config();
    c.duration_s = 1.0;
    ScriptedSource src(fx.session);
    const auto r = run_session(c, src);
    ASSERT_FALSE(r.log.intervals.empty());
    EXPECT_LE(r.log.intervals.back().end_seq, 50u);
}

TEST(RunSession, FeedbackReachesSinkWithinTwoFrames) {
    Fixture fx;
    ScriptedSession novice(Persona::novice(), 2, 50, 5);
    const auto calib = calibrate(novice.reference_frame(), novice.seeds());
    ScriptedSource src(novice);
    std::vector<FeedbackMessage> seen;
    auto c = fx.config();
    const auto r = run_session(c, calib, std::nullopt, src, [&](const FeedbackMessage& m) { seen.push_back(m); });
    EXPECT_EQ(seen.size(), r.feedback.size());
    EXPECT_FALSE(seen.empty());
    for (const auto& m : seen) EXPECT_LE(m.frame_seq - m.event_seq, 2u);
}

TEST(RunSession, StallInLiveMode) {
    Fixture fx;
    auto c = fx.config();
    c.live = true;
    c.stall_timeout = std::chrono::milliseconds(50);
    StallingSource src;
    EXPECT_THROW(run_session(c, src), SourceStall);
}

TEST(RunSession, SynopsisPersistedUnderUser) {
    Fixture fx;
    auto c = fx.config();
    c.user = "alice";
    c.user_store_path = fx.dir / "users.jsonl";
    EmptySource src;
    run_session(c, src);
    run_session(c, src);
    UserStore store(c.user_store_path);
    EXPECT_TRUE(store.has_user("alice"));
    EXPECT_EQ(store.history("alice").size(), 2u);
}

TEST(RunSession, RecordedStreamIsReproducible) {
    Fixture fx;
    ScriptedSource a(fx.session, 400), b(fx.session, 400);
    const auto ra = run_session(fx.config(), a);
    const auto rb = run_session(fx.config(), b);
    EXPECT_EQ(report_bytes(ra.synopsis), report_bytes(rb.synopsis));
}
