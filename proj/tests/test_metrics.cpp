#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "netoas/errors.hpp"
#include "netoas/metrics.hpp"
#include "netoas/scenegen.hpp"

using namespace netoas;

namespace {

TrackSegment circle(double r, int n, double step, double cx = 0, double cy = 0) {
    TrackSegment s;
    for (int i = 0; i < n; ++i) s.push_back({static_cast<std::uint64_t>(i + 1), cx + r * std::cos(i * step), cy + r * std::sin(i * step)});
    return s;
}

TrackSegment transform(const TrackSegment& s, double angle, double tx, double ty) {
    TrackSegment out;
    const double c = std::cos(angle), sn = std::sin(angle);
    for (const auto& p : s) out.push_back({p.seq, c * p.x - sn * p.y + tx, sn * p.x + c * p.y + ty});
    return out;
}

// Moving stretches of the scripted tool path, split at every status change.
std::vector<TrackSegment> moving_segments(const GroundTruth& gt) {
    std::vector<TrackSegment> segs;
    TrackSegment cur;
    for (const auto& f : gt.frames) {
        if (f.status == Status::Moving && f.tool_visible) {
            cur.push_back({f.seq, f.tool_x, f.tool_y});
        } else if (!cur.empty()) {
            if (cur.size() >= 5) segs.push_back(cur);
            cur.clear();
        }
    }
    if (cur.size() >= 5) segs.push_back(cur);
    return segs;
}

}  // namespace

TEST(Smoothness, ConstantVelocityIsZero) {
    TrackSegment s;
    for (int i = 0; i < 20; ++i) s.push_back({static_cast<std::uint64_t>(i + 1), 3.0 * i, 4.0 * i});
    EXPECT_NEAR(smoothness(s), 0.0, 1e-12);
}

TEST(Smoothness, AlternatingSpeeds) {
    const TrackSegment s{{1, 0, 0}, {2, 2, 0}, {3, 6, 0}, {4, 8, 0}, {5, 12, 0}};
    EXPECT_NEAR(smoothness(s), 1.0, 1e-12);
}

TEST(Smoothness, UsesSeqGaps) {
    const TrackSegment s{{1, 0, 0}, {3, 4, 0}, {4, 6, 0}};
    EXPECT_NEAR(smoothness(s), 0.0, 1e-12);
}

TEST(Smoothness, TooFewSamples) {
    const TrackSegment s{{1, 0, 0}, {2, 1, 0}};
    EXPECT_THROW(smoothness(s), InsufficientData);
}

TEST(Smoothness, NonIncreasingSeq) {
    const TrackSegment s{{1, 0, 0}, {1, 1, 0}, {2, 2, 0}};
    EXPECT_THROW(smoothness(s), ContractViolation);
}

TEST(ArcLength, SinglePoint) {
    const TrackSegment s{{1, 5.2, 6.7}};
    EXPECT_EQ(arc_length(s), 1);
}

TEST(ArcLength, HorizontalRun) {
    const TrackSegment s{{1, 0, 0}, {2, 49, 0}};
    EXPECT_EQ(arc_length(s), 50);
}

TEST(ArcLength, DiagonalIsEightConnected) {
    const TrackSegment s{{1, 0, 0}, {2, 30, 30}};
    EXPECT_EQ(arc_length(s), 31);
}

TEST(ArcLength, RetracedPixelsCountOnce) {
    const TrackSegment s{{1, 0, 0}, {2, 20, 0}, {3, 0, 0}};
    EXPECT_EQ(arc_length(s), 21);
}

TEST(ArcLength, Empty) {
    EXPECT_THROW(arc_length(TrackSegment{}), InsufficientData);
}

TEST(ArcLength, RasterIsConnected) {
    const auto s = circle(40, 60, 0.1, 100, 100);
    const auto px = rasterize_polyline(s);
    std::set<std::array<int, 2>> set(px.begin(), px.end());
    EXPECT_EQ(set.size(), px.size());
    for (std::size_t i = 1; i < s.size(); ++i) {
        const int x = static_cast<int>(std::lround(s[i].x)), y = static_cast<int>(std::lround(s[i].y));
        EXPECT_TRUE(set.count({x, y}));
    }
    for (const auto& p : px) {
        int nb = 0;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                if ((dx || dy) && set.count({p[0] + dx, p[1] + dy})) ++nb;
        EXPECT_GE(nb, 1);
    }
}

TEST(Curvature, StraightLineIsZero) {
    TrackSegment s;
    for (int i = 0; i < 30; ++i) s.push_back({static_cast<std::uint64_t>(i + 1), 1.5 * i + 2, -0.7 * i + 9});
    for (double k : curvature_series(s)) EXPECT_LE(std::abs(k), 1e-9);
}

TEST(Curvature, CircleRadiusFifty) {
    const auto s = circle(50, 180, 2 * std::numbers::pi / 180);
    const auto k = curvature_series(s);
    ASSERT_EQ(k.size(), s.size());
    for (std::size_t i = 1; i + 1 < k.size(); ++i) EXPECT_NEAR(k[i], 0.02, 0.001) << i;
}

TEST(Curvature, StationaryPointsAreZero) {
    TrackSegment s;
    for (int i = 0; i < 10; ++i) s.push_back({static_cast<std::uint64_t>(i + 1), 7, 7});
    for (double k : curvature_series(s)) EXPECT_EQ(k, 0.0);
}

TEST(Curvature, TooFewSamples) {
    const TrackSegment s{{1, 0, 0}, {2, 1, 0}, {3, 2, 1}, {4, 3, 1}};
    EXPECT_THROW(curvature_series(s), InsufficientData);
}

TEST(Curvature, RigidTransformInvariance) {
    TrackSegment s;
    for (int i = 0; i < 60; ++i) s.push_back({static_cast<std::uint64_t>(i + 1), 3.0 * i, 20 * std::sin(i * 0.2)});
    const auto a = curvature_series(s);
    const auto moved = transform(s, 0.8, 120, -45);
    const auto b = curvature_series(moved);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9 * std::max(1.0, a[i]));
    EXPECT_NEAR(smoothness(s), smoothness(moved), 1e-9);
}

TEST(Curvature, DoubledSamplingRate) {
    const double step = 2 * std::numbers::pi / 90;
    const auto coarse = circle(50, 45, step);
    const auto fine = circle(50, 90, step / 2);
    const auto kc = curvature_series(coarse);
    const auto kf = curvature_series(fine);
    for (std::size_t i = 1; i + 1 < kc.size(); ++i) EXPECT_NEAR(kc[i], kf[2 * i], 0.02 * kf[2 * i]);
}

TEST(Jerks, BelowThresholdIsZero) {
    const std::vector<double> k{0.01, 0.05, 0.1, 0.05};
    EXPECT_EQ(count_jerks(k, 0.2), 0);
}

TEST(Jerks, TwoExcursions) {
    const std::vector<double> k{0.0, 0.3, 0.5, 0.05, 0.0, 0.25, 0.0};
    EXPECT_EQ(count_jerks(k, 0.2), 2);
    EXPECT_EQ(count_jerks(k, 0.4), 1);
}

TEST(Jerks, DipAboveFloorDoesNotSplit) {
    const std::vector<double> k{0.0, 0.5, 0.3, 0.5, 0.0};
    EXPECT_EQ(count_jerks(k, 0.2), 1);
    EXPECT_EQ(count_jerks(k, 0.4), 1);
    const auto ex = jerk_excursions(k, 0.4);
    ASSERT_EQ(ex.size(), 1u);
    EXPECT_EQ(ex[0].start, 1u);
    EXPECT_DOUBLE_EQ(ex[0].peak, 0.5);
}

TEST(Jerks, MonotoneInThreshold) {
    for (unsigned seed = 1; seed <= 50; ++seed) {
        std::vector<double> k;
        for (int i = 0; i < 200; ++i) k.push_back(std::abs(std::sin(i * 0.37 * seed) * std::cos(i * 0.11 + seed)));
        int prev = count_jerks(k, 0.0);
        for (double t = 0.01; t <= 1.2; t += 0.01) {
            const int c = count_jerks(k, t);
            EXPECT_LE(c, prev) << "seed " << seed << " thresh " << t;
            prev = c;
        }
        EXPECT_EQ(count_jerks(k, 2.0), 0);
    }
}

TEST(ScriptedPaths, NoviceIsRougherThanImproved) {
    const ScriptedSession nov(Persona::novice(), 3, 50, 4);
    const ScriptedSession imp(Persona::improved(), 3, 50, 4);
    const auto mean_stats = [](const GroundTruth& gt) {
        double smooth = 0;
        int jerks = 0;
        const auto segs = moving_segments(gt);
        for (const auto& s : segs) {
            smooth += smoothness(s);
            jerks += count_jerks(curvature_series(s), 0.2);
        }
        return std::pair{smooth / std::max<std::size_t>(segs.size(), 1), jerks};
    };
    const auto [ns, nj] = mean_stats(nov.truth());
    const auto [is, ij] = mean_stats(imp.truth());
    EXPECT_GT(ns, is);
    EXPECT_GT(nj, ij);
}
