#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "netoas/imaging.hpp"
#include "netoas/scenegen.hpp"

using namespace netoas;

namespace {

Region raster_ellipse(double a, double b, double theta, int ox = 100, int oy = 100) {
    std::vector<std::array<int, 2>> px;
    const double c = std::cos(theta), s = std::sin(theta);
    const int r = static_cast<int>(std::ceil(std::max(a, b))) + 1;
    for (int y = -r; y <= r; ++y)
        for (int x = -r; x <= r; ++x) {
            const double u = c * x + s * y, v = -s * x + c * y;
            if (u * u / (a * a) + v * v / (b * b) <= 1.0) px.push_back({x + ox, y + oy});
        }
    return Region::from_pixels(px);
}

Region run_region(int n) {
    std::vector<std::array<int, 2>> px;
    for (int x = 0; x < n; ++x) px.push_back({x, 3});
    return Region::from_pixels(px);
}

// Ring on peg 1, tool parked off the board area.
SceneState ring_only_scene(const SceneLayout& layout) {
    SceneState s;
    s.ring.cx = layout.pegs[0][0];
    s.ring.cy = layout.pegs[0][1];
    s.tool.visible = false;
    s.lit_peg = 5;
    return s;
}

}  // namespace

TEST(SegmentByHue, PureRedWithWrappingBand) {
    Frame f(32, 32);
    f.fill(255, 0, 0);
    const auto m = segment_by_hue(f, {350, 10, 0.2, 0.25});
    EXPECT_EQ(m.count(), 32u * 32u);
}

TEST(SegmentByHue, GrayHasNoSaturation) {
    Frame f(32, 32);
    f.fill(128, 128, 128);
    EXPECT_EQ(segment_by_hue(f, {0, 359, 0.2, 0.0}).count(), 0u);
}

TEST(SegmentByHue, RenderedRingAreaMatchesRasterCount) {
    const SceneRenderer r(SceneLayout::standard(), 7);
    const auto s = ring_only_scene(r.layout());
    const Frame f = r.render(s, 1, 0, 1);
    const auto m = segment_by_hue(f, {kRingHue - 15, kRingHue + 15, 0.2, 0.25});
    const double truth = static_cast<double>(r.ring_pixel_count(s.ring));
    EXPECT_NEAR(static_cast<double>(m.count()), truth, 0.1 * truth);
}

TEST(SegmentByHue, IdempotentOnRenderedMask) {
    const SceneRenderer r(SceneLayout::standard(), 3);
    const Frame f = r.render(ring_only_scene(r.layout()), 1, 0, 9);
    const HueBand band{350, 10, 0.2, 0.25};  // pure red
    const auto m1 = segment_by_hue(f, {105, 135, 0.2, 0.25});
    Frame red(f.width(), f.height());
    for (int y = 0; y < f.height(); ++y)
        for (int x = 0; x < f.width(); ++x)
            if (m1.get(x, y)) red.at(x, y)[0] = 255;
    const auto m2 = segment_by_hue(red, band);
    EXPECT_EQ(m1.bits, m2.bits);
}

TEST(MaskSumInRect, EmptyAndFull) {
    EXPECT_EQ(mask_sum_in_rect(BinaryMask(40, 40, false), {5, 5, 10, 10}), 0);
    EXPECT_EQ(mask_sum_in_rect(BinaryMask(40, 40, true), {5, 5, 10, 10}), 100);
}

TEST(MaskSumInRect, OutOfBoundsIsContractViolation) {
    EXPECT_THROW(mask_sum_in_rect(BinaryMask(40, 40), {35, 35, 10, 10}), ContractViolation);
}

TEST(MaskSumInRect, WholeFrameEqualsCount) {
    std::mt19937 rng(4);
    BinaryMask m(50, 30);
    for (auto& b : m.bits) b = rng() % 3 == 0;
    EXPECT_EQ(mask_sum_in_rect(m, {0, 0, 50, 30}), static_cast<long>(m.count()));
}

TEST(MaskSumInRect, RingInPegBoxMatchesRenderer) {
    const ScriptedSession s(Persona::improved(), 1, 50, 5);
    const auto calib = calibrate(s.reference_frame(), s.seeds());
    const auto& gt = s.truth().frames[0];
    const auto mask = segment_by_hue(s.frame(0), calib.ring_hue);
    EXPECT_EQ(mask_sum_in_rect(mask, calib.small_box(gt.ring_peg)), gt.small_count);
}

TEST(ConnectedRegions, TwoSquares) {
    BinaryMask m(40, 40);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x) {
            m.set(2 + x, 2 + y);
            m.set(20 + x, 25 + y);
        }
    const auto regions = connected_regions(m);
    ASSERT_EQ(regions.size(), 2u);
    EXPECT_EQ(regions[0].area, 25);
    EXPECT_EQ(regions[1].area, 25);
}

TEST(ConnectedRegions, EmptyMask) { EXPECT_TRUE(connected_regions(BinaryMask(20, 20)).empty()); }

TEST(ConnectedRegions, DiagonalTouchIsConnected) {
    BinaryMask m(20, 20);
    m.set(3, 3);
    m.set(4, 4);
    EXPECT_EQ(connected_regions(m).size(), 1u);
}

TEST(ConnectedRegions, SortedByAreaDescending) {
    BinaryMask m(40, 40);
    m.set(1, 1);
    for (int x = 10; x < 20; ++x) m.set(x, 10);
    for (int x = 5; x < 8; ++x) m.set(x, 30);
    const auto regions = connected_regions(m);
    ASSERT_EQ(regions.size(), 3u);
    EXPECT_EQ(regions[0].area, 10);
    EXPECT_EQ(regions[1].area, 3);
    EXPECT_EQ(regions[2].area, 1);
}

TEST(ConnectedRegions, OccludedRingSplitsAndKeepsVisiblePixels) {
    const SceneRenderer r(SceneLayout::standard(), 11, 0.0);
    SceneState s = ring_only_scene(r.layout());
    // head just outside the ring so the rod crosses it on both sides
    const double dx = kPivotX - s.ring.cx, dy = kPivotY - s.ring.cy, n = std::hypot(dx, dy);
    s.tool.visible = true;
    s.tool.x = s.ring.cx - 25 * dx / n;
    s.tool.y = s.ring.cy - 25 * dy / n;
    const Frame f = r.render(s, 1, 0, 1);
    const auto regions = connected_regions(segment_by_hue(f, {105, 135, 0.2, 0.25}));
    ASSERT_GE(regions.size(), 2u);
    long total = 0;
    for (const auto& g : regions) total += g.area;
    EXPECT_EQ(total, static_cast<long>(r.visible_ring_pixels(s).size()));
}

TEST(CentralMoments, SinglePixel) {
    const std::array<std::array<int, 2>, 1> px{{{4, 9}}};
    const auto m = central_moments(Region::from_pixels(px));
    EXPECT_EQ(m.area, 1);
    EXPECT_EQ(m.mu20, 0);
    EXPECT_EQ(m.mu02, 0);
    EXPECT_EQ(m.mu11, 0);
}

TEST(CentralMoments, HorizontalRun) {
    const auto m = central_moments(run_region(12));
    EXPECT_GT(m.mu20, 0);
    EXPECT_DOUBLE_EQ(m.mu02, 0);
    EXPECT_DOUBLE_EQ(m.mu11, 0);
}

TEST(CentralMoments, DiskIsIsotropic) {
    const auto m = central_moments(raster_ellipse(20, 20, 0));
    EXPECT_NEAR(m.mu20, m.mu02, 0.01 * m.mu20);
    EXPECT_LE(std::abs(m.mu11), 0.01 * m.mu20);
}

TEST(CentralMoments, MatchesBruteForceSum) {
    const Region g = raster_ellipse(17, 9, 0.6, 60, 40);
    double sx = 0, sy = 0;
    const auto px = g.pixels();
    for (auto [x, y] : px) {
        sx += x;
        sy += y;
    }
    const double cx = sx / px.size(), cy = sy / px.size();
    double m20 = 0, m02 = 0, m11 = 0;
    for (auto [x, y] : px) {
        m20 += (x - cx) * (x - cx);
        m02 += (y - cy) * (y - cy);
        m11 += (x - cx) * (y - cy);
    }
    const auto m = central_moments(g);
    EXPECT_NEAR(m.cx, cx, 1e-9);
    EXPECT_NEAR(m.cy, cy, 1e-9);
    EXPECT_NEAR(m.mu20, m20, 1e-6 * m20);
    EXPECT_NEAR(m.mu02, m02, 1e-6 * m02);
    EXPECT_NEAR(m.mu11, m11, 1e-6 * std::abs(m11) + 1e-6);
}

TEST(CentralMoments, CauchySchwarzOnRandomBlobs) {
    std::mt19937 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::array<int, 2>> px;
        const int n = 1 + static_cast<int>(rng() % 60);
        for (int i = 0; i < n; ++i) px.push_back({static_cast<int>(rng() % 30), static_cast<int>(rng() % 30)});
        const auto m = central_moments(Region::from_pixels(px));
        EXPECT_GE(m.mu20, 0);
        EXPECT_GE(m.mu02, 0);
        EXPECT_LE(m.mu11 * m.mu11, m.mu20 * m.mu02 * (1 + 1e-9) + 1e-9);
    }
}

TEST(CentralMoments, EmptyRegionThrows) { EXPECT_THROW(central_moments(Region{}), ContractViolation); }

TEST(Eccentricity, Disk) { EXPECT_NEAR(eccentricity(central_moments(raster_ellipse(20, 20, 0))), 1.0, 0.02); }

TEST(Eccentricity, Ellipse40by20) {
    EXPECT_NEAR(eccentricity(central_moments(raster_ellipse(40, 20, 0))), 4.0, 0.2);
}

TEST(Eccentricity, RotationInvariant) {
    const double base = eccentricity(central_moments(raster_ellipse(40, 20, 0)));
    for (double deg : {15.0, 45.0, 90.0}) {
        const double e = eccentricity(central_moments(raster_ellipse(40, 20, deg * std::numbers::pi / 180)));
        EXPECT_NEAR(e, base, 0.02 * base) << deg;
    }
}

TEST(Eccentricity, TranslationInvariant) {
    const double a = eccentricity(central_moments(raster_ellipse(30, 12, 0.3, 50, 50)));
    const double b = eccentricity(central_moments(raster_ellipse(30, 12, 0.3, 400, 260)));
    EXPECT_DOUBLE_EQ(a, b);
}

TEST(Eccentricity, CollinearIsDegenerate) {
    EXPECT_THROW(eccentricity(central_moments(run_region(20))), DegenerateRegion);
}

TEST(GridDiff, IdenticalFrames) {
    const SceneRenderer r(SceneLayout::standard(), 2);
    const Frame f = r.render(ring_only_scene(r.layout()), 1, 0, 3);
    const auto d = grid_diff(f, f, 12);
    EXPECT_EQ(d.changed_cells, 0);
    EXPECT_EQ(d.intensity, 0);
}

TEST(GridDiff, OneCellChangedBy50) {
    Frame a(100, 100), b(100, 100);
    a.fill(100, 100, 100);
    b.fill(100, 100, 100);
    for (int y = 30; y < 40; ++y)
        for (int x = 50; x < 60; ++x) {
            auto* p = b.at(x, y);
            p[0] = p[1] = p[2] = 150;
        }
    const auto d = grid_diff(a, b, 20);
    EXPECT_EQ(d.changed_cells, 1);
    EXPECT_DOUBLE_EQ(d.intensity, 50);
    EXPECT_DOUBLE_EQ(d.cell_means[3 * 10 + 5], 50);
}

TEST(GridDiff, DimensionMismatch) {
    EXPECT_THROW(grid_diff(Frame(32, 32), Frame(32, 48), 10), ContractViolation);
}

TEST(GridDiff, SymmetricInSign) {
    std::mt19937 rng(5);
    GrayImage a(80, 60), b(80, 60);
    for (auto& v : a.data) v = static_cast<std::uint8_t>(rng() % 256);
    for (std::size_t i = 0; i < b.data.size(); ++i) b.data[i] = static_cast<std::uint8_t>(255 - a.data[i]);
    const auto d1 = grid_diff(a, b, 10), d2 = grid_diff(b, a, 10);
    EXPECT_EQ(d1.changed_cells, d2.changed_cells);
    EXPECT_DOUBLE_EQ(d1.intensity, d2.intensity);
}

TEST(GridDiff, ScriptedHitChangesEnoughCells) {
    const ScriptedSession s(Persona::novice(), 3, 50, 6);
    const auto calib = calibrate(s.reference_frame(), s.seeds());
    int hits = 0;
    for (const auto& e : s.truth().events) {
        if (e.kind != EventKind::Hit) continue;
        ++hits;
        const std::size_t i = e.seq - 1;  // frame index of the labelled hit
        const auto d = grid_diff(s.frame(i - 1), s.frame(i), calib.hit_cell_thresh);
        EXPECT_GE(d.changed_cells, calib.hit_cell_min) << "hit at " << e.seq;
    }
    EXPECT_GT(hits, 0);
}

TEST(Frame, RejectsTinyFrames) { EXPECT_THROW(Frame(8, 8), ContractViolation); }

TEST(Luma, IntegerWeights) {
    EXPECT_EQ(luma(255, 255, 255), 255);
    EXPECT_EQ(luma(255, 0, 0), 76);
    EXPECT_EQ(luma(0, 255, 0), 149);
    EXPECT_EQ(luma(0, 0, 255), 29);
}
