#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "netoas/imaging.hpp"
#include "netoas/lk_flow.hpp"

namespace netoas {

inline constexpr int kPatchSide = 15;
inline constexpr int kInitWarps = 100;
using NormalizedPatch = std::array<float, kPatchSide * kPatchSide>;

enum class TrackSource { Tracked, Detected, Lost };
const char* to_string(TrackSource s);

struct TrackEstimate {
    Rect bbox;
    double cx = 0;
    double cy = 0;
    double confidence = 0;
    bool valid = false;
    TrackSource source = TrackSource::Lost;
};

struct TrackerConfig {
    int pyramid_levels = 3;
    int lk_window = 11;
    int n_ferns = 10;
    int n_comparisons = 13;
    std::array<double, 3> scales{0.8, 1.0, 1.25};
    double stride_fraction = 0.1;
    double variance_fraction = 0.5;   // of the seed variance
    double var_min = 10.0;            // gray levels squared
    double confidence_floor = 0.55;
    double detection_min_similarity = 0.6;
    double learn_min_confidence = 0.6;
    double max_fb_error = 10.0;       // pixels
    double flow_min_ncc = 0.3;
    int nn_max_candidates = 50;
    int model_cap = 200;
    std::uint32_t seed = 1;
};

// Gray image plus the derived data every stage needs.
struct TrackerFrame {
    GrayImage gray;
    GrayImage blurred;                // 3x3 box filter, used by the ferns
    std::vector<std::int64_t> isum;   // (w+1)*(h+1) integral images
    std::vector<std::int64_t> isq;
    Pyramid pyramid;
    std::uint64_t seq = 0;
    std::vector<std::uint16_t> scratch;  // row sums for the blur

    static TrackerFrame prepare(const Frame& frame, int pyramid_levels);
    static TrackerFrame prepare(const GrayImage& gray, int pyramid_levels);
    // Reuses the buffers already held by `tf`.
    static void prepare_into(TrackerFrame& tf, const GrayImage& gray, int pyramid_levels);
    double window_variance(const Rect& r) const;
    double window_mean(const Rect& r) const;
};

struct FlowResult {
    Rect bbox;
    double fb_error = 0;
    double dx = 0;  // median displacement
    double dy = 0;
    double scale = 1;
};

// Median-flow step on a 10x10 grid of points inside bbox. Throws FlowLost when fewer
// than 4 points survive the forward-backward and correlation checks.
FlowResult median_flow_step(const Frame& prev, const Frame& curr, const Rect& bbox, const LkParams& params = {});
FlowResult median_flow_step(const TrackerFrame& prev, const TrackerFrame& curr, const Rect& bbox,
                            const LkParams& params, double min_ncc = 0.3);

NormalizedPatch normalized_patch(const GrayImage& gray, const Rect& r);
// (NCC + 1) / 2 of two normalized patches.
double patch_similarity(const NormalizedPatch& a, const NormalizedPatch& b);

class FernEnsemble {
public:
    FernEnsemble() = default;
    FernEnsemble(int n_ferns, int n_comparisons, std::uint32_t seed);

    int n_ferns() const { return n_ferns_; }
    int n_comparisons() const { return n_cmp_; }

    void codes(const GrayImage& blurred, const Rect& r, std::vector<int>& out) const;
    double posterior(const std::vector<int>& codes) const;
    double leaf_posterior(int fern, int code) const;
    void update(const std::vector<int>& codes, bool positive);

    // Pixel offsets of every comparison for a window of the given size, relative to its top-left.
    std::vector<std::array<int, 2>> offsets(int w, int h, int stride) const;
    double posterior_at(const std::uint8_t* origin, const std::vector<std::array<int, 2>>& offsets) const;

private:
    int n_ferns_ = 0;
    int n_cmp_ = 0;
    std::vector<std::array<float, 4>> features_;  // x1,y1,x2,y2 in [0,1)
    std::vector<std::uint32_t> pos_;
    std::vector<std::uint32_t> neg_;
};

class ToolModel {
public:
    int seed_w = 0;
    int seed_h = 0;
    double seed_variance = 0;
    std::vector<NormalizedPatch> positives;  // positives[0] is the seed patch and is never evicted
    std::vector<NormalizedPatch> negatives;
    FernEnsemble ferns;

    std::size_t size() const { return positives.size() + negatives.size(); }
    // Relative similarity in [0,1] based on distances to the nearest positive and negative.
    double relative_similarity(const NormalizedPatch& p) const;
    double max_positive_similarity(const NormalizedPatch& p) const;
    void add_positive(const NormalizedPatch& p, int cap);
    void add_negative(const NormalizedPatch& p, int cap);
};

struct Detection {
    Rect rect;
    double similarity = 0;
    double posterior = 0;
};

// Survivors of each cascade stage, for inspection.
struct CascadeTrace {
    std::size_t windows = 0;
    std::vector<Rect> variance_pass;
    std::vector<Rect> fern_pass;
    std::vector<Detection> scored;
};

std::vector<Detection> detect(const Frame& frame, const ToolModel& model, const TrackerConfig& cfg = {});
std::vector<Detection> detect(const TrackerFrame& frame, const ToolModel& model, const TrackerConfig& cfg,
                              CascadeTrace* trace = nullptr, std::vector<Detection>* fern_survivors = nullptr);

class Tracker {
public:
    explicit Tracker(TrackerConfig cfg = {});

    TrackEstimate init(const Frame& frame, const Rect& seed);
    TrackEstimate step(const Frame& frame);
    TrackEstimate step(const GrayImage& gray, std::uint64_t seq);

    bool initialized() const { return initialized_; }
    const ToolModel& model() const { return model_; }
    const TrackerConfig& config() const { return cfg_; }
    const TrackEstimate& last() const { return last_; }

private:
    TrackEstimate fuse(const TrackerFrame& cur);
    void learn(const TrackerFrame& cur, const Rect& box, const std::vector<Detection>& survivors);
    double validate(const TrackerFrame& cur, const Rect& box) const;

    TrackerConfig cfg_;
    LkParams lk_;
    ToolModel model_;
    TrackerFrame prev_;
    TrackerFrame spare_;  // recycled buffers for the next frame
    TrackEstimate last_;
    bool initialized_ = false;
};

}  // namespace netoas
