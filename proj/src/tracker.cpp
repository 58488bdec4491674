#include "netoas/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace netoas {

const char* to_string(TrackSource s) {
    switch (s) {
        case TrackSource::Tracked: return "tracked";
        case TrackSource::Detected: return "detected";
        case TrackSource::Lost: return "lost";
    }
    return "lost";
}

TrackerFrame TrackerFrame::prepare(const Frame& frame, int pyramid_levels) {
    TrackerFrame tf = prepare(to_gray(frame), pyramid_levels);
    tf.seq = frame.seq();
    return tf;
}

TrackerFrame TrackerFrame::prepare(const GrayImage& gray, int pyramid_levels) {
    TrackerFrame tf;
    prepare_into(tf, gray, pyramid_levels);
    return tf;
}

void TrackerFrame::prepare_into(TrackerFrame& tf, const GrayImage& gray, int pyramid_levels) {
    const int w = gray.width, h = gray.height;
    tf.gray.width = w;
    tf.gray.height = h;
    tf.gray.data.assign(gray.data.begin(), gray.data.end());

    // 3x3 box blur, borders replicated
    tf.scratch.resize(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* g = &gray.data[static_cast<std::size_t>(y) * w];
        std::uint16_t* out = &tf.scratch[static_cast<std::size_t>(y) * w];
        out[0] = static_cast<std::uint16_t>(2 * g[0] + g[1]);
        for (int x = 1; x < w - 1; ++x) out[x] = static_cast<std::uint16_t>(g[x - 1] + g[x] + g[x + 1]);
        out[w - 1] = static_cast<std::uint16_t>(g[w - 2] + 2 * g[w - 1]);
    }
    tf.blurred.width = w;
    tf.blurred.height = h;
    tf.blurred.data.resize(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        const std::uint16_t* a = &tf.scratch[static_cast<std::size_t>(std::max(y - 1, 0)) * w];
        const std::uint16_t* b = &tf.scratch[static_cast<std::size_t>(y) * w];
        const std::uint16_t* c = &tf.scratch[static_cast<std::size_t>(std::min(y + 1, h - 1)) * w];
        std::uint8_t* out = &tf.blurred.data[static_cast<std::size_t>(y) * w];
        for (int x = 0; x < w; ++x) out[x] = static_cast<std::uint8_t>((a[x] + b[x] + c[x] + 4) / 9);
    }

    const std::size_t stride = static_cast<std::size_t>(w) + 1;
    tf.isum.resize(stride * (h + 1));
    tf.isq.resize(stride * (h + 1));
    std::fill(tf.isum.begin(), tf.isum.begin() + stride, 0);
    std::fill(tf.isq.begin(), tf.isq.begin() + stride, 0);
    for (int y = 0; y < h; ++y) {
        std::int64_t rs = 0, rq = 0;
        const std::uint8_t* g = &gray.data[static_cast<std::size_t>(y) * w];
        const std::int64_t* ps = &tf.isum[y * stride + 1];
        const std::int64_t* pq = &tf.isq[y * stride + 1];
        std::int64_t* cs = &tf.isum[(y + 1) * stride + 1];
        std::int64_t* cq = &tf.isq[(y + 1) * stride + 1];
        cs[-1] = 0;
        cq[-1] = 0;
        for (int x = 0; x < w; ++x) {
            const std::int64_t v = g[x];
            rs += v;
            rq += v * v;
            cs[x] = ps[x] + rs;
            cq[x] = pq[x] + rq;
        }
    }
    Pyramid::build_into(tf.pyramid, gray, pyramid_levels);
    tf.seq = 0;
}

double TrackerFrame::window_mean(const Rect& r) const {
    const std::size_t s = static_cast<std::size_t>(gray.width) + 1;
    const std::int64_t sum = isum[(r.y + r.h) * s + r.x + r.w] - isum[r.y * s + r.x + r.w] -
                             isum[(r.y + r.h) * s + r.x] + isum[r.y * s + r.x];
    return static_cast<double>(sum) / r.area();
}

double TrackerFrame::window_variance(const Rect& r) const {
    const std::size_t s = static_cast<std::size_t>(gray.width) + 1;
    const std::int64_t sum = isum[(r.y + r.h) * s + r.x + r.w] - isum[r.y * s + r.x + r.w] -
                             isum[(r.y + r.h) * s + r.x] + isum[r.y * s + r.x];
    const std::int64_t sq = isq[(r.y + r.h) * s + r.x + r.w] - isq[r.y * s + r.x + r.w] -
                            isq[(r.y + r.h) * s + r.x] + isq[r.y * s + r.x];
    const double n = r.area();
    const double mean = sum / n;
    return std::max(0.0, sq / n - mean * mean);
}

namespace {

double median_of(std::vector<double> v) {
    const std::size_t n = v.size();
    std::sort(v.begin(), v.end());
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double point_ncc(const FloatImage& a, float ax, float ay, const FloatImage& b, float bx, float by, int r) {
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    int n = 0;
    for (int v = -r; v <= r; ++v) {
        for (int u = -r; u <= r; ++u) {
            const double pa = a.sample(ax + u, ay + v);
            const double pb = b.sample(bx + u, by + v);
            sa += pa;
            sb += pb;
            saa += pa * pa;
            sbb += pb * pb;
            sab += pa * pb;
            ++n;
        }
    }
    const double va = saa - sa * sa / n;
    const double vb = sbb - sb * sb / n;
    if (va < 1e-9 || vb < 1e-9) return (va < 1e-9 && vb < 1e-9 && std::abs(sa - sb) < 1e-6 * n) ? 1.0 : 0.0;
    return (sab - sa * sb / n) / std::sqrt(va * vb);
}

}  // namespace

FlowResult median_flow_step(const TrackerFrame& prev, const TrackerFrame& curr, const Rect& bbox,
                            const LkParams& params, double min_ncc) {
    if (!bbox.inside(prev.gray.width, prev.gray.height)) throw ContractViolation("median_flow_step: bbox outside frame");
    if (prev.gray.width != curr.gray.width || prev.gray.height != curr.gray.height)
        throw ContractViolation("median_flow_step: frame size mismatch");

    // Grid over the central part of the box: the margin is mostly background around a compact
    // object, and static background points would pull the median towards zero motion.
    constexpr int kGrid = 10;
    constexpr double kInner = 0.7;
    const double gx0 = bbox.x + 0.5 * (1 - kInner) * bbox.w, gy0 = bbox.y + 0.5 * (1 - kInner) * bbox.h;
    std::vector<std::array<float, 2>> pts;
    pts.reserve(kGrid * kGrid);
    for (int j = 0; j < kGrid; ++j)
        for (int i = 0; i < kGrid; ++i)
            pts.push_back({static_cast<float>(gx0 + (i + 0.5) * kInner * bbox.w / kGrid - 0.5),
                           static_cast<float>(gy0 + (j + 0.5) * kInner * bbox.h / kGrid - 0.5)});

    const auto fwd = lk_track(prev.pyramid, curr.pyramid, pts, params);
    std::vector<std::array<float, 2>> there(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) there[i] = {fwd[i].x, fwd[i].y};
    const auto bwd = lk_track(curr.pyramid, prev.pyramid, there, params);

    std::vector<std::size_t> valid;
    std::vector<double> fb(pts.size(), 0.0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!fwd[i].ok || !bwd[i].ok) continue;
        fb[i] = std::hypot(bwd[i].x - pts[i][0], bwd[i].y - pts[i][1]);
        valid.push_back(i);
    }
    if (valid.size() < 4) throw FlowLost("too few points tracked");

    std::vector<double> fbs;
    for (auto i : valid) fbs.push_back(fb[i]);
    const double fb_med = median_of(fbs);

    const int r = params.window / 2;
    std::vector<std::size_t> kept;
    for (auto i : valid) {
        if (fb[i] > fb_med) continue;
        const double ncc = point_ncc(prev.pyramid.levels[0], pts[i][0], pts[i][1], curr.pyramid.levels[0], fwd[i].x,
                                     fwd[i].y, r);
        if (ncc >= min_ncc) kept.push_back(i);
    }
    if (kept.size() < 4) throw FlowLost("too few reliable points after forward-backward check");

    std::vector<double> dxs, dys, ratios;
    for (auto i : kept) {
        dxs.push_back(fwd[i].x - pts[i][0]);
        dys.push_back(fwd[i].y - pts[i][1]);
    }
    for (std::size_t a = 0; a < kept.size(); ++a) {
        for (std::size_t b = a + 1; b < kept.size(); ++b) {
            const auto i = kept[a], j = kept[b];
            const double d0 = std::hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]);
            const double d1 = std::hypot(fwd[i].x - fwd[j].x, fwd[i].y - fwd[j].y);
            if (d0 > 0) ratios.push_back(d1 / d0);
        }
    }
    const double dx = median_of(dxs);
    const double dy = median_of(dys);
    const double scale = ratios.empty() ? 1.0 : median_of(ratios);
    const int nw = std::max(1, static_cast<int>(std::lround(bbox.w * scale)));
    const int nh = std::max(1, static_cast<int>(std::lround(bbox.h * scale)));
    return {centered_rect(bbox.cx() + dx, bbox.cy() + dy, nw, nh), fb_med, dx, dy, scale};
}

FlowResult median_flow_step(const Frame& prev, const Frame& curr, const Rect& bbox, const LkParams& params) {
    const auto a = TrackerFrame::prepare(prev, params.levels);
    const auto b = TrackerFrame::prepare(curr, params.levels);
    return median_flow_step(a, b, bbox, params);
}

NormalizedPatch normalized_patch(const GrayImage& gray, const Rect& r) {
    NormalizedPatch p{};
    double sum = 0;
    for (int j = 0; j < kPatchSide; ++j) {
        const double sy = std::clamp(r.y + (j + 0.5) * r.h / kPatchSide - 0.5, 0.0, gray.height - 1.0);
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, gray.height - 1);
        const double ay = sy - y0;
        for (int i = 0; i < kPatchSide; ++i) {
            const double sx = std::clamp(r.x + (i + 0.5) * r.w / kPatchSide - 0.5, 0.0, gray.width - 1.0);
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, gray.width - 1);
            const double ax = sx - x0;
            const double top = gray.at(x0, y0) + ax * (gray.at(x1, y0) - gray.at(x0, y0));
            const double bot = gray.at(x0, y1) + ax * (gray.at(x1, y1) - gray.at(x0, y1));
            const double v = top + ay * (bot - top);
            p[j * kPatchSide + i] = static_cast<float>(v);
            sum += v;
        }
    }
    const double mean = sum / p.size();
    double var = 0;
    for (float v : p) var += (v - mean) * (v - mean);
    var /= p.size();
    if (var < 1e-9) {
        p.fill(0.0f);
        return p;
    }
    const double inv = 1.0 / std::sqrt(var);
    for (float& v : p) v = static_cast<float>((v - mean) * inv);
    return p;
}

double patch_similarity(const NormalizedPatch& a, const NormalizedPatch& b) {
    float dot = 0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    const double ncc = std::clamp(static_cast<double>(dot) / a.size(), -1.0, 1.0);
    return 0.5 * (ncc + 1.0);
}

FernEnsemble::FernEnsemble(int n_ferns, int n_comparisons, std::uint32_t seed)
    : n_ferns_(n_ferns), n_cmp_(n_comparisons) {
    if (n_ferns < 1 || n_comparisons < 1 || n_comparisons > 20)
        throw ContractViolation("fern ensemble needs 1..20 comparisons and at least one fern");
    std::mt19937 rng(seed);
    // positions stay in the central 80% of the box, away from background corners
    const auto u = [&rng] { return 0.1f + 0.8f * static_cast<float>((rng() >> 8) * (1.0 / 16777216.0)); };
    features_.resize(static_cast<std::size_t>(n_ferns) * n_comparisons);
    for (auto& f : features_) {
        // horizontal or vertical comparisons, as in the classic 2-bit-BP features
        const float a = u(), b = u(), c = u();
        if (rng() & 1u)
            f = {a, c, b, c};
        else
            f = {c, a, c, b};
    }
    const std::size_t leaves = static_cast<std::size_t>(n_ferns) << n_comparisons;
    pos_.assign(leaves, 0);
    neg_.assign(leaves, 0);
}

void FernEnsemble::codes(const GrayImage& blurred, const Rect& r, std::vector<int>& out) const {
    out.assign(n_ferns_, 0);
    auto px = [&](float fx, float fy) {
        const int x = r.x + std::min(static_cast<int>(fx * r.w), r.w - 1);
        const int y = r.y + std::min(static_cast<int>(fy * r.h), r.h - 1);
        return blurred.at(x, y);
    };
    for (int f = 0; f < n_ferns_; ++f) {
        int code = 0;
        for (int c = 0; c < n_cmp_; ++c) {
            const auto& ft = features_[f * n_cmp_ + c];
            code = (code << 1) | (px(ft[0], ft[1]) > px(ft[2], ft[3]) ? 1 : 0);
        }
        out[f] = code;
    }
}

std::vector<std::array<int, 2>> FernEnsemble::offsets(int w, int h, int stride) const {
    std::vector<std::array<int, 2>> out(features_.size());
    for (std::size_t i = 0; i < features_.size(); ++i) {
        const auto& ft = features_[i];
        const int x1 = std::min(static_cast<int>(ft[0] * w), w - 1), y1 = std::min(static_cast<int>(ft[1] * h), h - 1);
        const int x2 = std::min(static_cast<int>(ft[2] * w), w - 1), y2 = std::min(static_cast<int>(ft[3] * h), h - 1);
        out[i] = {y1 * stride + x1, y2 * stride + x2};
    }
    return out;
}

double FernEnsemble::leaf_posterior(int fern, int code) const {
    const std::size_t i = (static_cast<std::size_t>(fern) << n_cmp_) + code;
    const double p = pos_[i];
    return p == 0 ? 0.0 : p / (p + neg_[i]);
}

double FernEnsemble::posterior(const std::vector<int>& codes) const {
    double sum = 0;
    for (int f = 0; f < n_ferns_; ++f) sum += leaf_posterior(f, codes[f]);
    return sum / n_ferns_;
}

double FernEnsemble::posterior_at(const std::uint8_t* origin, const std::vector<std::array<int, 2>>& offs) const {
    double sum = 0;
    std::size_t k = 0;
    for (int f = 0; f < n_ferns_; ++f) {
        int code = 0;
        for (int c = 0; c < n_cmp_; ++c, ++k) code = (code << 1) | (origin[offs[k][0]] > origin[offs[k][1]] ? 1 : 0);
        sum += leaf_posterior(f, code);
    }
    return sum / n_ferns_;
}

void FernEnsemble::update(const std::vector<int>& codes, bool positive) {
    for (int f = 0; f < n_ferns_; ++f) {
        const std::size_t i = (static_cast<std::size_t>(f) << n_cmp_) + codes[f];
        ++(positive ? pos_ : neg_)[i];
    }
}

double ToolModel::max_positive_similarity(const NormalizedPatch& p) const {
    double best = 0;
    for (const auto& q : positives) best = std::max(best, patch_similarity(p, q));
    return best;
}

double ToolModel::relative_similarity(const NormalizedPatch& p) const {
    const double sp = max_positive_similarity(p);
    // A flat patch correlates with nothing, so 0.5 is the floor of negative similarity.
    double sn = 0.5;
    for (const auto& q : negatives) sn = std::max(sn, patch_similarity(p, q));
    const double dp = 1.0 - sp, dn = 1.0 - sn;
    if (dp + dn <= 0) return 0.5;
    return dn / (dp + dn);
}

namespace {

void enforce_cap(ToolModel& m, int cap) {
    while (static_cast<int>(m.size()) > cap) {
        const bool drop_positive =
            m.positives.size() > 1 && (m.negatives.empty() || m.positives.size() >= m.negatives.size());
        if (drop_positive)
            m.positives.erase(m.positives.begin() + 1);
        else if (!m.negatives.empty())
            m.negatives.erase(m.negatives.begin());
        else
            break;
    }
}

}  // namespace

void ToolModel::add_positive(const NormalizedPatch& p, int cap) {
    positives.push_back(p);
    enforce_cap(*this, cap);
}

void ToolModel::add_negative(const NormalizedPatch& p, int cap) {
    negatives.push_back(p);
    enforce_cap(*this, cap);
}

std::vector<Detection> detect(const TrackerFrame& f, const ToolModel& m, const TrackerConfig& cfg, CascadeTrace* trace,
                              std::vector<Detection>* fern_survivors) {
    std::vector<Detection> cand;
    if (m.positives.empty() || m.ferns.n_ferns() == 0) throw ContractViolation("detect: model not initialized");
    const int W = f.gray.width, H = f.gray.height;
    const double vmin = cfg.variance_fraction * m.seed_variance;
    const std::size_t s = static_cast<std::size_t>(W) + 1;
    for (double sc : cfg.scales) {
        const int w = static_cast<int>(std::lround(m.seed_w * sc));
        const int h = static_cast<int>(std::lround(m.seed_h * sc));
        if (w < 4 || h < 4 || w > W || h > H) continue;
        const int sx = std::max(1, static_cast<int>(std::lround(w * cfg.stride_fraction)));
        const int sy = std::max(1, static_cast<int>(std::lround(h * cfg.stride_fraction)));
        const auto offs = m.ferns.offsets(w, h, W);
        const double n = static_cast<double>(w) * h;
        for (int y = 0; y + h <= H; y += sy) {
            const std::int64_t* st = &f.isum[y * s];
            const std::int64_t* sb = &f.isum[(y + h) * s];
            const std::int64_t* qt = &f.isq[y * s];
            const std::int64_t* qb = &f.isq[(y + h) * s];
            for (int x = 0; x + w <= W; x += sx) {
                if (trace) ++trace->windows;
                const double sum = static_cast<double>(sb[x + w] - st[x + w] - sb[x] + st[x]);
                const double sq = static_cast<double>(qb[x + w] - qt[x + w] - qb[x] + qt[x]);
                const double mean = sum / n;
                if (sq / n - mean * mean < vmin) continue;
                if (trace) trace->variance_pass.push_back({x, y, w, h});
                const double post = m.ferns.posterior_at(&f.blurred.data[static_cast<std::size_t>(y) * W + x], offs);
                if (post <= 0.5) continue;
                cand.push_back({{x, y, w, h}, 0.0, post});
            }
        }
    }
    if (trace)
        for (const auto& c : cand) trace->fern_pass.push_back(c.rect);
    if (fern_survivors) *fern_survivors = cand;

    std::stable_sort(cand.begin(), cand.end(),
                     [](const Detection& a, const Detection& b) { return a.posterior > b.posterior; });
    if (static_cast<int>(cand.size()) > cfg.nn_max_candidates) cand.resize(cfg.nn_max_candidates);
    for (auto& c : cand) c.similarity = m.relative_similarity(normalized_patch(f.gray, c.rect));
    std::stable_sort(cand.begin(), cand.end(),
                     [](const Detection& a, const Detection& b) { return a.similarity > b.similarity; });
    if (trace) trace->scored = cand;
    return cand;
}

std::vector<Detection> detect(const Frame& frame, const ToolModel& model, const TrackerConfig& cfg) {
    return detect(TrackerFrame::prepare(frame, 1), model, cfg);
}

Tracker::Tracker(TrackerConfig cfg) : cfg_(cfg) {
    lk_.levels = cfg_.pyramid_levels;
    lk_.window = cfg_.lk_window;
}

namespace {

// Resamples the window r of src under a small rotation/scale/shift about its centre, with
// additive noise; used to synthesise positive examples of the seed.
GrayImage warp_window(const GrayImage& src, const Rect& r, double angle, double scale, double dx, double dy,
                      double noise, std::mt19937& rng) {
    GrayImage out(r.w, r.h);
    const double c = std::cos(angle) / scale, s = std::sin(angle) / scale;
    const double cx = r.x + r.w / 2.0 - 0.5, cy = r.y + r.h / 2.0 - 0.5;
    for (int v = 0; v < r.h; ++v) {
        for (int u = 0; u < r.w; ++u) {
            const double ox = u - r.w / 2.0 + 0.5, oy = v - r.h / 2.0 + 0.5;
            const double sx = std::clamp(cx + dx + c * ox - s * oy, 0.0, src.width - 1.0);
            const double sy = std::clamp(cy + dy + s * ox + c * oy, 0.0, src.height - 1.0);
            const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
            const int x1 = std::min(x0 + 1, src.width - 1), y1 = std::min(y0 + 1, src.height - 1);
            const double ax = sx - x0, ay = sy - y0;
            const double top = src.at(x0, y0) + ax * (src.at(x1, y0) - src.at(x0, y0));
            const double bot = src.at(x0, y1) + ax * (src.at(x1, y1) - src.at(x0, y1));
            const double n = noise * (2.0 * ((rng() >> 8) * (1.0 / 16777216.0)) - 1.0);
            out.at(u, v) = static_cast<std::uint8_t>(std::clamp(top + ay * (bot - top) + n, 0.0, 255.0));
        }
    }
    return out;
}

double unit_draw(std::mt19937& rng) { return (rng() >> 8) * (1.0 / 16777216.0); }

}  // namespace

TrackEstimate Tracker::init(const Frame& frame, const Rect& seed) {
    if (!seed.inside(frame.width(), frame.height())) throw ContractViolation("tracker seed outside frame");
    TrackerFrame cur = TrackerFrame::prepare(frame, cfg_.pyramid_levels);
    const double var = cur.window_variance(seed);
    if (var < cfg_.var_min) throw BadSeed("seed patch variance " + std::to_string(var) + " below minimum");

    model_ = ToolModel{};
    model_.seed_w = seed.w;
    model_.seed_h = seed.h;
    model_.seed_variance = var;
    model_.ferns = FernEnsemble(cfg_.n_ferns, cfg_.n_comparisons, cfg_.seed);

    const int W = frame.width(), H = frame.height();
    model_.positives.push_back(normalized_patch(cur.gray, seed));
    for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
        const Rect r{seed.x + dx, seed.y + dy, seed.w, seed.h};
        if (r.inside(W, H)) model_.add_positive(normalized_patch(cur.gray, r), cfg_.model_cap);
    }

    std::vector<int> codes;
    for (double sc : {0.95, 1.0, 1.05}) {
        const int w = static_cast<int>(std::lround(seed.w * sc)), h = static_cast<int>(std::lround(seed.h * sc));
        for (int dy = -2; dy <= 2; ++dy) {
            for (int dx = -2; dx <= 2; ++dx) {
                const Rect r = centered_rect(seed.cx() + dx, seed.cy() + dy, w, h);
                if (!r.inside(W, H)) continue;
                model_.ferns.codes(cur.blurred, r, codes);
                model_.ferns.update(codes, true);
            }
        }
    }

    // warped copies of the seed widen the positive leaves beyond the exact first view
    std::mt19937 wrng(cfg_.seed ^ 0x9E3779B9u);
    const Rect local{0, 0, seed.w, seed.h};
    for (int k = 0; k < kInitWarps; ++k) {
        const double angle = (2 * unit_draw(wrng) - 1) * 0.35;
        const double scale = 1 + (2 * unit_draw(wrng) - 1) * 0.03;
        const double dx = (2 * unit_draw(wrng) - 1), dy = (2 * unit_draw(wrng) - 1);
        const GrayImage warped = warp_window(cur.gray, seed, angle, scale, dx, dy, 8.0, wrng);
        const TrackerFrame wf = TrackerFrame::prepare(warped, 1);
        model_.ferns.codes(wf.blurred, local, codes);
        model_.ferns.update(codes, true);
        if (k % 10 == 0) model_.add_positive(normalized_patch(warped, local), cfg_.model_cap);
    }

    CascadeTrace trace;
    detect(cur, model_, cfg_, &trace);
    std::vector<Rect> background;
    for (const auto& r : trace.variance_pass)
        if (iou(r, seed) < 0.2) background.push_back(r);
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& r : background) {
            model_.ferns.codes(cur.blurred, r, codes);
            if (model_.ferns.posterior(codes) >= 0.5) model_.ferns.update(codes, false);
        }
    }
    // Nearest-neighbour negatives from an even sample of textured background windows.
    const std::size_t step = std::max<std::size_t>(1, background.size() / 100);
    for (std::size_t i = 0; i < background.size() && static_cast<int>(model_.size()) < cfg_.model_cap / 2; i += step) {
        const auto p = normalized_patch(cur.gray, background[i]);
        if (model_.relative_similarity(p) > 0.5) model_.add_negative(p, cfg_.model_cap);
    }

    last_ = TrackEstimate{seed, seed.cx(), seed.cy(), 1.0, true, TrackSource::Tracked};
    prev_ = std::move(cur);
    initialized_ = true;
    return last_;
}

double Tracker::validate(const TrackerFrame& cur, const Rect& box) const {
    if (cur.window_variance(box) < cfg_.variance_fraction * model_.seed_variance) return 0.0;
    return model_.relative_similarity(normalized_patch(cur.gray, box));
}

TrackEstimate Tracker::step(const Frame& frame) { return step(to_gray(frame), frame.seq()); }

TrackEstimate Tracker::step(const GrayImage& gray, std::uint64_t seq) {
    if (!initialized_) throw ContractViolation("tracker step before init");
    if (seq <= prev_.seq) throw ContractViolation("tracker frames out of order");
    if (gray.width != prev_.gray.width || gray.height != prev_.gray.height)
        throw ContractViolation("tracker frame size changed");
    TrackerFrame cur = std::move(spare_);
    TrackerFrame::prepare_into(cur, gray, cfg_.pyramid_levels);
    cur.seq = seq;
    last_ = fuse(cur);
    spare_ = std::move(prev_);
    prev_ = std::move(cur);
    return last_;
}

TrackEstimate Tracker::fuse(const TrackerFrame& cur) {
    const int W = cur.gray.width, H = cur.gray.height;
    Rect tbox;
    double tcx = 0, tcy = 0;
    double conf_t = 0;
    bool tracked = false;
    if (last_.valid) {
        try {
            const auto fr = median_flow_step(prev_, cur, last_.bbox, lk_, cfg_.flow_min_ncc);
            if (fr.fb_error <= cfg_.max_fb_error) {
                const int w = std::clamp(fr.bbox.w, static_cast<int>(std::lround(model_.seed_w * cfg_.scales.front())),
                                         static_cast<int>(std::lround(model_.seed_w * cfg_.scales.back())));
                const int h = std::clamp(fr.bbox.h, static_cast<int>(std::lround(model_.seed_h * cfg_.scales.front())),
                                         static_cast<int>(std::lround(model_.seed_h * cfg_.scales.back())));
                // the centre is carried at subpixel precision so rounding does not accumulate
                tcx = last_.cx + fr.dx;
                tcy = last_.cy + fr.dy;
                Rect b = centered_rect(tcx, tcy, std::min(w, W), std::min(h, H));
                const Rect unclamped = b;
                b.x = std::clamp(b.x, 0, W - b.w);
                b.y = std::clamp(b.y, 0, H - b.h);
                if (!(b == unclamped)) {
                    tcx = b.cx();
                    tcy = b.cy();
                }
                tbox = b;
                conf_t = validate(cur, b);
                tracked = conf_t >= cfg_.confidence_floor;
            }
        } catch (const FlowLost&) {
        }
    }

    std::vector<Detection> survivors;
    const auto dets = detect(cur, model_, cfg_, nullptr, &survivors);
    const Detection* best =
        (!dets.empty() && dets.front().similarity >= cfg_.detection_min_similarity) ? &dets.front() : nullptr;

    TrackEstimate est;
    auto from_detection = [&](const Detection& d) {
        est = TrackEstimate{d.rect, d.rect.cx(), d.rect.cy(), d.similarity, true, TrackSource::Detected};
    };
    if (tracked) {
        if (best && best->similarity > conf_t && iou(best->rect, tbox) < 0.5)
            from_detection(*best);
        else
            est = TrackEstimate{tbox, tcx, tcy, conf_t, true, TrackSource::Tracked};
    } else if (best) {
        from_detection(*best);
    } else {
        est = TrackEstimate{last_.bbox, last_.cx, last_.cy, 0.0, false, TrackSource::Lost};
    }

    if (est.source == TrackSource::Tracked && est.confidence >= cfg_.learn_min_confidence)
        learn(cur, est.bbox, survivors);
    return est;
}

void Tracker::learn(const TrackerFrame& cur, const Rect& box, const std::vector<Detection>& survivors) {
    const int W = cur.gray.width, H = cur.gray.height;
    const auto p = normalized_patch(cur.gray, box);
    if (model_.max_positive_similarity(p) < 0.95) model_.add_positive(p, cfg_.model_cap);

    std::vector<int> codes;
    for (int dy = -2; dy <= 2; dy += 2) {
        for (int dx = -2; dx <= 2; dx += 2) {
            const Rect r{box.x + dx, box.y + dy, box.w, box.h};
            if (!r.inside(W, H)) continue;
            model_.ferns.codes(cur.blurred, r, codes);
            if (model_.ferns.posterior(codes) <= 0.5) model_.ferns.update(codes, true);
        }
    }

    std::vector<const Detection*> far;
    for (const auto& d : survivors)
        if (iou(d.rect, box) < 0.2) far.push_back(&d);
    for (const auto* d : far) {
        model_.ferns.codes(cur.blurred, d->rect, codes);
        if (model_.ferns.posterior(codes) > 0.5) model_.ferns.update(codes, false);
    }
    std::stable_sort(far.begin(), far.end(),
                     [](const Detection* a, const Detection* b) { return a->posterior > b->posterior; });
    const std::size_t n = std::min<std::size_t>(far.size(), 10);
    for (std::size_t i = 0; i < n; ++i) {
        const auto q = normalized_patch(cur.gray, far[i]->rect);
        if (model_.relative_similarity(q) > 0.5) model_.add_negative(q, cfg_.model_cap);
    }
}

}  // namespace netoas
