#include "netoas/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "netoas/activity_fsm.hpp"

namespace netoas {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kNoiseBits = 21;
constexpr std::uint8_t kRingRgb[3] = {50, 170, 50};
constexpr std::uint8_t kRodGray = 50;
constexpr std::uint8_t kHeadGray = 225;
constexpr std::uint8_t kSlitGray = 45;
constexpr std::uint8_t kPegGray = 150;
constexpr std::uint8_t kLitGray = 235;
constexpr double kRodHalfWidth = 4.0;
constexpr double kSlitHalfWidth = 1.5;

// Portable draws: the standard distributions are implementation-defined.
double unit(std::mt19937& r) { return (r() >> 5) * (1.0 / 134217728.0); }
double uniform(std::mt19937& r, double a, double b) { return a + (b - a) * unit(r); }
int uniform_int(std::mt19937& r, int a, int b) { return a + static_cast<int>(r() % static_cast<unsigned>(b - a + 1)); }
bool chance(std::mt19937& r, double p) { return unit(r) < p; }
double gaussian(std::mt19937& r) {
    const double u1 = 1.0 - unit(r);
    const double u2 = unit(r);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2 * kPi * u2);
}

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::array<double, 2> unit_toward_pivot(double x, double y) {
    const double dx = kPivotX - x, dy = kPivotY - y;
    const double n = std::hypot(dx, dy);
    return {dx / n, dy / n};
}

}  // namespace

Persona Persona::novice() {
    Persona p;
    p.name = "novice";
    p.base_speed = 4.0;
    p.speed_modulation = 0.6;
    p.jitter_amplitude = 6.0;
    p.jitter_half_period = 5;
    p.overshoot_prob = 0.5;
    p.hits_per_minute = 12.0;
    p.tug_prob = 0.6;
    p.drop_prob = 0.5;
    p.hold_min = 40;
    p.hold_max = 70;
    return p;
}

Persona Persona::improved() {
    Persona p;
    p.name = "improved";
    p.base_speed = 6.0;
    p.speed_modulation = 0.1;
    p.jitter_amplitude = 0.0;
    p.overshoot_prob = 0.1;
    p.hits_per_minute = 3.0;
    p.tug_prob = 0.15;
    p.drop_prob = 0.1;
    p.hold_min = 12;
    p.hold_max = 25;
    return p;
}

Persona Persona::from_name(const std::string& name) {
    if (name == "novice") return novice();
    if (name == "improved") return improved();
    throw ContractViolation("unknown persona '" + name + "' (expected novice or improved)");
}

void Persona::validate() const {
    for (double p : {overshoot_prob, tug_prob, drop_prob})
        if (p < 0 || p > 1) throw ContractViolation("persona probabilities must lie in [0,1]");
    if (base_speed < 3 || hold_min < 1 || hold_max < hold_min || jitter_half_period < 1 || hits_per_minute < 0)
        throw ContractViolation("persona parameters out of range");
}

Level Level::parse(const std::string& text) {
    Level l;
    std::string angle = text, tilt;
    const auto dash = text.find('-');
    if (dash != std::string::npos) {
        angle = text.substr(0, dash);
        tilt = text.substr(dash + 1);
    }
    try {
        l.scope_deg = angle.empty() ? 0 : std::stoi(angle);
    } catch (const std::exception&) {
        throw ContractViolation("bad level '" + text + "'");
    }
    if (l.scope_deg != 0 && l.scope_deg != 30 && l.scope_deg != 45)
        throw ContractViolation("scope angle must be 0, 30 or 45");
    if (tilt.empty() || tilt == "straight")
        l.tilt = Tilt::Straight;
    else if (tilt == "left")
        l.tilt = Tilt::Left;
    else if (tilt == "right")
        l.tilt = Tilt::Right;
    else
        throw ContractViolation("tilt must be straight, left or right");
    return l;
}

SceneLayout SceneLayout::standard(int width, int height, Level level) {
    SceneLayout L;
    L.width = width;
    L.height = height;
    const double sx = width / 640.0, sy = height / 480.0;
    const double cx = width / 2.0, cy = height / 2.0;
    const double squash = std::sqrt(std::cos(level.scope_deg * kPi / 180.0));
    const double rot = level.tilt == Tilt::Left ? -8.0 : level.tilt == Tilt::Right ? 8.0 : 0.0;
    const double c = std::cos(rot * kPi / 180.0), s = std::sin(rot * kPi / 180.0);
    const double xs[4] = {110, 250, 390, 530};
    const double ys[3] = {110, 240, 370};
    for (int r = 0; r < 3; ++r) {
        for (int k = 0; k < 4; ++k) {
            const double dx = (xs[k] * sx - cx);
            const double dy = (ys[r] * sy - cy) * squash;
            L.pegs[r * 4 + k] = {std::round(cx + c * dx - s * dy), std::round(cy + s * dx + c * dy)};
        }
    }
    return L;
}

SceneRenderer::SceneRenderer(SceneLayout layout, std::uint32_t texture_seed, double noise_sigma)
    : layout_(layout), noise_sigma_(noise_sigma), base_(layout.width, layout.height) {
    std::mt19937 r(texture_seed);
    struct Wave {
        double kx, ky, phase;
    };
    std::array<Wave, 6> waves{};
    for (int k = 0; k < 6; ++k) {
        const double a = k * kPi / 6 + uniform(r, -0.2, 0.2);
        const double period = uniform(r, 20, 28);
        waves[k] = {2 * kPi * std::cos(a) / period, 2 * kPi * std::sin(a) / period, uniform(r, 0, 2 * kPi)};
    }
    const double scale = 25.0 / std::sqrt(3.0);
    for (int y = 0; y < layout.height; ++y) {
        for (int x = 0; x < layout.width; ++x) {
            double s = 0;
            for (const auto& w : waves) s += std::sin(w.kx * x + w.ky * y + w.phase);
            base_.at(x, y) = static_cast<std::uint8_t>(std::clamp(120.0 + scale * s, 30.0, 210.0));
        }
    }
    const double pr = layout.peg_radius;
    for (const auto& p : layout.pegs)
        for (int y = static_cast<int>(p[1] - pr); y <= static_cast<int>(p[1] + pr); ++y)
            for (int x = static_cast<int>(p[0] - pr); x <= static_cast<int>(p[0] + pr); ++x)
                if (x >= 0 && y >= 0 && x < layout.width && y < layout.height &&
                    (x - p[0]) * (x - p[0]) + (y - p[1]) * (y - p[1]) <= pr * pr)
                    base_.at(x, y) = kPegGray;

    base_rgb_.resize(base_.data.size() * 3);
    for (std::size_t i = 0; i < base_.data.size(); ++i)
        base_rgb_[3 * i] = base_rgb_[3 * i + 1] = base_rgb_[3 * i + 2] = base_.data[i];

    std::mt19937 nr(0x5EEDu);
    noise_.resize(std::size_t{1} << kNoiseBits);
    for (auto& n : noise_) n = static_cast<std::int8_t>(std::clamp(std::lround(noise_sigma * gaussian(nr)), -127l, 127l));
}

bool SceneRenderer::in_ring(const RingPose& ring, int x, int y) const {
    const double dx = x - ring.cx, dy = y - ring.cy;
    const double c = std::cos(ring.axis), s = std::sin(ring.axis);
    const double k = std::sqrt(ring.deform);
    const double a = (dx * c + dy * s) / k;
    const double b = (-dx * s + dy * c) * k;
    const double r2 = a * a + b * b;
    return r2 >= kRingInner * kRingInner && r2 <= kRingOuter * kRingOuter;
}

bool SceneRenderer::in_tool(const ToolPose& t, int x, int y) const {
    const double px = x - t.x, py = y - t.y;
    if (px * px + py * py <= kHeadRadius * kHeadRadius) return true;
    const auto d = unit_toward_pivot(t.x, t.y);
    const double along = px * d[0] + py * d[1];
    const double perp = std::abs(px * d[1] - py * d[0]);
    return along >= 0 && perp <= kRodHalfWidth;
}

namespace {

struct Box {
    int x0, y0, x1, y1;  // inclusive
};

Box ring_bounds(const RingPose& r, int w, int h) {
    const double ext = kRingOuter * std::sqrt(r.deform) + 2;
    return {std::max(0, static_cast<int>(std::floor(r.cx - ext))), std::max(0, static_cast<int>(std::floor(r.cy - ext))),
            std::min(w - 1, static_cast<int>(std::ceil(r.cx + ext))),
            std::min(h - 1, static_cast<int>(std::ceil(r.cy + ext)))};
}

}  // namespace

long SceneRenderer::ring_pixel_count(const RingPose& ring) const {
    long n = 0;
    const Box b = ring_bounds(ring, layout_.width, layout_.height);
    for (int y = b.y0; y <= b.y1; ++y)
        for (int x = b.x0; x <= b.x1; ++x) n += in_ring(ring, x, y);
    return n;
}

std::vector<std::array<int, 2>> SceneRenderer::visible_ring_pixels(const SceneState& s) const {
    std::vector<std::array<int, 2>> out;
    if (!s.ring.visible) return out;
    const Box b = ring_bounds(s.ring, layout_.width, layout_.height);
    for (int y = b.y0; y <= b.y1; ++y)
        for (int x = b.x0; x <= b.x1; ++x)
            if (in_ring(s.ring, x, y) && !(s.tool.visible && in_tool(s.tool, x, y))) out.push_back({x, y});
    return out;
}

Frame SceneRenderer::render(const SceneState& s, std::uint64_t seq, std::int64_t timestamp_ms,
                            std::uint64_t noise_key) const {
    const int W = layout_.width, H = layout_.height;
    Frame f(W, H, base_rgb_, seq, timestamp_ms);
    auto px = f.pixels();
    if (s.shift.active) {
        const auto& sh = s.shift;
        const int y0 = std::max(0, static_cast<int>(sh.cy - sh.radius)), y1 = std::min(H - 1, static_cast<int>(sh.cy + sh.radius));
        for (int y = y0; y <= y1; ++y) {
            for (int x = std::max(0, static_cast<int>(sh.cx - sh.radius)); x <= std::min(W - 1, static_cast<int>(sh.cx + sh.radius)); ++x) {
                if ((x - sh.cx) * (x - sh.cx) + (y - sh.cy) * (y - sh.cy) > sh.radius * sh.radius) continue;
                const int sxp = std::clamp(x - sh.dx, 0, W - 1), syp = std::clamp(y - sh.dy, 0, H - 1);
                std::uint8_t* o = f.at(x, y);
                o[0] = o[1] = o[2] = base_.at(sxp, syp);
            }
        }
    }
    if (s.lit_peg >= 1 && s.lit_peg <= 12) {
        const auto& p = layout_.pegs[s.lit_peg - 1];
        const double pr = layout_.peg_radius;
        for (int y = static_cast<int>(p[1] - pr); y <= static_cast<int>(p[1] + pr); ++y)
            for (int x = static_cast<int>(p[0] - pr); x <= static_cast<int>(p[0] + pr); ++x)
                if (x >= 0 && y >= 0 && x < W && y < H && (x - p[0]) * (x - p[0]) + (y - p[1]) * (y - p[1]) <= pr * pr) {
                    std::uint8_t* o = f.at(x, y);
                    o[0] = o[1] = o[2] = kLitGray;
                }
    }
    if (s.ring.visible) {
        const Box b = ring_bounds(s.ring, W, H);
        for (int y = b.y0; y <= b.y1; ++y)
            for (int x = b.x0; x <= b.x1; ++x)
                if (in_ring(s.ring, x, y)) std::copy(kRingRgb, kRingRgb + 3, f.at(x, y));
    }
    if (s.tool.visible) {
        const auto& t = s.tool;
        const auto d = unit_toward_pivot(t.x, t.y);
        // rod: per row, test pixels near the strip's analytic span
        const double far_y = t.y + d[1] * 2000;
        const int ry0 = std::max(0, static_cast<int>(std::floor(std::min(t.y, far_y) - kRodHalfWidth - 1)));
        const int ry1 = std::min(H - 1, static_cast<int>(std::ceil(std::max(t.y, far_y) + kRodHalfWidth + 1)));
        for (int y = ry0; y <= ry1; ++y) {
            // centre line x at this row, widened by the strip half-width across the slope
            const double along_y = (y - t.y);
            double xc, half;
            if (std::abs(d[1]) > 1e-9) {
                xc = t.x + along_y * d[0] / d[1];
                half = kRodHalfWidth / std::abs(d[1]) + 2;
            } else {
                xc = W / 2.0;
                half = W;
            }
            const int x0 = std::max(0, static_cast<int>(std::floor(xc - half)));
            const int x1 = std::min(W - 1, static_cast<int>(std::ceil(xc + half)));
            for (int x = x0; x <= x1; ++x) {
                const double px_ = x - t.x, py_ = y - t.y;
                const double along = px_ * d[0] + py_ * d[1];
                const double perp = std::abs(px_ * d[1] - py_ * d[0]);
                if (along >= 0 && perp <= kRodHalfWidth) {
                    std::uint8_t* o = f.at(x, y);
                    o[0] = o[1] = o[2] = kRodGray;
                }
            }
        }
        const int hr = static_cast<int>(kHeadRadius) + 1;
        for (int y = std::max(0, static_cast<int>(t.y) - hr); y <= std::min(H - 1, static_cast<int>(t.y) + hr); ++y) {
            for (int x = std::max(0, static_cast<int>(t.x) - hr); x <= std::min(W - 1, static_cast<int>(t.x) + hr); ++x) {
                const double px_ = x - t.x, py_ = y - t.y;
                if (px_ * px_ + py_ * py_ > kHeadRadius * kHeadRadius) continue;
                const double perp = std::abs(px_ * d[1] - py_ * d[0]);
                const double along = px_ * d[0] + py_ * d[1];
                // jaw slit along the shaft and the hinge pin across it
                const bool dark = perp <= kSlitHalfWidth || std::abs(along - 2.0) <= kSlitHalfWidth;
                std::uint8_t* o = f.at(x, y);
                o[0] = o[1] = o[2] = dark ? kSlitGray : kHeadGray;
            }
        }
    }
    if (noise_sigma_ > 0) {
        // the table is walked in contiguous runs so the clamp loop vectorizes
        const std::size_t table = noise_.size();
        std::size_t off = static_cast<std::size_t>(splitmix(noise_key)) & (table - 1);
        std::uint8_t* p = px.data();
        std::size_t left = px.size();
        while (left > 0) {
            const std::size_t len = std::min(left, table - off);
            const std::int8_t* q = &noise_[off];
            for (std::size_t k = 0; k < len; ++k) {
                const int v = p[k] + q[k];
                p[k] = static_cast<std::uint8_t>(v < 0 ? 0 : v > 255 ? 255 : v);
            }
            p += len;
            left -= len;
            off = 0;
        }
    }
    return f;
}

Rect tool_box_at(double x, double y) { return centered_rect(x, y, kToolBox, kToolBox); }

std::size_t GroundTruth::count(EventKind k) const {
    return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [k](const GtEvent& e) { return e.kind == k; }));
}

nlohmann::json GroundTruth::to_json() const {
    nlohmann::json j;
    j["fps"] = fps;
    j["persona"] = persona;
    j["seed"] = seed;
    j["start_peg"] = start_peg;
    j["ring_area"] = ring_area;
    j["ring_diameter"] = ring_diameter;
    auto& fr = j["frames"] = nlohmann::json::array();
    for (const auto& f : frames)
        fr.push_back({{"seq", f.seq},
                      {"status", to_string(f.status)},
                      {"ring_id", f.ring_peg},
                      {"led_id", f.led_peg},
                      {"tool_visible", f.tool_visible},
                      {"tool_bbox", {{"x", f.tool_bbox.x}, {"y", f.tool_bbox.y}, {"w", f.tool_bbox.w}, {"h", f.tool_bbox.h}}}});
    auto& ev = j["events"] = nlohmann::json::array();
    for (const auto& e : events) ev.push_back({{"kind", to_string(e.kind)}, {"seq", e.seq}, {"value", e.value}});
    auto& pl = j["placements"] = nlohmann::json::array();
    for (const auto& p : placements)
        pl.push_back({{"from", p.from_peg}, {"to", p.to_peg}, {"start_seq", p.start_seq}, {"end_seq", p.end_seq}});
    return j;
}

// Turns a persona into a per-frame list of scene states.
class ScriptBuilder {
public:
    ScriptBuilder(ScriptedSession& s, const Persona& p, std::uint32_t seed)
        : s_(s), p_(p), rng_(static_cast<std::uint32_t>(splitmix(seed) & 0xFFFFFFFFu)) {}

    SceneState cur;
    std::vector<std::size_t> drop_marks;

    const std::array<double, 2>& peg(int k) const { return s_.renderer_.layout().pegs[k - 1]; }
    std::mt19937& rng() { return rng_; }
    std::size_t frames() const { return s_.states_.size(); }

    void emit() {
        if (attached_) {
            const double k = std::sqrt(cur.ring.deform);
            cur.ring.cx = cur.tool.x + off_[0] * k;
            cur.ring.cy = cur.tool.y + off_[1] * k;
            cur.ring.axis = std::atan2(off_[1], off_[0]);
        }
        s_.states_.push_back(cur);
    }
    void idle(int n) {
        for (int i = 0; i < n; ++i) emit();
    }
    void attach() {
        attached_ = true;
        off_ = {cur.ring.cx - cur.tool.x, cur.ring.cy - cur.tool.y};
    }
    void detach() {
        attached_ = false;
        cur.ring.deform = 1.0;
    }
    std::array<double, 2> offset() const { return off_; }

    // Straight move of the head. Persona style adds speed wobble and a lateral zigzag that fade out
    // near the end; the final approach always runs at >= 3 px/frame and stops abruptly.
    void travel(double tx, double ty, double speed, bool styled, int ease_in = 0) {
        const double sx = cur.tool.x, sy = cur.tool.y;
        const double total = std::hypot(tx - sx, ty - sy);
        if (total < 1e-9) return;
        const double ux = (tx - sx) / total, uy = (ty - sy) / total;
        double s = 0;
        int k = 0;
        const double phase = uniform(rng_, 0, 2 * kPi);
        while (s < total) {
            const double remaining = total - s;
            double sp = speed;
            if (k < ease_in) sp *= (k + 1.0) / (ease_in + 1.0);
            if (styled && remaining > 30) sp *= 1.0 + p_.speed_modulation * std::sin(2 * kPi * k / 12.0 + phase);
            if (remaining <= 30) sp = std::max(sp, std::max(3.0, speed));
            sp = std::max(sp, 1.0);
            s = std::min(total, s + sp);
            double lat = 0;
            if (styled && p_.jitter_amplitude > 0) {
                const int hp = p_.jitter_half_period;
                const int m = k % (2 * hp);
                const double tri = m < hp ? -1.0 + 2.0 * m / hp : 1.0 - 2.0 * (m - hp) / hp;
                const double fade = std::clamp((total - s - 5.0) / 30.0, 0.0, 1.0) * std::clamp(s / 20.0, 0.0, 1.0);
                lat = p_.jitter_amplitude * tri * fade;
            }
            cur.tool.x = sx + ux * s - uy * lat;
            cur.tool.y = sy + uy * s + ux * lat;
            emit();
            ++k;
        }
    }

private:
    ScriptedSession& s_;
    const Persona& p_;
    std::mt19937 rng_;
    bool attached_ = false;
    std::array<double, 2> off_{0, 0};
};

ScriptedSession::ScriptedSession(SceneLayout layout, int fps, std::uint32_t seed, double noise_sigma)
    : fps_(fps), seed_(seed), renderer_(layout, seed * 7919u + 13u, noise_sigma) {
    truth_.fps = fps;
    truth_.seed = seed;
}

ScriptedSession::ScriptedSession(const Persona& persona, int n_placements, int fps, std::uint32_t seed, Level level,
                                 double noise_sigma)
    : ScriptedSession(SceneLayout::standard(640, 480, level), fps, seed, noise_sigma) {
    persona.validate();
    if (n_placements < 1) throw ContractViolation("script_session needs at least one placement");
    if (fps != 25 && fps != 50) throw ContractViolation("fps must be 25 or 50");
    truth_.persona = persona.name;

    ScriptBuilder b(*this, persona, seed);
    std::mt19937 targets(seed);
    auto& r = b.rng();
    const int start = uniform_int(r, 1, 12);
    int ring_peg = start;
    int led = draw_target(targets, ring_peg);
    // speeds scale with frame rate so that a 25 fps script covers the same ground per second
    const double fs = 50.0 / fps;
    const double v = persona.base_speed * fs;

    b.cur.ring = RingPose{b.peg(start)[0], b.peg(start)[1], 1.0, 0.0, true};
    b.cur.tool = ToolPose{kRestX, kRestY, true};
    b.idle(8);

    for (int n = 0; n < n_placements; ++n) {
        const auto src = b.peg(ring_peg);
        const auto tgt = b.peg(led);
        const auto u = unit_toward_pivot(src[0], src[1]);
        const double gx = src[0] + kGripOffset * u[0], gy = src[1] + kGripOffset * u[1];
        b.travel(gx + 50 * u[0], gy + 50 * u[1], v, true, 3);
        b.travel(gx, gy, std::max(3.0, 0.8 * v), false);
        b.idle(3);
        b.attach();

        // lift towards the target
        const double dd = std::hypot(tgt[0] - src[0], tgt[1] - src[1]);
        const double lx = (tgt[0] - src[0]) / dd, ly = (tgt[1] - src[1]) / dd;
        b.travel(b.cur.tool.x + 20 * lx, b.cur.tool.y + 20 * ly, 4.0 * fs, false);

        int hold = uniform_int(r, persona.hold_min, persona.hold_max);
        const bool tug = chance(r, persona.tug_prob);
        if (tug) {
            hold = std::max(hold, 24);
            b.idle(4);
            for (double d : {1.9, 2.4, 2.8, 2.8, 2.8, 2.8, 2.8, 2.8, 2.8, 2.8, 2.0, 1.2}) {
                b.cur.ring.deform = d;
                b.idle(1);
            }
            b.cur.ring.deform = 1.0;
            b.idle(hold - 16);
        } else {
            b.idle(hold);
        }

        // transport, optionally dropping the ring part way
        const auto off = b.offset();
        const double hx = tgt[0] - off[0], hy = tgt[1] - off[1];
        if (chance(r, persona.drop_prob)) {
            const double f = uniform(r, 0.45, 0.6);
            const double px = b.cur.tool.x + f * (hx - b.cur.tool.x), py = b.cur.tool.y + f * (hy - b.cur.tool.y);
            b.travel(px, py, v, true, 8);
            b.detach();
            b.drop_marks.push_back(b.frames());
            const auto du = unit_toward_pivot(b.cur.tool.x, b.cur.tool.y);
            const double away = std::max(4.0 * fs, v);
            b.travel(b.cur.tool.x + 80 * du[0], b.cur.tool.y + 80 * du[1], away, false);
            b.idle(5);
            b.travel(b.cur.ring.cx - off[0], b.cur.ring.cy - off[1], std::max(3.0, v), false, 3);
            b.idle(3);
            b.attach();
        }
        if (chance(r, persona.overshoot_prob)) {
            const double tx = hx - b.cur.tool.x, ty = hy - b.cur.tool.y;
            const double tl = std::hypot(tx, ty);
            double ox = -ty / tl * 48, oy = tx / tl * 48;
            if (chance(r, 0.5)) ox = -ox, oy = -oy;
            const auto inside = [](double x, double y) { return x > 40 && y > 40 && x < 600 && y < 440; };
            if (!inside(hx + ox - off[0] * 0, hy + oy) || !inside(hx + ox + off[0], hy + oy + off[1])) ox = -ox, oy = -oy;
            b.travel(hx + ox, hy + oy, v, true, 8);
            b.idle(6);
            b.travel(hx, hy, std::max(3.0, 0.8 * v), false, 3);
        } else {
            b.travel(hx, hy, v, true, 8);
        }
        b.idle(4);
        b.detach();
        ring_peg = led;
        led = draw_target(targets, ring_peg);
        const auto ru = unit_toward_pivot(b.cur.tool.x, b.cur.tool.y);
        b.travel(b.cur.tool.x + 40 * ru[0], b.cur.tool.y + 40 * ru[1], 4.0 * fs, false);
        b.idle(6);
    }
    b.travel(kRestX, kRestY, v, false, 3);
    b.idle(10);

    // board strikes: a local displacement of the board texture lasting two frames
    const double p_hit = persona.hits_per_minute / (60.0 * fps);
    std::vector<std::size_t> hits;
    for (std::size_t i = 5; i + 8 < states_.size(); ++i) {
        if (!hits.empty() && i - hits.back() < 25) continue;
        if (!chance(r, p_hit)) continue;
        hits.push_back(i);
        BoardShift sh;
        sh.active = true;
        sh.cx = uniform(r, 120, 520);
        sh.cy = uniform(r, 100, 380);
        sh.radius = uniform(r, 170, 260);
        const double a = uniform(r, 0, 2 * kPi);
        sh.dx = static_cast<int>(std::lround(5 * std::cos(a)));
        sh.dy = static_cast<int>(std::lround(5 * std::sin(a)));
        if (sh.dx == 0 && sh.dy == 0) sh.dx = 5;
        states_[i].shift = sh;
        states_[i + 1].shift = sh;
    }

    compute_truth(start, true);
    for (auto i : hits) truth_.events.push_back({EventKind::Hit, i + 1, 0});
    for (std::size_t i = 1; i < states_.size(); ++i)
        if (states_[i].ring.deform >= 1.9 && states_[i - 1].ring.deform < 1.9)
            truth_.events.push_back({EventKind::Tug, i + 1, states_[i].ring.deform});
    for (auto m : b.drop_marks) {
        for (std::size_t i = m; i < states_.size(); ++i) {
            const auto pix = renderer_.visible_ring_pixels(states_[i]);
            double best = 1e18;
            for (const auto& p : pix)
                best = std::min(best, std::hypot(p[0] - states_[i].tool.x, p[1] - states_[i].tool.y));
            if (best > truth_.ring_diameter) {
                truth_.events.push_back({EventKind::Drop, i + 1, best});
                break;
            }
        }
    }
    std::stable_sort(truth_.events.begin(), truth_.events.end(),
                     [](const GtEvent& a, const GtEvent& b) { return a.seq < b.seq; });
}

void ScriptedSession::compute_truth(int start_peg, bool with_fsm) {
    const auto& L = renderer_.layout();
    truth_.start_peg = start_peg;
    RingPose rest{L.pegs[start_peg - 1][0], L.pegs[start_peg - 1][1], 1.0, 0.0, true};
    truth_.ring_area = static_cast<double>(renderer_.ring_pixel_count(rest));
    {
        SceneState only;
        only.ring = rest;
        only.tool.visible = false;
        int x0 = 1 << 30, x1 = -1;
        for (const auto& p : renderer_.visible_ring_pixels(only)) {
            x0 = std::min(x0, p[0]);
            x1 = std::max(x1, p[0]);
        }
        truth_.ring_diameter = x1 - x0 + 1;
    }
    const int small_side = static_cast<int>(std::lround(1.2 * truth_.ring_diameter));
    const int big_side = static_cast<int>(std::lround(2.0 * truth_.ring_diameter));
    const Rect frame_rect{0, 0, L.width, L.height};
    std::array<Rect, 12> small{}, big{};
    for (int k = 0; k < 12; ++k) {
        small[k] = intersect(centered_rect(L.pegs[k][0], L.pegs[k][1], small_side, small_side), frame_rect);
        big[k] = intersect(centered_rect(L.pegs[k][0], L.pegs[k][1], big_side, big_side), frame_rect);
    }
    const double A = truth_.ring_area;

    std::mt19937 targets(seed_);
    Status status = Status::Stationary;
    int ring = start_peg;
    int led = with_fsm ? draw_target(targets, ring) : 0;
    int pending = 0;
    std::uint64_t pick_start = 0;
    truth_.frames.clear();
    truth_.placements.clear();
    for (std::size_t i = 0; i < states_.size(); ++i) {
        const SceneState& s = states_[i];
        const auto pix = renderer_.visible_ring_pixels(s);
        auto count_in = [&](const Rect& r) {
            int c = 0;
            for (const auto& p : pix) c += r.contains_point(p[0], p[1]);
            return c;
        };
        const std::uint64_t seq = i + 1;
        if (with_fsm && i > 0) {
            bool cond = false;
            if (status == Status::Stationary) cond = count_in(small[ring - 1]) < 0.6 * A;
            else if (status == Status::Picking) cond = count_in(big[ring - 1]) < 0.3 * A;
            else cond = count_in(small[led - 1]) >= 0.5 * A;
            pending = cond ? pending + 1 : 0;
            if (pending >= kDebounceFrames) {
                pending = 0;
                if (status == Status::Stationary) {
                    status = Status::Picking;
                    pick_start = seq;
                } else if (status == Status::Picking) {
                    status = Status::Moving;
                } else {
                    truth_.placements.push_back({ring, led, pick_start, seq});
                    status = Status::Stationary;
                    ring = led;
                    led = draw_target(targets, ring);
                }
            }
        }
        states_[i].lit_peg = led;
        GtFrame g;
        g.seq = seq;
        g.status = status;
        g.ring_peg = ring;
        g.led_peg = led;
        g.tool_visible = s.tool.visible;
        g.tool_x = s.tool.x;
        g.tool_y = s.tool.y;
        g.tool_bbox = tool_box_at(s.tool.x, s.tool.y);
        g.ring_visible = static_cast<long>(pix.size());
        g.small_count = count_in(small[ring - 1]);
        g.big_count = count_in(big[ring - 1]);
        g.led_count = led ? count_in(small[led - 1]) : 0;
        truth_.frames.push_back(g);
    }
}

ScriptedSession ScriptedSession::clean_move(std::uint32_t seed, int n_frames, int fps) {
    ScriptedSession s(SceneLayout::standard(), fps, seed, 4.0);
    s.truth_.persona = "clean-move";
    std::mt19937 r(static_cast<std::uint32_t>(splitmix(seed ^ 0xC1EAull)));
    const int peg = uniform_int(r, 1, 12);
    const auto& p = s.renderer_.layout().pegs[peg - 1];
    const double tx = uniform(r, 260, 320), ty = uniform(r, 190, 240);
    const double px = uniform(r, 0, 2 * kPi), py = uniform(r, 0, 2 * kPi);
    for (int i = 0; i < n_frames; ++i) {
        SceneState st;
        st.ring = RingPose{p[0], p[1], 1.0, 0.0, true};
        st.tool.x = 320 + 220 * std::sin(2 * kPi * i / tx * (50.0 / fps) + px);
        st.tool.y = 240 + 150 * std::sin(2 * kPi * i / ty * (50.0 / fps) + py);
        s.states_.push_back(st);
    }
    s.compute_truth(peg, false);
    return s;
}

ScriptedSession ScriptedSession::occlusion(std::uint32_t seed, int fps, int hidden_frames) {
    ScriptedSession s(SceneLayout::standard(), fps, seed, 4.0);
    s.truth_.persona = "occlusion";
    std::mt19937 r(static_cast<std::uint32_t>(splitmix(seed ^ 0x0CC1ull)));
    const int peg = uniform_int(r, 1, 12);
    const auto& p = s.renderer_.layout().pegs[peg - 1];
    double x = uniform(r, 150, 490), y = uniform(r, 120, 360);
    double bx, by;
    do {
        bx = uniform(r, 80, 560);
        by = uniform(r, 80, 400);
    } while (std::hypot(bx - x, by - y) < 150);
    const double a = uniform(r, 0, 2 * kPi);
    SceneState st;
    st.ring = RingPose{p[0], p[1], 1.0, 0.0, true};
    for (int i = 0; i < 30; ++i) {
        st.tool = ToolPose{x + 2 * i * std::cos(a), y + 2 * i * std::sin(a), true};
        s.states_.push_back(st);
    }
    for (int i = 0; i < hidden_frames; ++i) {
        st.tool.visible = false;
        s.states_.push_back(st);
    }
    for (int i = 0; i < 40; ++i) {
        st.tool = ToolPose{bx + std::cos(a + 1) * i, by + std::sin(a + 1) * i * 0.5, true};
        s.states_.push_back(st);
    }
    s.compute_truth(peg, false);
    return s;
}

Frame ScriptedSession::frame(std::size_t index) const {
    const std::uint64_t seq = index + 1;
    const auto ts = static_cast<std::int64_t>((seq - 1) * 1000 / fps_);
    return renderer_.render(states_.at(index), seq, ts, (static_cast<std::uint64_t>(seed_) << 32) | seq);
}

Frame ScriptedSession::reference_frame() const {
    return renderer_.render(states_.front(), 0, 0, (static_cast<std::uint64_t>(seed_) << 32) | 0xFFFFFFFFull);
}

CalibrationSeeds ScriptedSession::seeds() const {
    CalibrationSeeds cs;
    const auto& L = renderer_.layout();
    for (int k = 0; k < 12; ++k) cs.pegs[k] = L.pegs[k];
    SceneState only = states_.front();
    only.tool.visible = false;
    int x0 = 1 << 30, y0 = 1 << 30, x1 = -1, y1 = -1;
    for (const auto& p : renderer_.visible_ring_pixels(only)) {
        x0 = std::min(x0, p[0]);
        y0 = std::min(y0, p[1]);
        x1 = std::max(x1, p[0]);
        y1 = std::max(y1, p[1]);
    }
    cs.ring_seed = Rect{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
    cs.tool_seed = tool_box_at(states_.front().tool.x, states_.front().tool.y);
    return cs;
}

std::optional<Frame> ScriptedSource::next() {
    if (index_ >= limit_) return std::nullopt;
    return session_.frame(index_++);
}

void write_simulation(const ScriptedSession& session, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < session.size(); ++i) {
        std::ostringstream name;
        name << std::setw(6) << std::setfill('0') << (i + 1) << ".ppm";
        write_ppm(session.frame(i), dir / name.str());
    }
    write_ppm(session.reference_frame(), dir / "reference.ppm");
    std::ofstream(dir / "seeds.json") << seeds_to_json(session.seeds()).dump(2) << "\n";
    std::ofstream(dir / "ground_truth.json") << session.truth().to_json().dump(1) << "\n";
}

}  // namespace netoas
