#include "netoas/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

namespace netoas {

using nlohmann::json;

namespace {

double wrap360(double deg) {
    double r = std::fmod(deg, 360.0);
    if (r < 0) r += 360.0;
    return r;
}

double wrap180(double deg) {
    double r = wrap360(deg);
    return r > 180.0 ? r - 360.0 : r;
}

void require_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
    if (!j.is_object()) throw FormatError(std::string(where) + " must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items())
        if (!ok.count(key)) throw FormatError(std::string("unknown field '") + key + "' in " + where);
    for (const auto& key : ok)
        if (!j.contains(key)) throw FormatError(std::string("missing field '") + key + "' in " + where);
}

json rect_to_json(const Rect& r) { return json{{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}}; }

Rect rect_from_json(const json& j) {
    require_keys(j, {"x", "y", "w", "h"}, "rect");
    return Rect{j.at("x").get<int>(), j.at("y").get<int>(), j.at("w").get<int>(), j.at("h").get<int>()};
}

}  // namespace

void CalibrationProfile::validate() const {
    for (int k = 0; k < kPegCount; ++k) {
        if (small_bbox[k].w < 1 || small_bbox[k].h < 1) throw ContractViolation("empty small box");
        if (!big_bbox[k].strictly_contains(small_bbox[k]))
            throw ContractViolation("big box " + std::to_string(k + 1) + " does not strictly contain its small box");
        if (frame_width > 0 && !big_bbox[k].inside(frame_width, frame_height))
            throw ContractViolation("peg box outside the frame");
        for (int m = k + 1; m < kPegCount; ++m)
            if (small_bbox[k].overlaps(small_bbox[m]))
                throw ContractViolation("small boxes " + std::to_string(k + 1) + " and " + std::to_string(m + 1) +
                                        " overlap");
    }
    const double positives[] = {thresh_stationary, thresh_picking,   thresh_moving,
                                drop_dist_thresh,  hit_cell_thresh,  static_cast<double>(hit_cell_min),
                                tug_ecc_thresh,    jerk_curvature_thresh, smoothness_warn_thresh};
    for (double v : positives)
        if (!(v > 0)) throw ContractViolation("calibration thresholds must be positive");
}

std::array<std::array<double, 2>, kPegCount> order_pegs(std::array<std::array<double, 2>, kPegCount> pegs) {
    std::sort(pegs.begin(), pegs.end(), [](const auto& a, const auto& b) { return a[1] < b[1]; });
    constexpr int kCols = 4;
    for (int row = 0; row < kPegCount / kCols; ++row)
        std::sort(pegs.begin() + row * kCols, pegs.begin() + (row + 1) * kCols,
                  [](const auto& a, const auto& b) { return a[0] < b[0]; });
    return pegs;
}

CalibrationProfile calibrate(const Frame& reference, const CalibrationSeeds& seeds, const CalibrationOptions& options) {
    const int W = reference.width(), H = reference.height();
    for (const auto& p : seeds.pegs)
        if (p[0] < 0 || p[1] < 0 || p[0] >= W || p[1] >= H) throw ContractViolation("peg seed outside the frame");
    if (!seeds.ring_seed.inside(W, H)) throw ContractViolation("ring seed outside the frame");
    if (!seeds.tool_seed.inside(W, H)) throw ContractViolation("tool seed outside the frame");

    // Ring hue from the saturated pixels of the ring seed.
    std::vector<double> hues;
    const Rect& rs = seeds.ring_seed;
    for (int y = rs.y; y < rs.bottom(); ++y)
        for (int x = rs.x; x < rs.right(); ++x) {
            const std::uint8_t* p = reference.at(x, y);
            const Hsv hsv = rgb_to_hsv(p[0], p[1], p[2]);
            if (hsv.s >= options.seed_min_sat && hsv.v >= options.min_val) hues.push_back(hsv.h);
        }
    if (hues.size() * 2 < static_cast<std::size_t>(rs.area()))
        throw BadRingSeed("only " + std::to_string(hues.size()) + " of " + std::to_string(rs.area()) +
                          " seed pixels are saturated");

    double sx = 0, sy = 0;
    for (double h : hues) {
        sx += std::cos(h * std::numbers::pi / 180.0);
        sy += std::sin(h * std::numbers::pi / 180.0);
    }
    const double mean_dir = std::atan2(sy, sx) * 180.0 / std::numbers::pi;
    std::vector<double> offsets;
    offsets.reserve(hues.size());
    for (double h : hues) offsets.push_back(wrap180(h - mean_dir));
    std::nth_element(offsets.begin(), offsets.begin() + offsets.size() / 2, offsets.end());
    const double median_hue = wrap360(mean_dir + offsets[offsets.size() / 2]);

    CalibrationProfile prof;
    prof.frame_width = W;
    prof.frame_height = H;
    prof.ring_hue = HueBand{wrap360(median_hue - options.hue_half_width), wrap360(median_hue + options.hue_half_width),
                            options.seed_min_sat, options.min_val};

    // Ring area and extent as segmented inside the seed.
    const BinaryMask mask = segment_by_hue(reference, prof.ring_hue);
    int x0 = W, y0 = H, x1 = -1, y1 = -1;
    long area = 0;
    for (int y = rs.y; y < rs.bottom(); ++y)
        for (int x = rs.x; x < rs.right(); ++x)
            if (mask.get(x, y)) {
                ++area;
                x0 = std::min(x0, x);
                x1 = std::max(x1, x);
                y0 = std::min(y0, y);
                y1 = std::max(y1, y);
            }
    if (area == 0) throw BadRingSeed("no pixels inside the derived hue band");
    prof.ring_area_px = static_cast<double>(area);
    prof.ring_diameter_px = static_cast<double>(std::max(x1 - x0 + 1, y1 - y0 + 1));

    const int small_side = static_cast<int>(std::lround(options.small_box_factor * prof.ring_diameter_px));
    const int big_side = static_cast<int>(std::lround(options.big_box_factor * prof.ring_diameter_px));
    const auto pegs = order_pegs(seeds.pegs);
    for (int k = 0; k < kPegCount; ++k) {
        prof.small_bbox[k] = intersect(centered_rect(pegs[k][0], pegs[k][1], small_side, small_side), Rect{0, 0, W, H});
        prof.big_bbox[k] = intersect(centered_rect(pegs[k][0], pegs[k][1], big_side, big_side), Rect{0, 0, W, H});
    }
    for (int k = 0; k < kPegCount; ++k) {
        for (int m = k + 1; m < kPegCount; ++m)
            if (prof.small_bbox[k].overlaps(prof.small_bbox[m]))
                throw CalibrationConflict("small boxes of pegs " + std::to_string(k + 1) + " and " +
                                          std::to_string(m + 1) + " overlap");
        if (!prof.big_bbox[k].strictly_contains(prof.small_bbox[k]))
            throw CalibrationConflict("peg " + std::to_string(k + 1) + " is too close to the frame edge");
    }

    prof.thresh_stationary = options.stationary_fraction * prof.ring_area_px;
    prof.thresh_picking = options.picking_fraction * prof.ring_area_px;
    prof.thresh_moving = options.moving_fraction * prof.ring_area_px;
    prof.drop_dist_thresh = prof.ring_diameter_px;  // twice the outer radius

    const GrayImage gray = to_gray(reference);
    const Rect& ts = seeds.tool_seed;
    prof.tool_template.rect = ts;
    prof.tool_template.patch = GrayImage(ts.w, ts.h);
    for (int y = 0; y < ts.h; ++y)
        for (int x = 0; x < ts.w; ++x) prof.tool_template.patch.at(x, y) = gray.at(ts.x + x, ts.y + y);

    prof.validate();
    return prof;
}

json profile_to_json(const CalibrationProfile& p) {
    json small = json::array(), big = json::array();
    for (int k = 0; k < kPegCount; ++k) {
        small.push_back(rect_to_json(p.small_bbox[k]));
        big.push_back(rect_to_json(p.big_bbox[k]));
    }
    return json{
        {"version", kProfileVersion},
        {"frame", {{"width", p.frame_width}, {"height", p.frame_height}}},
        {"small_bbox", small},
        {"big_bbox", big},
        {"ring_hue", {{"lo", p.ring_hue.lo}, {"hi", p.ring_hue.hi}, {"min_sat", p.ring_hue.min_sat},
                      {"min_val", p.ring_hue.min_val}}},
        {"ring", {{"area_px", p.ring_area_px}, {"diameter_px", p.ring_diameter_px}}},
        {"tool_template",
         {{"rect", rect_to_json(p.tool_template.rect)}, {"patch", base64_encode(p.tool_template.patch.data)}}},
        {"thresholds",
         {{"stationary", p.thresh_stationary},
          {"picking", p.thresh_picking},
          {"moving", p.thresh_moving},
          {"drop_dist", p.drop_dist_thresh},
          {"hit_cell", p.hit_cell_thresh},
          {"hit_cell_min", p.hit_cell_min},
          {"tug_ecc", p.tug_ecc_thresh},
          {"jerk_curvature", p.jerk_curvature_thresh},
          {"smoothness_warn", p.smoothness_warn_thresh}}},
    };
}

CalibrationProfile profile_from_json(const json& j) {
    if (!j.is_object() || !j.contains("version")) throw FormatError("calibration file has no version field");
    if (!j.at("version").is_number_integer() || j.at("version").get<int>() != kProfileVersion)
        throw VersionError("unsupported calibration version " + j.at("version").dump());
    require_keys(j, {"version", "frame", "small_bbox", "big_bbox", "ring_hue", "ring", "tool_template", "thresholds"},
                 "calibration");
    CalibrationProfile p;
    const json& frame = j.at("frame");
    require_keys(frame, {"width", "height"}, "frame");
    p.frame_width = frame.at("width").get<int>();
    p.frame_height = frame.at("height").get<int>();
    const json& small = j.at("small_bbox");
    const json& big = j.at("big_bbox");
    if (!small.is_array() || small.size() != kPegCount || !big.is_array() || big.size() != kPegCount)
        throw FormatError("expected 12 small and 12 big boxes");
    for (int k = 0; k < kPegCount; ++k) {
        p.small_bbox[k] = rect_from_json(small[k]);
        p.big_bbox[k] = rect_from_json(big[k]);
    }
    const json& hue = j.at("ring_hue");
    require_keys(hue, {"lo", "hi", "min_sat", "min_val"}, "ring_hue");
    p.ring_hue = HueBand{hue.at("lo").get<double>(), hue.at("hi").get<double>(), hue.at("min_sat").get<double>(),
                         hue.at("min_val").get<double>()};
    const json& ring = j.at("ring");
    require_keys(ring, {"area_px", "diameter_px"}, "ring");
    p.ring_area_px = ring.at("area_px").get<double>();
    p.ring_diameter_px = ring.at("diameter_px").get<double>();
    const json& tool = j.at("tool_template");
    require_keys(tool, {"rect", "patch"}, "tool_template");
    p.tool_template.rect = rect_from_json(tool.at("rect"));
    p.tool_template.patch.width = p.tool_template.rect.w;
    p.tool_template.patch.height = p.tool_template.rect.h;
    p.tool_template.patch.data = base64_decode(tool.at("patch").get<std::string>());
    if (p.tool_template.patch.data.size() != static_cast<std::size_t>(p.tool_template.rect.area()))
        throw FormatError("tool template patch size does not match its rect");
    const json& t = j.at("thresholds");
    require_keys(t, {"stationary", "picking", "moving", "drop_dist", "hit_cell", "hit_cell_min", "tug_ecc",
                     "jerk_curvature", "smoothness_warn"},
                 "thresholds");
    p.thresh_stationary = t.at("stationary").get<double>();
    p.thresh_picking = t.at("picking").get<double>();
    p.thresh_moving = t.at("moving").get<double>();
    p.drop_dist_thresh = t.at("drop_dist").get<double>();
    p.hit_cell_thresh = t.at("hit_cell").get<double>();
    p.hit_cell_min = t.at("hit_cell_min").get<int>();
    p.tug_ecc_thresh = t.at("tug_ecc").get<double>();
    p.jerk_curvature_thresh = t.at("jerk_curvature").get<double>();
    p.smoothness_warn_thresh = t.at("smoothness_warn").get<double>();
    p.validate();
    return p;
}

void save_profile(const CalibrationProfile& p, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write calibration file " + path.string());
    out << profile_to_json(p).dump(2) << "\n";
}

CalibrationProfile load_profile(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotCalibrated("no calibration file at " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(std::string("calibration file is not valid JSON: ") + e.what());
    }
    try {
        return profile_from_json(j);
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed calibration file: ") + e.what());
    }
}

json seeds_to_json(const CalibrationSeeds& s) {
    json pegs = json::array();
    for (const auto& p : s.pegs) pegs.push_back({p[0], p[1]});
    return json{{"pegs", pegs}, {"ring_seed", rect_to_json(s.ring_seed)}, {"tool_seed", rect_to_json(s.tool_seed)}};
}

CalibrationSeeds seeds_from_json(const json& j) {
    require_keys(j, {"pegs", "ring_seed", "tool_seed"}, "seeds");
    CalibrationSeeds s;
    const json& pegs = j.at("pegs");
    if (!pegs.is_array() || pegs.size() != kPegCount) throw FormatError("seeds need exactly 12 peg points");
    for (int k = 0; k < kPegCount; ++k) s.pegs[k] = {pegs[k].at(0).get<double>(), pegs[k].at(1).get<double>()};
    s.ring_seed = rect_from_json(j.at("ring_seed"));
    s.tool_seed = rect_from_json(j.at("tool_seed"));
    return s;
}

namespace {
constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out += kB64[(v >> 18) & 63];
        out += kB64[(v >> 12) & 63];
        out += kB64[(v >> 6) & 63];
        out += kB64[v & 63];
    }
    if (i < bytes.size()) {
        std::uint32_t v = bytes[i] << 16;
        if (i + 1 < bytes.size()) v |= bytes[i + 1] << 8;
        out += kB64[(v >> 18) & 63];
        out += kB64[(v >> 12) & 63];
        out += i + 1 < bytes.size() ? kB64[(v >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
    std::array<int, 256> rev;
    rev.fill(-1);
    for (int i = 0; i < 64; ++i) rev[static_cast<unsigned char>(kB64[i])] = i;
    std::vector<std::uint8_t> out;
    std::uint32_t acc = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '=') break;
        const int v = rev[static_cast<unsigned char>(c)];
        if (v < 0) throw FormatError("invalid base64 character");
        acc = (acc << 6) | static_cast<std::uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFF));
        }
    }
    return out;
}

}  // namespace netoas
