#pragma once

#include <array>
#include <filesystem>

#include "json.hpp"
#include "netoas/imaging.hpp"

namespace netoas {

inline constexpr int kPegCount = 12;
inline constexpr int kProfileVersion = 1;

struct ToolTemplate {
    Rect rect;
    GrayImage patch;  // same size as rect

    bool operator==(const ToolTemplate& o) const {
        return rect == o.rect && patch.width == o.patch.width && patch.height == o.patch.height &&
               patch.data == o.patch.data;
    }
};

struct CalibrationProfile {
    // Index 0 holds peg 1; pegs are numbered row-major from the top-left.
    std::array<Rect, kPegCount> small_bbox{};
    std::array<Rect, kPegCount> big_bbox{};
    HueBand ring_hue;
    ToolTemplate tool_template;
    int frame_width = 0;
    int frame_height = 0;
    double ring_area_px = 0;      // segmented ring area observed at calibration
    double ring_diameter_px = 0;  // outer diameter observed at calibration

    double thresh_stationary = 0;
    double thresh_picking = 0;
    double thresh_moving = 0;
    double drop_dist_thresh = 0;
    double hit_cell_thresh = 12.0;
    int hit_cell_min = 20;
    double tug_ecc_thresh = 2.5;
    double jerk_curvature_thresh = 0.2;
    double smoothness_warn_thresh = 1.5;

    const Rect& small_box(int peg) const { return small_bbox.at(static_cast<std::size_t>(peg - 1)); }
    const Rect& big_box(int peg) const { return big_bbox.at(static_cast<std::size_t>(peg - 1)); }

    // Throws ContractViolation when an invariant does not hold.
    void validate() const;

    bool operator==(const CalibrationProfile&) const = default;
};

struct CalibrationSeeds {
    std::array<std::array<double, 2>, kPegCount> pegs{};  // click points, any order
    Rect ring_seed;
    Rect tool_seed;
};

struct CalibrationOptions {
    double small_box_factor = 1.2;  // x ring diameter
    double big_box_factor = 2.0;    // x ring diameter
    double hue_half_width = 15.0;   // degrees
    double seed_min_sat = 0.2;
    double min_val = 0.25;
    double stationary_fraction = 0.60;
    double picking_fraction = 0.30;
    double moving_fraction = 0.50;
};

CalibrationProfile calibrate(const Frame& reference, const CalibrationSeeds& seeds,
                             const CalibrationOptions& options = {});

// Row-major ordering of peg click points: rows by y, then by x within a row.
std::array<std::array<double, 2>, kPegCount> order_pegs(std::array<std::array<double, 2>, kPegCount> pegs);

nlohmann::json profile_to_json(const CalibrationProfile& p);
CalibrationProfile profile_from_json(const nlohmann::json& j);

void save_profile(const CalibrationProfile& p, const std::filesystem::path& path);
CalibrationProfile load_profile(const std::filesystem::path& path);

nlohmann::json seeds_to_json(const CalibrationSeeds& s);
CalibrationSeeds seeds_from_json(const nlohmann::json& j);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace netoas
