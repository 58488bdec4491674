#pragma once

#include <array>
#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "netoas/activity_log.hpp"
#include "netoas/calibration.hpp"
#include "netoas/frame_io.hpp"
#include "netoas/imaging.hpp"

namespace netoas {

inline constexpr double kRingOuter = 18.0;
inline constexpr double kRingInner = 8.0;
inline constexpr double kRingHue = 120.0;
inline constexpr double kHeadRadius = 10.0;
inline constexpr double kGripOffset = 13.0;  // head centre to ring centre while holding
inline constexpr int kToolBox = 24;
inline constexpr double kPivotX = 1100.0;
inline constexpr double kPivotY = 950.0;
inline constexpr double kRestX = 590.0;
inline constexpr double kRestY = 440.0;

struct Persona {
    std::string name = "custom";
    double base_speed = 5.0;        // px/frame
    double speed_modulation = 0.0;  // relative amplitude of the speed wobble
    double jitter_amplitude = 0.0;  // px, lateral zigzag
    int jitter_half_period = 5;     // frames
    double overshoot_prob = 0.0;
    double hits_per_minute = 0.0;
    double tug_prob = 0.0;
    double drop_prob = 0.0;
    int hold_min = 15;  // frames spent grasping before extraction
    int hold_max = 25;

    static Persona novice();
    static Persona improved();
    static Persona from_name(const std::string& name);
    void validate() const;
};

enum class Tilt { Straight, Left, Right };

struct Level {
    int scope_deg = 0;  // 0, 30 or 45
    Tilt tilt = Tilt::Straight;
    static Level parse(const std::string& text);  // e.g. "30-left", "0"
};

struct SceneLayout {
    int width = 640;
    int height = 480;
    std::array<std::array<double, 2>, 12> pegs{};
    double peg_radius = 7.0;

    static SceneLayout standard(int width = 640, int height = 480, Level level = {});
};

struct RingPose {
    double cx = 0;
    double cy = 0;
    double deform = 1.0;  // axis ratio, area preserving
    double axis = 0.0;    // radians, direction of elongation
    bool visible = true;
};

struct ToolPose {
    double x = kRestX;  // head centre
    double y = kRestY;
    bool visible = true;
};

struct BoardShift {
    bool active = false;
    double cx = 0, cy = 0, radius = 0;
    int dx = 0, dy = 0;
};

struct SceneState {
    RingPose ring;
    ToolPose tool;
    int lit_peg = 0;
    BoardShift shift;
};

class SceneRenderer {
public:
    SceneRenderer(SceneLayout layout, std::uint32_t texture_seed, double noise_sigma = 4.0);

    Frame render(const SceneState& s, std::uint64_t seq, std::int64_t timestamp_ms, std::uint64_t noise_key) const;
    // Ring pixels left visible after tool occlusion.
    std::vector<std::array<int, 2>> visible_ring_pixels(const SceneState& s) const;
    long ring_pixel_count(const RingPose& ring) const;  // unoccluded, clipped to the frame

    bool in_ring(const RingPose& r, int x, int y) const;
    bool in_tool(const ToolPose& t, int x, int y) const;
    const SceneLayout& layout() const { return layout_; }

private:
    SceneLayout layout_;
    double noise_sigma_;
    GrayImage base_;  // textured board with unlit pegs
    std::vector<std::uint8_t> base_rgb_;
    std::vector<std::int8_t> noise_;
};

Rect tool_box_at(double x, double y);

struct GtFrame {
    std::uint64_t seq = 0;
    Status status = Status::Stationary;
    int ring_peg = 0;
    int led_peg = 0;
    Rect tool_bbox;
    bool tool_visible = true;
    double tool_x = 0;
    double tool_y = 0;
    long ring_visible = 0;
    int small_count = 0;  // visible ring pixels in the small box of ring_peg
    int big_count = 0;
    int led_count = 0;    // in the small box of led_peg
};

struct GtEvent {
    EventKind kind = EventKind::Hit;
    std::uint64_t seq = 0;
    double value = 0;
};

struct GroundTruth {
    int fps = 50;
    int start_peg = 0;
    std::string persona;
    std::uint32_t seed = 0;
    double ring_area = 0;      // nominal unoccluded pixel count
    double ring_diameter = 0;  // rasterized extent
    std::vector<GtFrame> frames;
    std::vector<GtEvent> events;
    std::vector<Placement> placements;

    std::size_t count(EventKind k) const;
    nlohmann::json to_json() const;
};

// Per-frame scripted session; frames are rendered on demand, never stored.
class ScriptedSession {
public:
    ScriptedSession(const Persona& persona, int n_placements, int fps, std::uint32_t seed, Level level = {},
                    double noise_sigma = 4.0);

    // Tool-only sequences for tracker checks: smooth motion, and a 20-frame disappearance.
    static ScriptedSession clean_move(std::uint32_t seed, int n_frames = 300, int fps = 50);
    static ScriptedSession occlusion(std::uint32_t seed, int fps = 50, int hidden_frames = 20);

    std::size_t size() const { return states_.size(); }
    Frame frame(std::size_t index) const;  // index 0 has seq 1
    Frame reference_frame() const;
    CalibrationSeeds seeds() const;
    const GroundTruth& truth() const { return truth_; }
    const SceneState& state(std::size_t index) const { return states_[index]; }
    const SceneRenderer& renderer() const { return renderer_; }
    int fps() const { return fps_; }

private:
    ScriptedSession(SceneLayout layout, int fps, std::uint32_t seed, double noise_sigma);
    void compute_truth(int start_peg, bool with_fsm);

    int fps_;
    std::uint32_t seed_;
    SceneRenderer renderer_;
    std::vector<SceneState> states_;
    GroundTruth truth_;
    friend class ScriptBuilder;
};

class ScriptedSource : public FrameSource {
public:
    explicit ScriptedSource(const ScriptedSession& session, std::size_t limit = SIZE_MAX)
        : session_(session), limit_(std::min(limit, session.size())) {}
    std::optional<Frame> next() override;

private:
    const ScriptedSession& session_;
    std::size_t limit_;
    std::size_t index_ = 0;
};

// Writes frames as zero-padded PPMs plus reference.ppm, seeds.json and ground_truth.json.
void write_simulation(const ScriptedSession& session, const std::filesystem::path& dir);

}  // namespace netoas
