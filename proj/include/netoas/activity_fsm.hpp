#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include "netoas/activity_log.hpp"
#include "netoas/calibration.hpp"

namespace netoas {

struct ActivityState {
    Status status = Status::Stationary;
    std::optional<int> ring_id;
    std::optional<int> led_id;
    std::uint64_t since_frame = 0;
    int pending = 0;  // consecutive frames the outgoing transition has held

    bool operator==(const ActivityState&) const = default;
};

struct PlacementEvent {
    int from_peg = 0;
    int to_peg = 0;
    std::uint64_t frame_seq = 0;
    bool operator==(const PlacementEvent&) const = default;
};

class TargetPort {
public:
    virtual ~TargetPort() = default;
    virtual void light(int peg) = 0;
};

class SimulatedTargetPort : public TargetPort {
public:
    void light(int peg) override;
    int lit() const { return commands_.empty() ? 0 : commands_.back(); }
    const std::vector<int>& commands() const { return commands_; }

private:
    std::vector<int> commands_;
};

// Writes one byte 0x01..0x0C per command, the format of the peg controller's serial line.
class SerialTargetPort : public TargetPort {
public:
    explicit SerialTargetPort(std::ostream& line) : line_(line) {}
    void light(int peg) override;

private:
    std::ostream& line_;
};

// Uniform draw from {1..12} \ {exclude}; shared by the engine and the scene generator.
int draw_target(std::mt19937& rng, int exclude);

inline constexpr int kDebounceFrames = 2;

ActivityState init_state(const BinaryMask& first_mask, const CalibrationProfile& calib, std::mt19937& rng,
                         TargetPort* port = nullptr, std::uint64_t seq = 0);

struct FsmStep {
    ActivityState state;
    std::vector<PlacementEvent> events;
};

FsmStep fsm_step(const ActivityState& state, const BinaryMask& mask, const CalibrationProfile& calib, std::mt19937& rng,
                 TargetPort* port = nullptr, std::uint64_t seq = 0, int debounce = kDebounceFrames);

// Seeded machine that owns its target generator.
class ActivityMachine {
public:
    ActivityMachine(const CalibrationProfile& calib, std::uint32_t seed, TargetPort* port = nullptr)
        : calib_(calib), rng_(seed), port_(port) {}

    const ActivityState& init(const BinaryMask& mask, std::uint64_t seq);
    FsmStep step(const BinaryMask& mask, std::uint64_t seq);
    bool initialized() const { return initialized_; }
    const ActivityState& state() const { return state_; }

private:
    const CalibrationProfile& calib_;
    std::mt19937 rng_;
    TargetPort* port_;
    ActivityState state_;
    bool initialized_ = false;
};

struct DwellStats {
    double mean_grasp_ms = 0;
    int grasp_count = 0;
    double mean_move_ms = 0;
    int move_count = 0;
};

DwellStats dwell_times(const ActivityLog& log);

}  // namespace netoas
