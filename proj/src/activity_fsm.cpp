#include "netoas/activity_fsm.hpp"

#include <algorithm>

#include "netoas/errors.hpp"

namespace netoas {

const char* to_string(Status s) {
    switch (s) {
        case Status::Stationary: return "stationary";
        case Status::Picking: return "picking";
        case Status::Moving: return "moving";
    }
    return "stationary";
}

Status status_from_string(const std::string& s) {
    if (s == "stationary") return Status::Stationary;
    if (s == "picking") return Status::Picking;
    if (s == "moving") return Status::Moving;
    throw FormatError("unknown status '" + s + "'");
}

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::Hit: return "hit";
        case EventKind::Tug: return "tug";
        case EventKind::Drop: return "drop";
        case EventKind::Jerk: return "jerk";
        case EventKind::SmoothnessWarn: return "smoothness";
    }
    return "hit";
}

EventKind event_kind_from_string(const std::string& s) {
    if (s == "hit") return EventKind::Hit;
    if (s == "tug") return EventKind::Tug;
    if (s == "drop") return EventKind::Drop;
    if (s == "jerk") return EventKind::Jerk;
    if (s == "smoothness") return EventKind::SmoothnessWarn;
    throw FormatError("unknown event kind '" + s + "'");
}

void ActivityLog::record_status(Status s, std::uint64_t seq) {
    if (!intervals.empty() && intervals.back().status == s) {
        intervals.back().end_seq = seq;
        return;
    }
    if (!intervals.empty()) intervals.back().closed = true;
    intervals.push_back({s, seq, seq, false});
}

std::size_t ActivityLog::count(EventKind k) const {
    return static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(), [k](const EventRecord& e) { return e.kind == k; }));
}

std::vector<TrackSample> ActivityLog::samples_between(std::uint64_t start, std::uint64_t end) const {
    std::vector<TrackSample> out;
    for (const auto& t : track)
        if (t.valid && t.seq >= start && t.seq <= end) out.push_back(t);
    return out;
}

void SimulatedTargetPort::light(int peg) {
    if (peg < 1 || peg > kPegCount) throw ContractViolation("peg id out of range");
    commands_.push_back(peg);
}

void SerialTargetPort::light(int peg) {
    if (peg < 1 || peg > kPegCount) throw ContractViolation("peg id out of range");
    line_.put(static_cast<char>(peg));
    line_.flush();
}

int draw_target(std::mt19937& rng, int exclude) {
    int v = static_cast<int>(rng() % (kPegCount - 1)) + 1;
    if (exclude >= 1 && v >= exclude) ++v;
    return v;
}

ActivityState init_state(const BinaryMask& first_mask, const CalibrationProfile& calib, std::mt19937& rng,
                         TargetPort* port, std::uint64_t seq) {
    int found = 0, holder = 0;
    for (int k = 1; k <= kPegCount; ++k) {
        if (mask_sum_in_rect(first_mask, calib.small_box(k)) >= calib.thresh_stationary) {
            ++found;
            holder = k;
        }
    }
    if (found != 1) throw AmbiguousStart(std::to_string(found) + " pegs hold a ring");
    ActivityState s;
    s.status = Status::Stationary;
    s.ring_id = holder;
    s.led_id = draw_target(rng, holder);
    s.since_frame = seq;
    if (port) port->light(*s.led_id);
    return s;
}

FsmStep fsm_step(const ActivityState& state, const BinaryMask& mask, const CalibrationProfile& calib, std::mt19937& rng,
                 TargetPort* port, std::uint64_t seq, int debounce) {
    if (!state.ring_id || !state.led_id) throw ContractViolation("fsm_step on an uninitialised state");
    FsmStep out{state, {}};
    ActivityState& s = out.state;
    bool leave = false;
    switch (s.status) {
        case Status::Stationary:
            leave = mask_sum_in_rect(mask, calib.small_box(*s.ring_id)) < calib.thresh_stationary;
            break;
        case Status::Picking:
            leave = mask_sum_in_rect(mask, calib.big_box(*s.ring_id)) < calib.thresh_picking;
            break;
        case Status::Moving:
            leave = mask_sum_in_rect(mask, calib.small_box(*s.led_id)) >= calib.thresh_moving;
            break;
    }
    if (!leave) {
        s.pending = 0;
        return out;
    }
    if (++s.pending < debounce) return out;

    s.pending = 0;
    s.since_frame = seq;
    switch (s.status) {
        case Status::Stationary: s.status = Status::Picking; break;
        case Status::Picking: s.status = Status::Moving; break;
        case Status::Moving: {
            const int from = *s.ring_id;
            s.status = Status::Stationary;
            s.ring_id = s.led_id;
            s.led_id = draw_target(rng, *s.ring_id);
            if (port) port->light(*s.led_id);
            out.events.push_back({from, *s.ring_id, seq});
            break;
        }
    }
    return out;
}

const ActivityState& ActivityMachine::init(const BinaryMask& mask, std::uint64_t seq) {
    state_ = init_state(mask, calib_, rng_, port_, seq);
    initialized_ = true;
    return state_;
}

FsmStep ActivityMachine::step(const BinaryMask& mask, std::uint64_t seq) {
    if (!initialized_) throw ContractViolation("activity machine not initialised");
    auto r = fsm_step(state_, mask, calib_, rng_, port_, seq);
    state_ = r.state;
    return r;
}

DwellStats dwell_times(const ActivityLog& log) {
    DwellStats d;
    double grasp = 0, move = 0;
    const double ms_per_frame = 1000.0 / log.fps;
    for (const auto& iv : log.intervals) {
        if (!iv.closed) continue;
        if (iv.status == Status::Picking) {
            grasp += iv.frames() * ms_per_frame;
            ++d.grasp_count;
        } else if (iv.status == Status::Moving) {
            move += iv.frames() * ms_per_frame;
            ++d.move_count;
        }
    }
    if (d.grasp_count) d.mean_grasp_ms = grasp / d.grasp_count;
    if (d.move_count) d.mean_move_ms = move / d.move_count;
    return d;
}

}  // namespace netoas
