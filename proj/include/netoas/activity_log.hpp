#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace netoas {

enum class Status { Stationary, Picking, Moving };
const char* to_string(Status s);
Status status_from_string(const std::string& s);

enum class EventKind { Hit, Tug, Drop, Jerk, SmoothnessWarn };
const char* to_string(EventKind k);
EventKind event_kind_from_string(const std::string& s);

struct EventRecord {
    EventKind kind = EventKind::Hit;
    std::uint64_t frame_seq = 0;
    double intensity = 0;
    double aux = 0;  // Hit: mean changed-cell delta
};

// Inclusive frame range with one status.
struct StateInterval {
    Status status = Status::Stationary;
    std::uint64_t start_seq = 0;
    std::uint64_t end_seq = 0;
    bool closed = false;  // followed by a transition
    std::uint64_t frames() const { return end_seq - start_seq + 1; }
};

struct TrackSample {
    std::uint64_t seq = 0;
    double x = 0;
    double y = 0;
    bool valid = false;
};

struct Placement {
    int from_peg = 0;
    int to_peg = 0;
    std::uint64_t start_seq = 0;  // ring left its peg
    std::uint64_t end_seq = 0;    // ring seated on the target
};

struct ActivityLog {
    int fps = 50;
    std::vector<StateInterval> intervals;
    std::vector<TrackSample> track;
    std::vector<EventRecord> events;
    std::vector<Placement> placements;

    void record_status(Status s, std::uint64_t seq);
    std::size_t count(EventKind k) const;
    // Valid track samples inside [start, end].
    std::vector<TrackSample> samples_between(std::uint64_t start, std::uint64_t end) const;
};

}  // namespace netoas
