#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "netoas/activity_fsm.hpp"
#include "netoas/assessment.hpp"
#include "netoas/calibration.hpp"
#include "netoas/detectors.hpp"
#include "netoas/frame_io.hpp"
#include "netoas/scenegen.hpp"
#include "netoas/tracker.hpp"

namespace netoas {

struct SessionConfig {
    double duration_s = 180;
    int fps = 50;
    Level level;
    std::filesystem::path calibration_path;
    std::optional<std::filesystem::path> model_path;
    std::uint32_t seed = 1;
    std::string user;                         // empty: nothing persisted
    std::filesystem::path user_store_path;    // JSONL store for users and synopses
    bool live = false;                        // drop-oldest queue and stall detection
    std::chrono::milliseconds stall_timeout{2000};

    void validate() const;
};

struct FeedbackMessage {
    EventKind kind = EventKind::Hit;
    std::uint64_t frame_seq = 0;  // frame at which the message was issued
    std::uint64_t event_seq = 0;  // frame of the triggering event
    double intensity = 0;
    std::string text;
};

std::string feedback_text(EventKind kind, double intensity);

// Turns new detector events into messages and rate-limits the smoothness warning.
class FeedbackPolicy {
public:
    FeedbackPolicy(double smoothness_thresh, int fps) : thresh_(smoothness_thresh), fps_(fps) {}

    // window: valid track samples of the last fps frames, restricted to the current Moving interval
    // (empty when not Moving). Returns the messages for this frame; a smoothness warning is also
    // appended to `warn_event` so the caller can log it.
    std::vector<FeedbackMessage> update(std::uint64_t seq, const std::vector<TrackSample>& window,
                                        const std::vector<EventRecord>& new_events,
                                        std::optional<EventRecord>* warn_event = nullptr);

private:
    double thresh_;
    int fps_;
    std::optional<std::uint64_t> last_warn_;
};

struct FrameOutcome {
    std::uint64_t seq = 0;
    bool fsm_ready = false;
    ActivityState state;
    TrackEstimate tool;
    std::vector<PlacementEvent> placements;
    std::vector<FeedbackMessage> feedback;
    bool target_changed = false;
};

// Per-frame analysis: segment, state machine, tracker, detectors, feedback.
class SessionEngine {
public:
    SessionEngine(CalibrationProfile calib, int fps, std::uint32_t seed, TrackerConfig tracker_cfg = {});

    FrameOutcome process(const Frame& frame);
    // Closes the open interval bookkeeping; call once after the last frame.
    void finish();

    const ActivityLog& log() const { return log_; }
    const CalibrationProfile& calibration() const { return calib_; }
    std::uint64_t frames() const { return frames_; }
    const SimulatedTargetPort& port() const { return port_; }

private:
    void close_moving(std::uint64_t start, std::uint64_t end);

    CalibrationProfile calib_;
    int fps_;
    SimulatedTargetPort port_;
    ActivityMachine machine_;
    Tracker tracker_;
    HitDetector hit_;
    TugDetector tug_;
    DropDetector drop_;
    FeedbackPolicy policy_;
    ActivityLog log_;
    std::optional<GrayImage> prev_gray_;
    std::optional<std::uint64_t> prev_seq_;
    std::optional<std::uint64_t> moving_since_;
    std::uint64_t frames_ = 0;
    int last_led_ = 0;
    bool finished_ = false;
};

// Bounded frame queue between the acquisition and analysis lanes.
class FrameQueue {
public:
    FrameQueue(std::size_t capacity, bool drop_oldest) : capacity_(capacity), drop_oldest_(drop_oldest) {}

    void push(Frame f);
    // Waits up to `timeout`; nullopt with timed_out() set when nothing arrived, nullopt when closed and drained.
    std::optional<Frame> pop(std::optional<std::chrono::milliseconds> timeout = std::nullopt);
    void close();
    bool timed_out() const { return timed_out_; }
    std::size_t dropped() const { return dropped_; }

private:
    std::size_t capacity_;
    bool drop_oldest_;
    std::mutex m_;
    std::condition_variable cv_;
    std::deque<Frame> q_;
    bool closed_ = false;
    bool timed_out_ = false;
    std::size_t dropped_ = 0;
};

struct SessionResult {
    ActivityLog log;
    FeatureVector features;
    SessionSynopsis synopsis;
    std::vector<FeedbackMessage> feedback;
    std::size_t dropped_frames = 0;
};

using FeedbackSink = std::function<void(const FeedbackMessage&)>;

SessionResult run_session(const SessionConfig& cfg, FrameSource& source, const FeedbackSink& sink = {});
// Same pipeline with an already loaded profile and optional model.
SessionResult run_session(const SessionConfig& cfg, const CalibrationProfile& calib, const std::optional<SvmModel>& model,
                          FrameSource& source, const FeedbackSink& sink = {});

}  // namespace netoas
