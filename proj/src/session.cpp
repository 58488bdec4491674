#include "netoas/session.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include "netoas/metrics.hpp"
#include "netoas/user_store.hpp"

namespace netoas {

void SessionConfig::validate() const {
    if (!(duration_s > 0)) throw ContractViolation("duration must be positive");
    if (fps != 25 && fps != 50) throw ContractViolation("fps must be 25 or 50");
    if (!user.empty()) {
        if (!UserStore::valid_id(user)) throw ContractViolation("invalid user id '" + user + "'");
        if (user_store_path.empty()) throw ContractViolation("a user store path is required to persist synopses");
    }
}

std::string feedback_text(EventKind kind, double intensity) {
    std::ostringstream os;
    os.precision(3);
    switch (kind) {
        case EventKind::Hit:
            os << "Board hit detected (" << intensity << " cells moved)";
            break;
        case EventKind::Tug:
            os << "Ring tugged on the peg (eccentricity " << intensity << ")";
            break;
        case EventKind::Drop:
            os << "Ring dropped (" << intensity << " px from the tool)";
            break;
        case EventKind::SmoothnessWarn:
            os << "Move more smoothly (speed deviation " << intensity << " px/frame)";
            break;
        case EventKind::Jerk:
            os << "Jerky motion";
            break;
    }
    return os.str();
}

std::vector<FeedbackMessage> FeedbackPolicy::update(std::uint64_t seq, const std::vector<TrackSample>& window,
                                                    const std::vector<EventRecord>& new_events,
                                                    std::optional<EventRecord>* warn_event) {
    std::vector<FeedbackMessage> out;
    for (const auto& e : new_events) {
        if (e.kind != EventKind::Hit && e.kind != EventKind::Tug && e.kind != EventKind::Drop) continue;
        out.push_back({e.kind, seq, e.frame_seq, e.intensity, feedback_text(e.kind, e.intensity)});
    }
    if (warn_event) warn_event->reset();
    if (window.size() >= 3 && (!last_warn_ || seq - *last_warn_ >= static_cast<std::uint64_t>(fps_))) {
        std::vector<TrackPoint> pts;
        pts.reserve(window.size());
        for (const auto& s : window) pts.push_back({s.seq, s.x, s.y});
        const double sm = smoothness(pts);
        if (sm >= thresh_) {
            last_warn_ = seq;
            out.push_back({EventKind::SmoothnessWarn, seq, seq, sm, feedback_text(EventKind::SmoothnessWarn, sm)});
            if (warn_event) *warn_event = EventRecord{EventKind::SmoothnessWarn, seq, sm, 0};
        }
    }
    return out;
}

namespace {

void insert_ordered(std::vector<EventRecord>& events, const EventRecord& e) {
    auto it = std::upper_bound(events.begin(), events.end(), e.frame_seq,
                               [](std::uint64_t s, const EventRecord& r) { return s < r.frame_seq; });
    events.insert(it, e);
}

}  // namespace

SessionEngine::SessionEngine(CalibrationProfile calib, int fps, std::uint32_t seed, TrackerConfig tracker_cfg)
    : calib_(std::move(calib)),
      fps_(fps),
      machine_(calib_, seed, &port_),
      tracker_(tracker_cfg),
      policy_(calib_.smoothness_warn_thresh, fps) {
    calib_.validate();
    log_.fps = fps;
}

void SessionEngine::close_moving(std::uint64_t start, std::uint64_t end) {
    const auto samples = log_.samples_between(start, end);
    if (samples.size() < 5) return;
    std::vector<TrackPoint> seg;
    seg.reserve(samples.size());
    for (const auto& s : samples) seg.push_back({s.seq, s.x, s.y});
    const auto k = curvature_series(seg);
    for (const auto& e : jerk_excursions(k, calib_.jerk_curvature_thresh))
        insert_ordered(log_.events, {EventKind::Jerk, seg[e.start].seq, e.peak, 0});
}

FrameOutcome SessionEngine::process(const Frame& frame) {
    if (finished_) throw ContractViolation("session already finished");
    if (frame.width() != calib_.frame_width || frame.height() != calib_.frame_height)
        throw ContractViolation("frame size differs from the calibration");
    const std::uint64_t seq = frame.seq();
    if (prev_seq_ && seq <= *prev_seq_) throw ContractViolation("frame seq must increase");
    ++frames_;

    FrameOutcome out;
    out.seq = seq;
    const BinaryMask mask = segment_by_hue(frame, calib_.ring_hue);
    const auto regions = connected_regions(mask);

    const std::optional<Status> before =
        machine_.initialized() ? std::optional<Status>(machine_.state().status) : std::nullopt;
    if (!machine_.initialized()) {
        try {
            machine_.init(mask, seq);
        } catch (const AmbiguousStart&) {
            // ring not seated yet; retry on the next frame
        }
    } else {
        out.placements = machine_.step(mask, seq).events;
    }
    if (machine_.initialized()) {
        const ActivityState& s = machine_.state();
        out.fsm_ready = true;
        out.state = s;
        log_.record_status(s.status, seq);
        if (!before || *before != s.status) {
            if (before == Status::Moving && moving_since_) close_moving(*moving_since_, seq - 1);
            if (s.status == Status::Moving) moving_since_ = seq;
            else moving_since_.reset();
        }
        for (const auto& p : out.placements) {
            std::uint64_t start = p.frame_seq;
            for (auto it = log_.intervals.rbegin(); it != log_.intervals.rend(); ++it)
                if (it->status == Status::Picking && it->start_seq <= p.frame_seq) {
                    start = it->start_seq;
                    break;
                }
            log_.placements.push_back({p.from_peg, p.to_peg, start, p.frame_seq});
        }
        const int led = s.led_id.value_or(0);
        out.target_changed = led != last_led_;
        last_led_ = led;
    }

    GrayImage gray = to_gray(frame);
    out.tool = tracker_.initialized() ? tracker_.step(gray, seq) : tracker_.init(frame, calib_.tool_template.rect);
    log_.track.push_back({seq, out.tool.cx, out.tool.cy, out.tool.valid});

    std::vector<EventRecord> fresh;
    if (prev_gray_)
        if (auto e = hit_.update(*prev_gray_, gray, calib_, seq)) fresh.push_back(*e);
    if (out.fsm_ready) {
        if (auto e = tug_.update(out.state, regions, calib_, seq)) fresh.push_back(*e);
        if (auto e = drop_.update(out.state, out.tool, regions, calib_, seq)) fresh.push_back(*e);
    }
    for (const auto& e : fresh) insert_ordered(log_.events, e);

    std::vector<TrackSample> window;
    if (moving_since_ && seq + 1 >= *moving_since_ + static_cast<std::uint64_t>(fps_)) {
        const std::uint64_t from = std::max(*moving_since_, seq + 1 - static_cast<std::uint64_t>(fps_));
        window = log_.samples_between(from, seq);
    }
    std::optional<EventRecord> warn;
    out.feedback = policy_.update(seq, window, fresh, &warn);
    if (warn) insert_ordered(log_.events, *warn);

    prev_gray_ = std::move(gray);
    prev_seq_ = seq;
    return out;
}

void SessionEngine::finish() {
    if (finished_) return;
    finished_ = true;
    if (moving_since_ && prev_seq_) close_moving(*moving_since_, *prev_seq_);
}

void FrameQueue::push(Frame f) {
    std::unique_lock lk(m_);
    if (!drop_oldest_) cv_.wait(lk, [&] { return closed_ || q_.size() < capacity_; });
    if (closed_) return;
    if (q_.size() >= capacity_) {
        q_.pop_front();
        ++dropped_;
    }
    q_.push_back(std::move(f));
    cv_.notify_all();
}

std::optional<Frame> FrameQueue::pop(std::optional<std::chrono::milliseconds> timeout) {
    std::unique_lock lk(m_);
    timed_out_ = false;
    const auto ready = [&] { return closed_ || !q_.empty(); };
    if (timeout) {
        if (!cv_.wait_for(lk, *timeout, ready)) {
            timed_out_ = true;
            return std::nullopt;
        }
    } else {
        cv_.wait(lk, ready);
    }
    if (q_.empty()) return std::nullopt;
    Frame f = std::move(q_.front());
    q_.pop_front();
    cv_.notify_all();
    return f;
}

void FrameQueue::close() {
    std::lock_guard lk(m_);
    closed_ = true;
    cv_.notify_all();
}

SessionResult run_session(const SessionConfig& cfg, FrameSource& source, const FeedbackSink& sink) {
    cfg.validate();
    if (cfg.calibration_path.empty() || !std::filesystem::exists(cfg.calibration_path))
        throw NotCalibrated("no calibration file at '" + cfg.calibration_path.string() + "'");
    const CalibrationProfile calib = load_profile(cfg.calibration_path);
    std::optional<SvmModel> model;
    if (cfg.model_path) model = load_model(*cfg.model_path);
    return run_session(cfg, calib, model, source, sink);
}

SessionResult run_session(const SessionConfig& cfg, const CalibrationProfile& calib, const std::optional<SvmModel>& model,
                          FrameSource& source, const FeedbackSink& sink) {
    cfg.validate();
    SessionEngine engine(calib, cfg.fps, cfg.seed);
    SessionResult result;

    FrameQueue queue(4, cfg.live);
    std::atomic<bool> stop{false};
    std::exception_ptr producer_error;
    std::thread producer([&] {
        try {
            while (!stop.load()) {
                auto f = source.next();
                if (!f) break;
                queue.push(std::move(*f));
            }
        } catch (...) {
            producer_error = std::current_exception();
        }
        queue.close();
    });
    const auto shutdown = [&] {
        stop = true;
        queue.close();
        if (producer.joinable()) producer.join();
    };

    const auto max_frames = static_cast<std::uint64_t>(std::llround(cfg.duration_s * cfg.fps));
    try {
        while (engine.frames() < max_frames) {
            auto f = queue.pop(cfg.live ? std::optional(cfg.stall_timeout) : std::nullopt);
            if (!f) {
                if (queue.timed_out()) throw SourceStall("no frame for " + std::to_string(cfg.stall_timeout.count()) + " ms");
                break;
            }
            auto out = engine.process(*f);
            for (auto& m : out.feedback) {
                if (sink) sink(m);
                result.feedback.push_back(std::move(m));
            }
        }
    } catch (...) {
        shutdown();
        throw;
    }
    shutdown();
    if (producer_error) std::rethrow_exception(producer_error);

    engine.finish();
    result.dropped_frames = queue.dropped();
    result.log = engine.log();
    result.features = extract_features(result.log, calib.jerk_curvature_thresh);
    std::optional<Prediction> verdict;
    if (model) verdict = predict(*model, result.features);
    result.synopsis = render_synopsis(result.log, result.features, verdict);

    if (!cfg.user.empty()) {
        UserStore store(cfg.user_store_path);
        if (!store.has_user(cfg.user)) store.create_user(cfg.user, cfg.user);
        store.append_synopsis(cfg.user, result.synopsis.report);
    }
    return result;
}

}  // namespace netoas
