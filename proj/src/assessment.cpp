#include "netoas/assessment.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "netoas/activity_fsm.hpp"
#include "netoas/errors.hpp"
#include "netoas/metrics.hpp"

namespace netoas {

const std::array<const char*, kFeatureCount>& FeatureVector::names() {
    static const std::array<const char*, kFeatureCount> n{
        "avg_grasp_time_ms", "tug_count",      "hit_count",      "avg_hit_intensity", "avg_move_time_ms", "avg_moves_per_placement",
        "avg_smoothness",    "avg_arc_length", "jerk_count",     "drop_count",        "rings_placed"};
    return n;
}

FeatureVector extract_features(const ActivityLog& log, double jerk_curvature_thresh) {
    FeatureVector f;
    const DwellStats d = dwell_times(log);
    f[0] = d.mean_grasp_ms;
    f[1] = static_cast<double>(log.count(EventKind::Tug));
    double hit_sum = 0;
    int hits = 0;
    for (const auto& e : log.events) {
        if (e.kind != EventKind::Hit) continue;
        hit_sum += e.intensity;
        ++hits;
    }
    f[2] = hits;
    f[3] = hits ? hit_sum / hits : 0.0;
    f[4] = d.mean_move_ms;

    int moving = 0, segs = 0, jerks = 0;
    double smooth_sum = 0, arc_sum = 0;
    for (const auto& iv : log.intervals) {
        if (iv.status != Status::Moving) continue;
        ++moving;
        const auto samples = log.samples_between(iv.start_seq, iv.end_seq);
        if (samples.size() < 3) continue;
        std::vector<TrackPoint> seg;
        seg.reserve(samples.size());
        for (const auto& s : samples) seg.push_back({s.seq, s.x, s.y});
        smooth_sum += smoothness(seg);
        arc_sum += static_cast<double>(arc_length(seg));
        ++segs;
        if (seg.size() >= 5) jerks += count_jerks(curvature_series(seg), jerk_curvature_thresh);
    }
    const double placements = static_cast<double>(log.placements.size());
    f[5] = moving / std::max(placements, 1.0);
    f[6] = segs ? smooth_sum / segs : 0.0;
    f[7] = segs ? arc_sum / segs : 0.0;
    f[8] = jerks;
    f[9] = static_cast<double>(log.count(EventKind::Drop));
    f[10] = placements;
    return f;
}

const char* to_string(SkillLabel l) { return l == SkillLabel::Improved ? "improved" : "novice"; }

SkillLabel skill_label_from_string(const std::string& s) {
    if (s == "novice") return SkillLabel::Novice;
    if (s == "improved") return SkillLabel::Improved;
    throw FormatError("unknown label '" + s + "'");
}

namespace {

using Row = std::array<double, kFeatureCount>;

double objective(const std::vector<Row>& Z, const std::vector<double>& y, const Row& w, double b, double C) {
    double reg = 0;
    for (double v : w) reg += v * v;
    double hinge = 0;
    for (std::size_t i = 0; i < Z.size(); ++i) {
        double s = b;
        for (int j = 0; j < kFeatureCount; ++j) s += w[j] * Z[i][j];
        hinge += std::max(0.0, 1.0 - y[i] * s);
    }
    return 0.5 * reg + C * hinge;
}

}  // namespace

SvmModel train_svm(const std::vector<FeatureVector>& X, const std::vector<SkillLabel>& labels, double C,
                   const SvmTrainOptions& opts) {
    if (X.size() != labels.size()) throw ContractViolation("train_svm: feature and label counts differ");
    const std::size_t n = X.size();
    std::size_t pos = 0;
    for (auto l : labels) pos += l == SkillLabel::Improved;
    if (pos == 0 || pos == n) throw DegenerateLabels("training set holds a single class");
    if (pos < 2 || n - pos < 2) throw ContractViolation("train_svm needs at least two examples per class");
    if (!(C > 0)) throw ContractViolation("train_svm: C must be positive");

    SvmModel m;
    std::array<bool, kFeatureCount> retained{};
    for (int j = 0; j < kFeatureCount; ++j) {
        double mean = 0;
        for (const auto& f : X) mean += f[j];
        mean /= n;
        double var = 0;
        for (const auto& f : X) var += (f[j] - mean) * (f[j] - mean);
        const double sd = std::sqrt(var / n);
        retained[j] = sd > 1e-12 * std::max(1.0, std::abs(mean));
        m.means[j] = mean;
        m.stds[j] = retained[j] ? sd : 1.0;
    }
    std::vector<Row> Z(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (int j = 0; j < kFeatureCount; ++j) Z[i][j] = retained[j] ? (X[i][j] - m.means[j]) / m.stds[j] : 0.0;
        y[i] = labels[i] == SkillLabel::Improved ? 1.0 : -1.0;
    }

    Row w{};
    double b = 0;
    Row best_w = w;
    double best_b = b;
    double best = objective(Z, y, w, b, C);
    double checkpoint = best;
    for (int t = 1; t <= opts.max_iterations; ++t) {
        Row gw = w;
        double gb = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = b;
            for (int j = 0; j < kFeatureCount; ++j) s += w[j] * Z[i][j];
            if (y[i] * s < 1.0) {
                for (int j = 0; j < kFeatureCount; ++j) gw[j] -= C * y[i] * Z[i][j];
                gb -= C * y[i];
            }
        }
        double norm = gb * gb;
        for (double v : gw) norm += v * v;
        norm = std::sqrt(norm);
        if (norm == 0) break;
        const double step = opts.eta0 / std::sqrt(static_cast<double>(t)) / norm;
        for (int j = 0; j < kFeatureCount; ++j) w[j] -= step * gw[j];
        b -= step * gb;

        const double obj = objective(Z, y, w, b, C);
        if (obj < best) {
            best = obj;
            best_w = w;
            best_b = b;
        }
        if (t % opts.check_every == 0) {
            if (checkpoint - best <= opts.tolerance * std::max(1.0, std::abs(checkpoint))) break;
            checkpoint = best;
        }
    }
    for (int j = 0; j < kFeatureCount; ++j) m.weights[j] = retained[j] ? best_w[j] : 0.0;
    m.bias = best_b;

    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) correct += predict(m, X[i]).label == labels[i];
    m.training_accuracy = static_cast<double>(correct) / n;
    return m;
}

Prediction predict(const SvmModel& m, const FeatureVector& f) {
    double s = m.bias;
    for (int j = 0; j < kFeatureCount; ++j) s += m.weights[j] * (f[j] - m.means[j]) / m.stds[j];
    return {s > 0 ? SkillLabel::Improved : SkillLabel::Novice, s};
}

double cross_validate(const std::vector<FeatureVector>& X, const std::vector<SkillLabel>& y, int n_folds, double C) {
    if (n_folds < 2) throw ContractViolation("cross_validate needs at least two folds");
    std::size_t correct = 0;
    for (int k = 0; k < n_folds; ++k) {
        std::vector<FeatureVector> tx;
        std::vector<SkillLabel> ty;
        for (std::size_t i = 0; i < X.size(); ++i) {
            if (static_cast<int>(i % n_folds) == k) continue;
            tx.push_back(X[i]);
            ty.push_back(y[i]);
        }
        const SvmModel m = train_svm(tx, ty, C);
        for (std::size_t i = k; i < X.size(); i += n_folds) correct += predict(m, X[i]).label == y[i];
    }
    return static_cast<double>(correct) / X.size();
}

nlohmann::json model_to_json(const SvmModel& m) {
    return {{"version", kModelVersion}, {"weights", m.weights}, {"bias", m.bias}, {"means", m.means}, {"stds", m.stds}};
}

SvmModel model_from_json(const nlohmann::json& j) {
    try {
        if (!j.is_object()) throw FormatError("model must be a JSON object");
        if (j.at("version").get<int>() != kModelVersion)
            throw VersionError("model version " + j.at("version").dump() + " is not supported");
        SvmModel m;
        auto arr = [&](const char* key, std::array<double, kFeatureCount>& out) {
            const auto& a = j.at(key);
            if (!a.is_array() || a.size() != kFeatureCount)
                throw FormatError(std::string(key) + " must hold " + std::to_string(kFeatureCount) + " numbers");
            for (int i = 0; i < kFeatureCount; ++i) out[i] = a[i].get<double>();
        };
        arr("weights", m.weights);
        arr("means", m.means);
        arr("stds", m.stds);
        m.bias = j.at("bias").get<double>();
        for (double s : m.stds)
            if (!(s > 0)) throw FormatError("model stds must be positive");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad model file: ") + e.what());
    }
}

void save_model(const SvmModel& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path.string());
    out << model_to_json(m).dump(2) << "\n";
}

SvmModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open model " + path.string());
    try {
        return model_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad model file: ") + e.what());
    }
}

nlohmann::json corpus_record_to_json(const CorpusRecord& r) {
    return {{"label", to_string(r.label)}, {"features", r.features.values}};
}

std::vector<CorpusRecord> load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open corpus " + path.string());
    std::vector<CorpusRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            CorpusRecord r;
            r.label = skill_label_from_string(j.at("label").get<std::string>());
            const auto& f = j.at("features");
            if (!f.is_array() || f.size() != kFeatureCount) throw FormatError("features must hold 11 numbers");
            for (int i = 0; i < kFeatureCount; ++i) r.features[i] = f[i].get<double>();
            out.push_back(r);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("corpus line " + std::to_string(lineno) + ": " + e.what());
        } catch (const FormatError& e) {
            throw FormatError("corpus line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void append_corpus(const std::filesystem::path& path, const CorpusRecord& r) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw FormatError("cannot write " + path.string());
    out << corpus_record_to_json(r).dump() << "\n";
}

SessionSynopsis render_synopsis(const ActivityLog& log, const FeatureVector& f, const std::optional<Prediction>& verdict) {
    SessionSynopsis s;
    auto& r = s.report;
    const auto& names = FeatureVector::names();
    nlohmann::json feats = nlohmann::json::object();
    for (int i = 0; i < kFeatureCount; ++i) feats[names[i]] = f[i];
    r["features"] = feats;
    r["feature_vector"] = f.values;
    r["fps"] = log.fps;
    r["frames"] = log.intervals.empty() ? 0 : log.intervals.back().end_seq - log.intervals.front().start_seq + 1;

    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : log.events)
        events.push_back({{"kind", to_string(e.kind)}, {"seq", e.frame_seq}, {"intensity", e.intensity}});
    r["events"] = events;
    nlohmann::json placements = nlohmann::json::array();
    for (const auto& p : log.placements)
        placements.push_back({{"from", p.from_peg}, {"to", p.to_peg}, {"start_seq", p.start_seq}, {"end_seq", p.end_seq}});
    r["placements"] = placements;
    r["summary"] = log.placements.empty() ? std::string("no placements")
                                          : std::to_string(log.placements.size()) + " placements";
    if (verdict)
        r["verdict"] = {{"label", to_string(verdict->label)}, {"margin", verdict->margin}};
    else
        r["verdict"] = nullptr;

    std::ostringstream t;
    t << "Session synopsis (" << r["frames"].get<std::uint64_t>() << " frames at " << log.fps << " fps)\n";
    t << "Features:\n";
    for (int i = 0; i < kFeatureCount; ++i)
        t << "  " << std::left << std::setw(24) << names[i] << " " << f[i] << "\n";
    if (log.placements.empty()) {
        t << "Placements: no placements\n";
    } else {
        t << "Placements:\n";
        for (const auto& p : log.placements)
            t << "  peg " << p.from_peg << " -> peg " << p.to_peg << "  frames " << p.start_seq << "-" << p.end_seq
              << "\n";
    }
    t << "Timeline:\n";
    for (const auto& e : log.events)
        t << "  seq " << e.frame_seq << "  " << to_string(e.kind) << "  " << e.intensity << "\n";
    if (verdict)
        t << "Verdict: " << to_string(verdict->label) << " (margin " << verdict->margin << ")\n";
    s.text = t.str();
    return s;
}

std::string report_bytes(const SessionSynopsis& s) { return s.report.dump(2) + "\n"; }

}  // namespace netoas
