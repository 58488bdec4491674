#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "netoas/activity_log.hpp"

namespace netoas {

inline constexpr int kFeatureCount = 11;
inline constexpr int kModelVersion = 1;

struct FeatureVector {
    std::array<double, kFeatureCount> values{};

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    bool operator==(const FeatureVector&) const = default;

    static const std::array<const char*, kFeatureCount>& names();
};

FeatureVector extract_features(const ActivityLog& log, double jerk_curvature_thresh = 0.2);

enum class SkillLabel { Novice, Improved };
const char* to_string(SkillLabel l);
SkillLabel skill_label_from_string(const std::string& s);

struct SvmModel {
    std::array<double, kFeatureCount> weights{};
    double bias = 0;
    std::array<double, kFeatureCount> means{};
    std::array<double, kFeatureCount> stds{};
    double training_accuracy = 0;

    bool operator==(const SvmModel&) const = default;
};

struct SvmTrainOptions {
    double eta0 = 1.0;
    double tolerance = 1e-5;
    int check_every = 200;
    int max_iterations = 50000;
};

SvmModel train_svm(const std::vector<FeatureVector>& X, const std::vector<SkillLabel>& y, double C = 1.0,
                   const SvmTrainOptions& opts = {});

struct Prediction {
    SkillLabel label = SkillLabel::Novice;
    double margin = 0;
};

Prediction predict(const SvmModel& m, const FeatureVector& f);

// Accuracy of held-out predictions when sample i is tested in fold i % n_folds.
double cross_validate(const std::vector<FeatureVector>& X, const std::vector<SkillLabel>& y, int n_folds,
                      double C = 1.0);

nlohmann::json model_to_json(const SvmModel& m);
SvmModel model_from_json(const nlohmann::json& j);
void save_model(const SvmModel& m, const std::filesystem::path& path);
SvmModel load_model(const std::filesystem::path& path);

struct CorpusRecord {
    SkillLabel label = SkillLabel::Novice;
    FeatureVector features;
};
std::vector<CorpusRecord> load_corpus(const std::filesystem::path& path);
void append_corpus(const std::filesystem::path& path, const CorpusRecord& r);
nlohmann::json corpus_record_to_json(const CorpusRecord& r);

struct SessionSynopsis {
    nlohmann::json report;
    std::string text;
};

SessionSynopsis render_synopsis(const ActivityLog& log, const FeatureVector& f,
                                const std::optional<Prediction>& verdict = std::nullopt);
// Stable serialization used for report files.
std::string report_bytes(const SessionSynopsis& s);

}  // namespace netoas
