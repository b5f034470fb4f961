#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ward/corpus.hpp"
#include "ward/retrieval.hpp"
#include "ward/segmenter.hpp"
#include "ward/task.hpp"

namespace ward::wordcount {

struct LogNormalFit {
    double mu = 0.0;
    double sigma = 0.0;
    std::size_t n = 0;

    double median() const;
};

// MLE over ln(x): mu is the mean, sigma the population standard deviation.
LogNormalFit fit_lognormal(const std::vector<double>& samples);

// Name-keyed so insertion order never matters and the schema can grow.
struct FeatureVector {
    std::map<std::string, double> values;
};

// Per-section word counts for every canonical section except the two
// generation targets, plus admission-derived counts. Missing data scores 0,
// so every record yields the same schema.
FeatureVector extract_features(const corpus::DischargeRecord& record,
                               const segmenter::SectionedLetter& letter);

std::vector<std::string> feature_schema();

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::array<std::uint64_t, 2> counts{0, 0};  // class histogram at this node
};

struct Tree {
    std::vector<TreeNode> nodes;  // node 0 is the root
};

struct ForestConfig {
    std::size_t n_trees = 100;
    std::size_t max_depth = 12;
    std::size_t features_per_split = 0;  // 0 means round(sqrt(d))
    std::uint64_t seed = 0;
};

struct ForestModel {
    ForestConfig config;
    std::vector<std::string> feature_names;
    std::size_t threshold_label = 0;
    std::array<double, 2> class_median{0.0, 0.0};  // training word-count medians
    std::vector<Tree> trees;
};

// Labels are word_count > threshold. Each tree gets its own bootstrap sample
// and per-split feature subsample from a seed derived per tree, so the
// parallel and serial variants build identical forests.
ForestModel train_forest(const std::vector<FeatureVector>& features,
                         const std::vector<std::size_t>& word_counts, std::size_t threshold,
                         const ForestConfig& config = {});
ForestModel train_forest_serial(const std::vector<FeatureVector>& features,
                                const std::vector<std::size_t>& word_counts, std::size_t threshold,
                                const ForestConfig& config = {});

struct Prediction {
    bool above = false;      // class 1: word count above the threshold
    double votes = 0.0;      // fraction of trees voting class 1
};

// Majority vote; an exact tie goes to class 0, the majority band.
Prediction predict_class(const ForestModel& model, const FeatureVector& features);

struct ClassReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
    bool degenerate = false;  // no predictions for this class, precision forced to 0
};

struct ClassifierReport {
    std::size_t threshold = 0;
    ClassReport below;  // class 0
    ClassReport above;  // class 1
    std::size_t total = 0;
    double accuracy = 0.0;
};

ClassifierReport build_report(const std::vector<bool>& predicted, const std::vector<bool>& actual,
                              std::size_t threshold);

ClassifierReport evaluate_classifier(const ForestModel& model,
                                     const std::vector<FeatureVector>& eval_features,
                                     const std::vector<std::size_t>& eval_counts,
                                     std::size_t threshold);

// Aligned-column text: one row per class band, then accuracy.
std::string format_report(const ClassifierReport& report);
std::string report_to_json(const ClassifierReport& report);

void save_model(const ForestModel& model, const std::string& path);
ForestModel load_model(const std::string& path);

// Inputs for predict_word_count; each strategy reads its own slice and
// raises a config error when that slice is missing.
struct PredictInputs {
    Task task = Task::bhc;
    std::optional<std::string> fixed_override;

    const retrieval::RetrievalIndex* index = nullptr;
    const segmenter::SectionedLetter* letter = nullptr;
    const std::optional<corpus::PatientAdmissionSummary>* admission = nullptr;
    std::string hadm_id;
    const retrieval::TaskContextSpec* context_spec = nullptr;
    retrieval::EmbeddingProvider* provider = nullptr;
    bool exclude_self = false;

    const ForestModel* model = nullptr;
    const FeatureVector* features = nullptr;

    const LogNormalFit* fit = nullptr;
};

retrieval::WordCountSource parse_word_count_strategy(std::string_view name);

retrieval::WordCountTarget predict_word_count(retrieval::WordCountSource strategy,
                                              const PredictInputs& inputs);

}  // namespace ward::wordcount
