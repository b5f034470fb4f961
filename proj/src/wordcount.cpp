#include "ward/wordcount.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ward/csv.hpp"
#include "ward/error.hpp"
#include "ward/parallel.hpp"
#include "ward/rng.hpp"

namespace ward::wordcount {
namespace {

using nlohmann::json;

constexpr double kEps = 1e-12;

double median_of(std::vector<double> xs) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    std::size_t mid = xs.size() / 2;
    if (xs.size() % 2 == 1) return xs[mid];
    return 0.5 * (xs[mid - 1] + xs[mid]);
}

struct Dataset {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::size_t dim = 0;
};

Dataset make_dataset(const std::vector<FeatureVector>& features,
                     const std::vector<std::size_t>& word_counts, std::size_t threshold,
                     std::vector<std::string>& names_out) {
    if (features.size() != word_counts.size())
        raise(ErrorKind::validation, "feature and word-count lists differ in length");
    if (features.size() < 2) raise(ErrorKind::validation, "need at least 2 training samples");

    std::map<std::string, std::size_t> name_index;
    for (const auto& f : features)
        for (const auto& [name, value] : f.values) name_index.emplace(name, 0);
    names_out.clear();
    for (auto& [name, idx] : name_index) {
        idx = names_out.size();
        names_out.push_back(name);
    }

    Dataset data;
    data.dim = names_out.size();
    data.rows.reserve(features.size());
    for (const auto& f : features) {
        std::vector<double> row(data.dim, 0.0);
        for (const auto& [name, value] : f.values) row[name_index.at(name)] = value;
        data.rows.push_back(std::move(row));
    }
    for (std::size_t count : word_counts) data.labels.push_back(count > threshold ? 1 : 0);

    bool has0 = false, has1 = false;
    for (int y : data.labels) (y ? has1 : has0) = true;
    if (!has0 || !has1)
        raise(ErrorKind::validation, "training labels are single-class at this threshold");
    return data;
}

double gini(std::uint64_t c0, std::uint64_t c1) {
    double n = static_cast<double>(c0 + c1);
    if (n == 0.0) return 0.0;
    double p0 = c0 / n, p1 = c1 / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

struct TreeBuilder {
    const Dataset& data;
    std::size_t max_depth;
    std::size_t features_per_split;
    Rng rng;
    Tree tree;

    int leaf(const std::array<std::uint64_t, 2>& counts) {
        TreeNode node;
        node.counts = counts;
        tree.nodes.push_back(node);
        return static_cast<int>(tree.nodes.size() - 1);
    }

    int build(std::vector<std::uint32_t>& idx, std::size_t depth) {
        std::array<std::uint64_t, 2> counts{0, 0};
        for (auto i : idx) ++counts[static_cast<std::size_t>(data.labels[i])];
        if (depth >= max_depth || counts[0] == 0 || counts[1] == 0 || idx.size() < 2)
            return leaf(counts);

        // Feature subsample: partial Fisher-Yates over the feature ids.
        std::vector<std::uint32_t> pool(data.dim);
        for (std::uint32_t f = 0; f < data.dim; ++f) pool[f] = f;
        for (std::size_t i = 0; i < features_per_split; ++i) {
            std::size_t j = i + static_cast<std::size_t>(rng.bounded(pool.size() - i));
            std::swap(pool[i], pool[j]);
        }

        double parent = gini(counts[0], counts[1]);
        double best_score = parent - kEps;
        int best_feature = -1;
        double best_threshold = 0.0;

        std::vector<std::pair<double, int>> column(idx.size());
        for (std::size_t fi = 0; fi < features_per_split; ++fi) {
            std::uint32_t f = pool[fi];
            for (std::size_t i = 0; i < idx.size(); ++i)
                column[i] = {data.rows[idx[i]][f], data.labels[idx[i]]};
            std::sort(column.begin(), column.end());

            std::uint64_t l0 = 0, l1 = 0;
            for (std::size_t i = 1; i < column.size(); ++i) {
                ++(column[i - 1].second ? l1 : l0);
                if (column[i].first <= column[i - 1].first) continue;
                std::uint64_t r0 = counts[0] - l0, r1 = counts[1] - l1;
                double nl = static_cast<double>(l0 + l1), nr = static_cast<double>(r0 + r1);
                double score = (nl * gini(l0, l1) + nr * gini(r0, r1)) / static_cast<double>(idx.size());
                if (score < best_score) {
                    best_score = score;
                    best_feature = static_cast<int>(f);
                    best_threshold = 0.5 * (column[i - 1].first + column[i].first);
                }
            }
        }
        if (best_feature < 0) return leaf(counts);

        std::vector<std::uint32_t> left_idx, right_idx;
        for (auto i : idx)
            (data.rows[i][static_cast<std::size_t>(best_feature)] <= best_threshold ? left_idx
                                                                                    : right_idx)
                .push_back(i);
        if (left_idx.empty() || right_idx.empty()) return leaf(counts);
        idx.clear();
        idx.shrink_to_fit();

        int left = build(left_idx, depth + 1);
        int right = build(right_idx, depth + 1);
        TreeNode node;
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.left = left;
        node.right = right;
        node.counts = counts;
        tree.nodes.push_back(node);
        return static_cast<int>(tree.nodes.size() - 1);
    }
};

Tree build_tree(const Dataset& data, std::uint64_t seed, std::size_t max_depth,
                std::size_t features_per_split) {
    TreeBuilder builder{data, max_depth, features_per_split, Rng(seed), Tree{}};
    std::vector<std::uint32_t> bootstrap(data.rows.size());
    for (auto& i : bootstrap)
        i = static_cast<std::uint32_t>(builder.rng.bounded(data.rows.size()));
    int root = builder.build(bootstrap, 0);
    // The recursion appends parents after children; move the root to slot 0
    // and retarget edges that pointed at either swapped slot.
    auto& nodes = builder.tree.nodes;
    if (root != 0) {
        std::swap(nodes[0], nodes[static_cast<std::size_t>(root)]);
        for (auto& node : nodes) {
            if (node.feature < 0) continue;
            if (node.left == 0) node.left = root;
            else if (node.left == root) node.left = 0;
            if (node.right == 0) node.right = root;
            else if (node.right == root) node.right = 0;
        }
    }
    return builder.tree;
}

int tree_vote(const Tree& tree, const std::vector<double>& row) {
    if (tree.nodes.empty()) raise(ErrorKind::contract, "empty decision tree");
    const TreeNode* node = &tree.nodes[0];
    while (node->feature >= 0) {
        int next = row[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left
                                                                                   : node->right;
        node = &tree.nodes[static_cast<std::size_t>(next)];
    }
    return node->counts[1] > node->counts[0] ? 1 : 0;
}

ForestModel train_impl(const std::vector<FeatureVector>& features,
                       const std::vector<std::size_t>& word_counts, std::size_t threshold,
                       const ForestConfig& config, bool parallel) {
    ForestModel model;
    model.config = config;
    model.threshold_label = threshold;
    Dataset data = make_dataset(features, word_counts, threshold, model.feature_names);

    if (config.n_trees == 0) raise(ErrorKind::validation, "n_trees must be positive");
    if (model.config.features_per_split == 0)
        model.config.features_per_split = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(data.dim)))));
    model.config.features_per_split = std::min(model.config.features_per_split, data.dim);

    std::vector<double> below, above;
    for (std::size_t i = 0; i < word_counts.size(); ++i)
        (data.labels[i] ? above : below).push_back(static_cast<double>(word_counts[i]));
    model.class_median = {median_of(below), median_of(above)};

    model.trees.resize(config.n_trees);
    const long long total = static_cast<long long>(config.n_trees);
    if (parallel) {
        WARD_PRAGMA_OMP(parallel for schedule(dynamic))
        for (long long t = 0; t < total; ++t)
            model.trees[static_cast<std::size_t>(t)] =
                build_tree(data, Rng::derive_seed(config.seed, static_cast<std::uint64_t>(t)),
                           model.config.max_depth, model.config.features_per_split);
    } else {
        for (long long t = 0; t < total; ++t)
            model.trees[static_cast<std::size_t>(t)] =
                build_tree(data, Rng::derive_seed(config.seed, static_cast<std::uint64_t>(t)),
                           model.config.max_depth, model.config.features_per_split);
    }
    return model;
}

std::vector<double> model_row(const ForestModel& model, const FeatureVector& features) {
    std::vector<std::string> missing;
    std::vector<double> row(model.feature_names.size(), 0.0);
    for (std::size_t i = 0; i < model.feature_names.size(); ++i) {
        auto it = features.values.find(model.feature_names[i]);
        if (it == features.values.end()) {
            missing.push_back(model.feature_names[i]);
            continue;
        }
        row[i] = it->second;
    }
    if (!missing.empty()) {
        std::string joined;
        for (const auto& name : missing) joined += (joined.empty() ? "" : ", ") + name;
        raise(ErrorKind::contract, "feature vector is missing model features: " + joined);
    }
    return row;
}

ClassReport class_metrics(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
    ClassReport r;
    r.support = tp + fn;
    r.degenerate = (tp + fp) == 0;
    r.precision = r.degenerate ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    r.recall = r.support == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(r.support);
    r.f1 = (r.precision + r.recall) > 0.0
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
    return r;
}

json class_to_json(const ClassReport& r) {
    return json{{"precision", r.precision},
                {"recall", r.recall},
                {"f1", r.f1},
                {"support", r.support},
                {"degenerate", r.degenerate}};
}

}  // namespace

double LogNormalFit::median() const { return std::exp(mu); }

LogNormalFit fit_lognormal(const std::vector<double>& samples) {
    if (samples.empty()) raise(ErrorKind::validation, "cannot fit a distribution to zero samples");
    double sum = 0.0;
    for (double x : samples) {
        if (!(x > 0.0))
            raise(ErrorKind::domain, "log-normal samples must be positive, got " + std::to_string(x));
        sum += std::log(x);
    }
    LogNormalFit fit;
    fit.n = samples.size();
    fit.mu = sum / static_cast<double>(samples.size());
    double ss = 0.0;
    for (double x : samples) {
        double d = std::log(x) - fit.mu;
        ss += d * d;
    }
    fit.sigma = std::sqrt(ss / static_cast<double>(samples.size()));
    return fit;
}

std::vector<std::string> feature_schema() {
    std::map<std::string, double> zero;
    for (const auto& spec : segmenter::default_section_specs()) {
        if (spec.canonical_name == "brief_hospital_course" ||
            spec.canonical_name == "discharge_instructions")
            continue;
        zero["words_" + spec.canonical_name] = 0.0;
    }
    zero["n_diagnoses"] = 0.0;
    zero["n_transfers"] = 0.0;
    zero["stay_duration_hours"] = 0.0;
    zero["n_radiology_notes"] = 0.0;
    std::vector<std::string> names;
    for (const auto& [name, value] : zero) names.push_back(name);
    return names;
}

FeatureVector extract_features(const corpus::DischargeRecord& record,
                               const segmenter::SectionedLetter& letter) {
    FeatureVector f;
    for (const auto& name : feature_schema()) f.values[name] = 0.0;
    for (const auto& [name, body] : letter.sections) {
        auto it = f.values.find("words_" + name);
        if (it != f.values.end()) it->second = static_cast<double>(segmenter::word_count(body));
    }
    if (record.admission) {
        f.values["n_diagnoses"] = static_cast<double>(record.admission->diagnoses.size());
        f.values["n_transfers"] = static_cast<double>(record.admission->transfer_summary.size());
        f.values["stay_duration_hours"] = record.admission->stay_duration_hours;
    }
    f.values["n_radiology_notes"] = static_cast<double>(record.radiology_notes.size());
    return f;
}

ForestModel train_forest(const std::vector<FeatureVector>& features,
                         const std::vector<std::size_t>& word_counts, std::size_t threshold,
                         const ForestConfig& config) {
    return train_impl(features, word_counts, threshold, config, true);
}

ForestModel train_forest_serial(const std::vector<FeatureVector>& features,
                                const std::vector<std::size_t>& word_counts, std::size_t threshold,
                                const ForestConfig& config) {
    return train_impl(features, word_counts, threshold, config, false);
}

Prediction predict_class(const ForestModel& model, const FeatureVector& features) {
    if (model.trees.empty()) raise(ErrorKind::contract, "model has no trees");
    std::vector<double> row = model_row(model, features);
    std::size_t ones = 0;
    for (const auto& tree : model.trees) ones += static_cast<std::size_t>(tree_vote(tree, row));
    Prediction p;
    p.votes = static_cast<double>(ones) / static_cast<double>(model.trees.size());
    p.above = 2 * ones > model.trees.size();
    return p;
}

ClassifierReport build_report(const std::vector<bool>& predicted, const std::vector<bool>& actual,
                              std::size_t threshold) {
    if (predicted.size() != actual.size())
        raise(ErrorKind::validation, "prediction and truth lists differ in length");
    if (predicted.empty()) raise(ErrorKind::validation, "cannot report on an empty evaluation set");
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i] && actual[i]) ++tp;
        else if (predicted[i] && !actual[i]) ++fp;
        else if (!predicted[i] && actual[i]) ++fn;
        else ++tn;
    }
    ClassifierReport report;
    report.threshold = threshold;
    report.total = predicted.size();
    report.above = class_metrics(tp, fp, fn);
    report.below = class_metrics(tn, fn, fp);
    report.accuracy = static_cast<double>(tp + tn) / static_cast<double>(report.total);
    return report;
}

ClassifierReport evaluate_classifier(const ForestModel& model,
                                     const std::vector<FeatureVector>& eval_features,
                                     const std::vector<std::size_t>& eval_counts,
                                     std::size_t threshold) {
    if (eval_features.size() != eval_counts.size())
        raise(ErrorKind::validation, "feature and word-count lists differ in length");
    if (eval_features.empty()) raise(ErrorKind::validation, "empty evaluation set");
    std::vector<bool> predicted, actual;
    predicted.reserve(eval_features.size());
    for (const auto& f : eval_features) predicted.push_back(predict_class(model, f).above);
    for (std::size_t count : eval_counts) actual.push_back(count > threshold);
    return build_report(predicted, actual, threshold);
}

std::string format_report(const ClassifierReport& report) {
    char line[128];
    std::ostringstream out;
    out << "              precision    recall  f1-score   support\n\n";
    auto row = [&](const std::string& label, const ClassReport& r) {
        std::snprintf(line, sizeof line, "%13s     %6.3f    %6.3f    %6.3f  %8zu\n", label.c_str(),
                      r.precision, r.recall, r.f1, r.support);
        out << line;
    };
    row("> " + std::to_string(report.threshold) + " words", report.above);
    row("< " + std::to_string(report.threshold) + " words", report.below);
    std::snprintf(line, sizeof line, "\n%13s                        %6.3f  %8zu\n", "accuracy",
                  report.accuracy, report.total);
    out << line;
    return out.str();
}

std::string report_to_json(const ClassifierReport& report) {
    json j{{"threshold", report.threshold},
           {"above", class_to_json(report.above)},
           {"below", class_to_json(report.below)},
           {"accuracy", report.accuracy},
           {"total", report.total}};
    return j.dump(2);
}

void save_model(const ForestModel& model, const std::string& path) {
    json trees = json::array();
    for (const auto& tree : model.trees) {
        json nodes = json::array();
        for (const auto& node : tree.nodes)
            nodes.push_back(json::array({node.feature, node.threshold, node.left, node.right,
                                         node.counts[0], node.counts[1]}));
        trees.push_back(json{{"nodes", std::move(nodes)}});
    }
    json j{{"config",
            {{"n_trees", model.config.n_trees},
             {"max_depth", model.config.max_depth},
             {"features_per_split", model.config.features_per_split},
             {"seed", model.config.seed}}},
           {"threshold_label", model.threshold_label},
           {"feature_names", model.feature_names},
           {"class_median", model.class_median},
           {"trees", std::move(trees)}};
    atomic_write_file(path, j.dump());
}

ForestModel load_model(const std::string& path) {
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) raise(ErrorKind::schema, "model file is not valid JSON: " + path);
    try {
        ForestModel model;
        model.config.n_trees = j.at("config").at("n_trees").get<std::size_t>();
        model.config.max_depth = j.at("config").at("max_depth").get<std::size_t>();
        model.config.features_per_split = j.at("config").at("features_per_split").get<std::size_t>();
        model.config.seed = j.at("config").at("seed").get<std::uint64_t>();
        model.threshold_label = j.at("threshold_label").get<std::size_t>();
        model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        model.class_median = j.at("class_median").get<std::array<double, 2>>();
        for (const auto& jt : j.at("trees")) {
            Tree tree;
            for (const auto& jn : jt.at("nodes")) {
                if (!jn.is_array() || jn.size() != 6)
                    raise(ErrorKind::schema, "malformed tree node in " + path);
                TreeNode node;
                node.feature = jn[0].get<int>();
                node.threshold = jn[1].get<double>();
                node.left = jn[2].get<int>();
                node.right = jn[3].get<int>();
                node.counts = {jn[4].get<std::uint64_t>(), jn[5].get<std::uint64_t>()};
                if (node.feature >= static_cast<int>(model.feature_names.size()))
                    raise(ErrorKind::schema, "tree node references an unknown feature in " + path);
                tree.nodes.push_back(node);
            }
            for (const auto& node : tree.nodes) {
                if (node.feature < 0) continue;
                if (node.left < 0 || node.right < 0 ||
                    node.left >= static_cast<int>(tree.nodes.size()) ||
                    node.right >= static_cast<int>(tree.nodes.size()))
                    raise(ErrorKind::schema, "tree node children out of range in " + path);
            }
            if (tree.nodes.empty()) raise(ErrorKind::schema, "empty tree in " + path);
            model.trees.push_back(std::move(tree));
        }
        if (model.trees.size() != model.config.n_trees)
            raise(ErrorKind::schema, "tree count disagrees with config in " + path);
        return model;
    } catch (const json::exception& e) {
        raise(ErrorKind::schema, "model file " + path + " is malformed: " + e.what());
    }
}

retrieval::WordCountSource parse_word_count_strategy(std::string_view name) {
    if (name == "fixed") return retrieval::WordCountSource::fixed;
    if (name == "retrieved") return retrieval::WordCountSource::retrieved;
    if (name == "classifier") return retrieval::WordCountSource::classifier;
    if (name == "distribution" || name == "distribution_median")
        return retrieval::WordCountSource::distribution;
    raise(ErrorKind::validation, "unknown word-count strategy '" + std::string(name) +
                                     "' (expected fixed | retrieved | classifier | distribution_median)");
}

retrieval::WordCountTarget predict_word_count(retrieval::WordCountSource strategy,
                                              const PredictInputs& inputs) {
    using retrieval::WordCountSource;
    retrieval::WordCountTarget target;
    target.source = strategy;
    switch (strategy) {
        case WordCountSource::fixed:
            target.words_text =
                inputs.fixed_override.value_or(inputs.task == Task::bhc ? "420" : "100-200");
            return target;
        case WordCountSource::retrieved: {
            if (!inputs.index || !inputs.letter || !inputs.context_spec || !inputs.provider ||
                inputs.hadm_id.empty())
                raise(ErrorKind::config,
                      "retrieved strategy needs an index, letter, context spec, provider, and hadm_id");
            static const std::optional<corpus::PatientAdmissionSummary> no_admission;
            const auto& admission = inputs.admission ? *inputs.admission : no_admission;
            return retrieval::retrieve_word_count(*inputs.index, *inputs.letter, admission,
                                                  inputs.hadm_id, *inputs.context_spec,
                                                  *inputs.provider, inputs.exclude_self);
        }
        case WordCountSource::classifier: {
            if (!inputs.model || !inputs.features)
                raise(ErrorKind::config, "classifier strategy needs a trained model and features");
            Prediction p = predict_class(*inputs.model, *inputs.features);
            double median = inputs.model->class_median[p.above ? 1 : 0];
            target.words_text = std::to_string(std::llround(median));
            return target;
        }
        case WordCountSource::distribution: {
            if (!inputs.fit) raise(ErrorKind::config, "distribution strategy needs a fitted model");
            target.words_text = std::to_string(std::llround(inputs.fit->median()));
            return target;
        }
    }
    raise(ErrorKind::contract, "unhandled word-count strategy");
}

}  // namespace ward::wordcount
