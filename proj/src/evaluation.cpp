#include "ward/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>

#include <nlohmann/json.hpp>

#include "ward/error.hpp"
#include "ward/httpx.hpp"
#include "ward/parallel.hpp"
#include "ward/rng.hpp"

namespace ward::evaluation {
namespace {

using nlohmann::json;

using TokenList = std::vector<std::string>;

bool word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

using Counts = std::map<std::string, std::size_t>;

std::string gram_key(const TokenList& tokens, std::size_t start, std::size_t n) {
    std::string key;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) key += '\x1f';
        key += tokens[start + i];
    }
    return key;
}

Counts ngram_counts(const TokenList& tokens, std::size_t n) {
    Counts counts;
    if (tokens.size() >= n)
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) ++counts[gram_key(tokens, i, n)];
    return counts;
}

std::size_t clipped_overlap(const Counts& hyp, const Counts& ref) {
    std::size_t overlap = 0;
    for (const auto& [gram, count] : hyp) {
        auto it = ref.find(gram);
        if (it != ref.end()) overlap += std::min(count, it->second);
    }
    return overlap;
}

double fscore(double p, double r, double beta) {
    if (p <= 0.0 || r <= 0.0) return 0.0;
    double b2 = beta * beta;
    return (1.0 + b2) * p * r / (r + b2 * p);
}

std::size_t lcs_length(const TokenList& a, const TokenList& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    TokenList tokens;
    std::string word;
    for (unsigned char c : text) {
        if (word_byte(c)) {
            word += static_cast<char>(std::tolower(c));
            continue;
        }
        if (!word.empty()) {
            tokens.push_back(std::move(word));
            word.clear();
        }
        if (!std::isspace(c)) tokens.push_back(std::string(1, static_cast<char>(c)));
    }
    if (!word.empty()) tokens.push_back(std::move(word));
    return tokens;
}

double bleu4(const std::string& hypothesis, const std::string& reference, Smoothing smoothing) {
    TokenList hyp = tokenize(hypothesis);
    TokenList ref = tokenize(reference);
    std::size_t c = hyp.size(), r = ref.size();
    if (c == 0) return 0.0;

    double log_sum = 0.0;
    std::size_t orders = 0;
    for (std::size_t n = 1; n <= 4; ++n) {
        if (c < n) continue;
        double total = static_cast<double>(c - n + 1);
        double clipped =
            static_cast<double>(clipped_overlap(ngram_counts(hyp, n), ngram_counts(ref, n)));
        double p = clipped / total;
        if (p == 0.0) {
            if (smoothing == Smoothing::none) return 0.0;
            p = 1e-9;
        }
        log_sum += std::log(p);
        ++orders;
    }
    if (orders == 0) return 0.0;
    double geo = std::exp(log_sum / static_cast<double>(orders));
    double bp = c < r ? std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c)) : 1.0;
    return bp * geo;
}

double rouge(const std::string& hypothesis, const std::string& reference, RougeVariant variant,
             double beta) {
    if (beta <= 0.0) raise(ErrorKind::validation, "rouge beta must be positive");
    TokenList hyp = tokenize(hypothesis);
    TokenList ref = tokenize(reference);
    if (hyp.empty() || ref.empty()) return 0.0;

    if (variant == RougeVariant::rougeL) {
        double lcs = static_cast<double>(lcs_length(hyp, ref));
        return fscore(lcs / static_cast<double>(hyp.size()), lcs / static_cast<double>(ref.size()),
                      beta);
    }
    std::size_t n = variant == RougeVariant::rouge1 ? 1 : 2;
    if (hyp.size() < n || ref.size() < n) return 0.0;
    double overlap =
        static_cast<double>(clipped_overlap(ngram_counts(hyp, n), ngram_counts(ref, n)));
    return fscore(overlap / static_cast<double>(hyp.size() - n + 1),
                  overlap / static_cast<double>(ref.size() - n + 1), beta);
}

namespace {

// Chunks from greedy tiling: repeatedly take the longest common token run
// among still-unmatched positions (ties at the smallest hyp then ref offset),
// then pair whatever single tokens remain.
std::size_t chunk_count(const TokenList& hyp, const TokenList& ref, std::size_t m) {
    std::vector<bool> used_h(hyp.size(), false), used_r(ref.size(), false);
    std::size_t chunks = 0;
    std::size_t matched = 0;
    while (matched < m) {
        std::size_t best_len = 0, best_i = 0, best_j = 0;
        for (std::size_t i = 0; i < hyp.size(); ++i) {
            if (used_h[i]) continue;
            for (std::size_t j = 0; j < ref.size(); ++j) {
                if (used_r[j]) continue;
                std::size_t len = 0;
                while (i + len < hyp.size() && j + len < ref.size() && !used_h[i + len] &&
                       !used_r[j + len] && hyp[i + len] == ref[j + len])
                    ++len;
                if (len > best_len) {
                    best_len = len;
                    best_i = i;
                    best_j = j;
                }
            }
        }
        if (best_len == 0) break;
        for (std::size_t k = 0; k < best_len; ++k) {
            used_h[best_i + k] = true;
            used_r[best_j + k] = true;
        }
        matched += best_len;
        ++chunks;
    }
    return chunks;
}

}  // namespace

double meteor(const std::string& hypothesis, const std::string& reference) {
    TokenList hyp = tokenize(hypothesis);
    TokenList ref = tokenize(reference);
    if (hyp.empty() || ref.empty()) return 0.0;
    double m =
        static_cast<double>(clipped_overlap(ngram_counts(hyp, 1), ngram_counts(ref, 1)));
    if (m == 0.0) return 0.0;

    double p = m / static_cast<double>(hyp.size());
    double r = m / static_cast<double>(ref.size());
    double fmean = 10.0 * p * r / (r + 9.0 * p);
    double chunks = static_cast<double>(chunk_count(hyp, ref, static_cast<std::size_t>(m)));
    double penalty = 0.5 * std::pow(chunks / m, 3.0);
    return fmean * (1.0 - penalty);
}

const std::vector<std::string>& native_metric_names() {
    static const std::vector<std::string> names{"bleu", "rouge1", "rouge2", "rougel", "meteor"};
    return names;
}

const std::vector<std::string>& external_metric_names() {
    static const std::vector<std::string> names{"bertscore", "align", "medcon"};
    return names;
}

namespace {

double native_metric(const std::string& name, const std::string& hyp, const std::string& ref) {
    if (name == "bleu") return bleu4(hyp, ref, Smoothing::epsilon);
    if (name == "rouge1") return rouge(hyp, ref, RougeVariant::rouge1);
    if (name == "rouge2") return rouge(hyp, ref, RougeVariant::rouge2);
    if (name == "rougel") return rouge(hyp, ref, RougeVariant::rougeL);
    if (name == "meteor") return meteor(hyp, ref);
    raise(ErrorKind::validation, "unknown metric: " + name);
}

void validate_scorers(const std::vector<ExternalScorer>& scorers) {
    const auto& known = external_metric_names();
    for (const auto& scorer : scorers) {
        if (std::find(known.begin(), known.end(), scorer.name) == known.end())
            raise(ErrorKind::config, "unknown external scorer: " + scorer.name);
        httpx::validate_base_url(scorer.url);
    }
}

double recompute_overall(const std::map<std::string, double>& scores) {
    if (scores.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& [name, value] : scores) sum += value;
    return sum / static_cast<double>(scores.size());
}

}  // namespace

MetricReport score_record(const std::string& hypothesis, const std::string& reference,
                          const std::vector<ExternalScorer>& scorers,
                          std::vector<std::string>* warnings) {
    validate_scorers(scorers);
    MetricReport report;
    for (const auto& name : native_metric_names())
        report.scores[name] = native_metric(name, hypothesis, reference);

    std::set<std::string> succeeded;
    for (const auto& scorer : scorers) {
        httpx::HttpConfig http;
        http.base_url = scorer.url;
        http.timeout_s = scorer.timeout_s;
        http.max_retries = scorer.max_retries;
        http.backoff_s = scorer.backoff_s;
        try {
            auto res = httpx::post_json(http, "/score",
                                        json{{"hypothesis", hypothesis}, {"reference", reference}});
            if (!res.body.contains("score") || !res.body["score"].is_number())
                raise(ErrorKind::contract, "scorer reply is missing a numeric 'score'");
            double value = res.body["score"].get<double>();
            if (value < 0.0 || value > 1.0)
                raise(ErrorKind::contract, "scorer value outside [0,1]");
            report.scores[scorer.name] = value;
            succeeded.insert(scorer.name);
        } catch (const Error& e) {
            if (warnings)
                warnings->push_back(scorer.name + " scorer unavailable: " + e.what());
        }
    }
    for (const auto& name : external_metric_names())
        if (!succeeded.count(name)) report.missing.push_back(name);
    report.overall = recompute_overall(report.scores);
    return report;
}

MetricReport aggregate_reports(const std::vector<MetricReport>& reports) {
    if (reports.empty()) raise(ErrorKind::validation, "cannot aggregate zero reports");
    std::map<std::string, std::size_t> presence;
    std::map<std::string, double> sums;
    std::set<std::string> missing;
    for (const auto& report : reports) {
        for (const auto& [name, value] : report.scores) {
            ++presence[name];
            sums[name] += value;
        }
        missing.insert(report.missing.begin(), report.missing.end());
    }
    MetricReport out;
    out.aggregation = "mean_of_records";
    for (const auto& [name, count] : presence) {
        if (count == reports.size())
            out.scores[name] = sums[name] / static_cast<double>(reports.size());
        else
            missing.insert(name);
    }
    for (const auto& name : missing)
        if (!out.scores.count(name)) out.missing.push_back(name);
    out.overall = recompute_overall(out.scores);
    return out;
}

namespace {

MetricReport score_corpus_impl(const std::map<std::string, std::string>& predictions,
                               const std::map<std::string, std::string>& references,
                               const std::vector<ExternalScorer>& scorers,
                               std::vector<std::string>* warnings, bool parallel) {
    validate_scorers(scorers);
    std::vector<std::string> keys;
    for (const auto& [hadm, text] : predictions)
        if (references.count(hadm)) keys.push_back(hadm);
    if (keys.empty())
        raise(ErrorKind::validation, "predictions and references share no hadm_ids");

    std::vector<MetricReport> reports(keys.size());
    std::vector<std::vector<std::string>> slot_warnings(keys.size());
    auto body = [&](std::size_t i) {
        reports[i] = score_record(predictions.at(keys[i]), references.at(keys[i]), scorers,
                                  warnings ? &slot_warnings[i] : nullptr);
    };
    if (parallel) {
        WARD_PRAGMA_OMP(parallel for schedule(dynamic))
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(keys.size()); ++i)
            body(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < keys.size(); ++i) body(i);
    }
    if (warnings)
        for (const auto& slot : slot_warnings)
            warnings->insert(warnings->end(), slot.begin(), slot.end());
    return aggregate_reports(reports);
}

}  // namespace

MetricReport score_corpus(const std::map<std::string, std::string>& predictions,
                          const std::map<std::string, std::string>& references,
                          const std::vector<ExternalScorer>& scorers,
                          std::vector<std::string>* warnings) {
    return score_corpus_impl(predictions, references, scorers, warnings, true);
}

MetricReport score_corpus_serial(const std::map<std::string, std::string>& predictions,
                                 const std::map<std::string, std::string>& references,
                                 const std::vector<ExternalScorer>& scorers,
                                 std::vector<std::string>* warnings) {
    return score_corpus_impl(predictions, references, scorers, warnings, false);
}

namespace {

struct GoldRecord {
    std::string hadm_id;
    std::string gold;
    std::size_t index = 0;  // into corpus.records / letters
};

// Records carrying the task's gold target, sorted by hadm_id.
std::vector<GoldRecord> gold_records(const corpus::Corpus& corpus,
                                     const std::vector<segmenter::SectionedLetter>& letters,
                                     Task task) {
    if (corpus.records.size() != letters.size())
        raise(ErrorKind::contract, "corpus/letter size mismatch");
    std::vector<GoldRecord> out;
    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
        auto targets = segmenter::extract_targets(letters[i]);
        const auto& chosen = task == Task::bhc ? targets.bhc : targets.di;
        if (chosen) out.push_back({corpus.records[i].hadm_id, *chosen, i});
    }
    std::sort(out.begin(), out.end(),
              [](const GoldRecord& a, const GoldRecord& b) { return a.hadm_id < b.hadm_id; });
    return out;
}

std::vector<std::string> resolve_metrics(const std::vector<std::string>& metrics) {
    if (metrics.empty()) return native_metric_names();
    const auto& known = native_metric_names();
    for (const auto& name : metrics)
        if (std::find(known.begin(), known.end(), name) == known.end())
            raise(ErrorKind::validation, "unknown metric: " + name);
    return metrics;
}

RankingTable rank_sections_impl(const corpus::Corpus& corpus,
                                const std::vector<segmenter::SectionedLetter>& letters, Task task,
                                const std::vector<std::string>& metric_arg, bool parallel) {
    auto metrics = resolve_metrics(metric_arg);
    auto gold = gold_records(corpus, letters, task);
    if (gold.empty())
        raise(ErrorKind::validation, "no records carry the gold target section");

    std::vector<std::string> candidates;
    for (const auto& spec : segmenter::default_section_specs())
        if (spec.canonical_name != task_section_name(task))
            candidates.push_back(spec.canonical_name);
    if (candidates.size() < 2)
        raise(ErrorKind::validation, "need at least two candidate sections");

    RankingTable table;
    table.task = task;
    table.records_used = gold.size();
    table.rows.resize(candidates.size());

    auto score_candidate = [&](std::size_t c) {
        RankingRow row;
        row.section_name = candidates[c];
        for (const auto& metric : metrics) row.per_metric_mean[metric] = 0.0;
        for (const auto& record : gold) {
            const std::string* body = letters[record.index].find(candidates[c]);
            if (!body || body->empty()) continue;  // scores 0 for this record
            for (const auto& metric : metrics)
                row.per_metric_mean[metric] += native_metric(metric, *body, record.gold);
        }
        for (auto& [metric, sum] : row.per_metric_mean)
            sum /= static_cast<double>(gold.size());
        table.rows[c] = std::move(row);
    };
    if (parallel) {
        WARD_PRAGMA_OMP(parallel for schedule(dynamic))
        for (std::int64_t c = 0; c < static_cast<std::int64_t>(candidates.size()); ++c)
            score_candidate(static_cast<std::size_t>(c));
    } else {
        for (std::size_t c = 0; c < candidates.size(); ++c) score_candidate(c);
    }

    // Competition ranking per metric: tied means share a rank.
    for (auto& row : table.rows) {
        double rank_sum = 0.0;
        for (const auto& metric : metrics) {
            std::size_t better = 0;
            for (const auto& other : table.rows)
                if (other.per_metric_mean.at(metric) > row.per_metric_mean.at(metric)) ++better;
            double rank = static_cast<double>(better + 1);
            row.per_metric_rank[metric] = rank;
            rank_sum += rank;
        }
        row.avg_rank = rank_sum / static_cast<double>(metrics.size());
    }
    std::sort(table.rows.begin(), table.rows.end(), [](const RankingRow& a, const RankingRow& b) {
        if (a.avg_rank != b.avg_rank) return a.avg_rank < b.avg_rank;
        return a.section_name < b.section_name;
    });
    for (std::size_t i = 0; i < table.rows.size(); ++i) table.rows[i].final_rank = i + 1;
    return table;
}

}  // namespace

RankingTable rank_sections(const corpus::Corpus& corpus,
                           const std::vector<segmenter::SectionedLetter>& letters, Task task,
                           const std::vector<std::string>& metrics) {
    return rank_sections_impl(corpus, letters, task, metrics, true);
}

RankingTable rank_sections_serial(const corpus::Corpus& corpus,
                                  const std::vector<segmenter::SectionedLetter>& letters, Task task,
                                  const std::vector<std::string>& metrics) {
    return rank_sections_impl(corpus, letters, task, metrics, false);
}

std::string_view baseline_kind_name(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::random_shuffle: return "random_shuffle";
        case BaselineKind::retrieved_target: return "retrieved_target";
        case BaselineKind::fixed_word: return "fixed_word";
        case BaselineKind::pipeline: return "pipeline";
    }
    raise(ErrorKind::contract, "unhandled baseline kind");
}

BaselineKind parse_baseline_kind(std::string_view name) {
    for (BaselineKind kind : {BaselineKind::random_shuffle, BaselineKind::retrieved_target,
                              BaselineKind::fixed_word, BaselineKind::pipeline})
        if (name == baseline_kind_name(kind)) return kind;
    raise(ErrorKind::validation, "unknown baseline kind: " + std::string(name));
}

std::map<std::string, std::string> run_baseline(BaselineKind kind, const corpus::Corpus& corpus,
                                                const std::vector<segmenter::SectionedLetter>& letters,
                                                Task task, std::uint64_t seed,
                                                const BaselineInputs& inputs) {
    std::map<std::string, std::string> predictions;
    switch (kind) {
        case BaselineKind::random_shuffle: {
            auto gold = gold_records(corpus, letters, task);
            if (gold.empty())
                raise(ErrorKind::validation, "no records carry the gold target section");
            std::vector<std::string> texts;
            texts.reserve(gold.size());
            for (const auto& record : gold) texts.push_back(record.gold);
            Rng rng(seed);
            for (std::size_t i = texts.size() - 1; i > 0; --i) {
                std::size_t j = rng.bounded(i + 1);
                std::swap(texts[i], texts[j]);
            }
            for (std::size_t i = 0; i < gold.size(); ++i)
                predictions[gold[i].hadm_id] = texts[i];
            return predictions;
        }
        case BaselineKind::retrieved_target: {
            if (!inputs.index || !inputs.provider)
                raise(ErrorKind::config,
                      "retrieved_target baseline needs an index and embedding provider");
            if (inputs.index->entries.empty())
                raise(ErrorKind::validation, "retrieval index is empty");
            auto gold = gold_records(corpus, letters, task);
            if (gold.empty())
                raise(ErrorKind::validation, "no records carry the gold target section");
            std::map<std::string, const std::string*> gold_by_hadm;
            for (const auto& record : gold) gold_by_hadm[record.hadm_id] = &record.gold;
            auto spec = retrieval::TaskContextSpec::defaults(task);
            for (const auto& record : gold) {
                auto context = retrieval::build_task_context(
                    letters[record.index], corpus.records[record.index].admission, spec);
                auto hits = retrieval::search(*inputs.index, inputs.provider->embed(context), 2);
                const retrieval::SearchHit* neighbor = nullptr;
                for (const auto& hit : hits)
                    if (hit.hadm_id != record.hadm_id) {
                        neighbor = &hit;
                        break;
                    }
                if (!neighbor)
                    raise(ErrorKind::not_found,
                          "no retrieval neighbor for hadm_id " + record.hadm_id);
                auto it = gold_by_hadm.find(neighbor->hadm_id);
                if (it == gold_by_hadm.end())
                    raise(ErrorKind::contract,
                          "index entry has no gold text: " + neighbor->hadm_id);
                predictions[record.hadm_id] = *it->second;
            }
            return predictions;
        }
        case BaselineKind::fixed_word:
        case BaselineKind::pipeline: {
            if (!inputs.artifacts || !inputs.config)
                raise(ErrorKind::config,
                      "generation-backed baselines need pipeline artifacts and a config");
            generation::PipelineStrategy strategy;
            strategy.word_source = kind == BaselineKind::fixed_word
                                       ? retrieval::WordCountSource::fixed
                                       : retrieval::WordCountSource::retrieved;
            strategy.fixed_override = inputs.fixed_words;
            auto outputs = generation::run_corpus(corpus, letters, *inputs.artifacts, strategy,
                                                  *inputs.config, inputs.concurrency);
            return generation::predictions_for_task(outputs, task);
        }
    }
    raise(ErrorKind::contract, "unhandled baseline kind");
}

namespace {

const std::vector<std::string>& table_columns() {
    static const std::vector<std::string> columns{"bleu", "rouge1", "rouge2",
                                                  "rougel", "bertscore", "meteor",
                                                  "align", "medcon"};
    return columns;
}

std::string fixed_cell(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", value);
    return buf;
}

std::string pad_left(const std::string& text, std::size_t width) {
    return text.size() >= width ? text : std::string(width - text.size(), ' ') + text;
}

std::string pad_right(const std::string& text, std::size_t width) {
    return text.size() >= width ? text : text + std::string(width - text.size(), ' ');
}

}  // namespace

std::string format_metric_table(const std::vector<std::pair<std::string, MetricReport>>& rows) {
    std::size_t label_width = std::string("system").size();
    for (const auto& [label, report] : rows) label_width = std::max(label_width, label.size());

    std::string out = pad_right("system", label_width);
    for (const auto& column : table_columns()) out += "  " + pad_left(column, 9);
    out += "  " + pad_left("overall", 9);
    out += '\n';
    for (const auto& [label, report] : rows) {
        out += pad_right(label, label_width);
        for (const auto& column : table_columns()) {
            auto it = report.scores.find(column);
            out += "  " + pad_left(it == report.scores.end() ? "-" : fixed_cell(it->second), 9);
        }
        out += "  " + pad_left(fixed_cell(report.overall), 9);
        out += '\n';
    }
    return out;
}

std::string format_ranking_table(const RankingTable& table) {
    std::vector<std::string> metrics;
    if (!table.rows.empty())
        for (const auto& [metric, mean] : table.rows.front().per_metric_mean)
            metrics.push_back(metric);

    std::size_t name_width = std::string("section").size();
    for (const auto& row : table.rows) name_width = std::max(name_width, row.section_name.size());

    std::string out = pad_right("section", name_width);
    for (const auto& metric : metrics) out += "  " + pad_left(metric, 9);
    out += "  " + pad_left("avg_rank", 9) + "  " + pad_left("rank", 5) + '\n';
    for (const auto& row : table.rows) {
        out += pad_right(row.section_name, name_width);
        for (const auto& metric : metrics)
            out += "  " + pad_left(fixed_cell(row.per_metric_mean.at(metric)), 9);
        char avg[32];
        std::snprintf(avg, sizeof(avg), "%.2f", row.avg_rank);
        out += "  " + pad_left(avg, 9) + "  " + pad_left(std::to_string(row.final_rank), 5) + '\n';
    }
    return out;
}

std::string report_to_json(const MetricReport& report) {
    json j{{"scores", report.scores},
           {"overall", report.overall},
           {"missing", report.missing},
           {"aggregation", report.aggregation}};
    return j.dump(2);
}

std::string ranking_to_json(const RankingTable& table) {
    json rows = json::array();
    for (const auto& row : table.rows)
        rows.push_back(json{{"section_name", row.section_name},
                            {"per_metric_mean", row.per_metric_mean},
                            {"per_metric_rank", row.per_metric_rank},
                            {"avg_rank", row.avg_rank},
                            {"final_rank", row.final_rank}});
    json j{{"task", std::string(task_name(table.task))},
           {"records_used", table.records_used},
           {"rows", std::move(rows)}};
    return j.dump(2);
}

}  // namespace ward::evaluation
