#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ward/corpus.hpp"
#include "ward/generation.hpp"
#include "ward/retrieval.hpp"
#include "ward/segmenter.hpp"
#include "ward/task.hpp"

namespace ward::evaluation {

// Shared tokenizer: lowercase, words are alnum runs (bytes >= 0x80 count as
// word bytes so UTF-8 stays intact), punctuation splits off as single-char
// tokens.
std::vector<std::string> tokenize(std::string_view text);

enum class Smoothing { none, epsilon };

// Sentence BLEU with clipped 1..4-gram precisions, uniform weights and the
// exp(1 - r/c) brevity penalty. Orders the hypothesis is too short to form
// are left out of the geometric mean.
double bleu4(const std::string& hypothesis, const std::string& reference,
             Smoothing smoothing = Smoothing::none);

enum class RougeVariant { rouge1, rouge2, rougeL };

// Clipped n-gram F-score for rouge1/rouge2, LCS F-score for rougeL. beta
// weighs recall (1 = balanced F1).
double rouge(const std::string& hypothesis, const std::string& reference, RougeVariant variant,
             double beta = 1.0);

// Exact-match unigram METEOR: P = m/|hyp|, R = m/|ref|, Fmean = 10PR/(R+9P),
// chunk penalty 0.5 * (chunks/m)^3.
double meteor(const std::string& hypothesis, const std::string& reference);

struct MetricReport {
    std::map<std::string, double> scores;
    double overall = 0.0;
    std::vector<std::string> missing;
    std::string aggregation = "record";
};

// Neural scorers served over HTTP; name must be one of bertscore, align,
// medcon.
struct ExternalScorer {
    std::string name;
    std::string url;
    double timeout_s = 30.0;
    int max_retries = 1;
    double backoff_s = 0.25;
};

const std::vector<std::string>& external_metric_names();

// Native metrics plus whatever external scorers answer; a scorer that fails
// at call time lands in missing with a warning instead of aborting.
MetricReport score_record(const std::string& hypothesis, const std::string& reference,
                          const std::vector<ExternalScorer>& scorers = {},
                          std::vector<std::string>* warnings = nullptr);

// Per-metric mean over reports; a metric missing from any report moves to the
// aggregate's missing list.
MetricReport aggregate_reports(const std::vector<MetricReport>& reports);

// Scores the intersection of prediction/reference keys in sorted order.
MetricReport score_corpus(const std::map<std::string, std::string>& predictions,
                          const std::map<std::string, std::string>& references,
                          const std::vector<ExternalScorer>& scorers = {},
                          std::vector<std::string>* warnings = nullptr);
MetricReport score_corpus_serial(const std::map<std::string, std::string>& predictions,
                                 const std::map<std::string, std::string>& references,
                                 const std::vector<ExternalScorer>& scorers = {},
                                 std::vector<std::string>* warnings = nullptr);

struct RankingRow {
    std::string section_name;
    std::map<std::string, double> per_metric_mean;
    std::map<std::string, double> per_metric_rank;
    double avg_rank = 0.0;
    std::size_t final_rank = 0;
};

struct RankingTable {
    Task task = Task::bhc;
    std::size_t records_used = 0;
    std::vector<RankingRow> rows;
};

const std::vector<std::string>& native_metric_names();

// Ranks every non-target canonical section by how well its body predicts the
// gold target across the corpus. Missing sections score 0 so supports stay
// equal; ties share a rank and the final order breaks them by name.
RankingTable rank_sections(const corpus::Corpus& corpus,
                           const std::vector<segmenter::SectionedLetter>& letters, Task task,
                           const std::vector<std::string>& metrics = {});
RankingTable rank_sections_serial(const corpus::Corpus& corpus,
                                  const std::vector<segmenter::SectionedLetter>& letters, Task task,
                                  const std::vector<std::string>& metrics = {});

enum class BaselineKind { random_shuffle, retrieved_target, fixed_word, pipeline };

std::string_view baseline_kind_name(BaselineKind kind);
BaselineKind parse_baseline_kind(std::string_view name);

struct BaselineInputs {
    // retrieved_target
    const retrieval::RetrievalIndex* index = nullptr;
    retrieval::EmbeddingProvider* provider = nullptr;
    // fixed_word and pipeline
    const generation::PipelineArtifacts* artifacts = nullptr;
    const generation::GenerationConfig* config = nullptr;
    std::optional<std::string> fixed_words;
    std::size_t concurrency = 2;
};

// Predictions for every record carrying the gold target (generation-backed
// kinds cover the whole corpus).
std::map<std::string, std::string> run_baseline(BaselineKind kind, const corpus::Corpus& corpus,
                                                const std::vector<segmenter::SectionedLetter>& letters,
                                                Task task, std::uint64_t seed,
                                                const BaselineInputs& inputs = {});

// Aligned text table in the challenge column order; absent metrics print "-".
std::string format_metric_table(const std::vector<std::pair<std::string, MetricReport>>& rows);
std::string format_ranking_table(const RankingTable& table);

std::string report_to_json(const MetricReport& report);
std::string ranking_to_json(const RankingTable& table);

}  // namespace ward::evaluation
