#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ward/corpus.hpp"
#include "ward/promptkit.hpp"
#include "ward/retrieval.hpp"
#include "ward/segmenter.hpp"
#include "ward/task.hpp"
#include "ward/wordcount.hpp"

namespace ward::generation {

struct GenerationConfig {
    std::string base_url;
    std::string model_id = "llama3:8b-instruct-q8_0";
    double temperature = 0.0;
    std::optional<std::int64_t> seed = 0;  // explicit by default so runs repeat
    double timeout_s = 120.0;
    int max_retries = 2;
    double backoff_s = 0.25;
    bool repair = true;  // set false to validate without touching the text
};

void validate_config(const GenerationConfig& config);

struct RuleCheck {
    std::string rule_id;
    bool passed = true;
    std::string detail;
};

struct ValidationReport {
    std::vector<RuleCheck> checks;
    std::vector<std::string> repair_actions;
};

// Fixed registry: bhc.lead_in, bhc.hash_headers, bhc.dash_bullets,
// bhc.no_optional, di.greeting, di.no_bracket_placeholders,
// common.no_template_tokens. Checks report the state of the returned text;
// failed checks are flags, never fatal.
std::pair<std::string, ValidationReport> validate_and_repair(const std::string& text, Task task,
                                                             bool apply_repairs = true);

struct GenerationResult {
    Task task = Task::bhc;
    std::string text;
    double latency_s = 0.0;
    std::size_t prompt_chars = 0;
    int attempts = 1;
    bool repaired = false;
    ValidationReport validation;
};

// One non-streaming completion; the reply text goes through
// validate_and_repair (config.repair controls whether repairs apply).
GenerationResult generate_section(const GenerationConfig& config,
                                  const promptkit::PromptBundle& prompt);

struct PipelineStrategy {
    retrieval::WordCountSource word_source = retrieval::WordCountSource::retrieved;
    bool exclude_self = true;
    std::optional<std::string> fixed_override;
};

// Shared read-only inputs; only the slices a strategy needs must be set.
struct PipelineArtifacts {
    const promptkit::TemplateSet* templates = nullptr;
    const retrieval::RetrievalIndex* bhc_index = nullptr;
    const retrieval::RetrievalIndex* di_index = nullptr;
    retrieval::EmbeddingProvider* provider = nullptr;
    const wordcount::ForestModel* bhc_model = nullptr;
    const wordcount::ForestModel* di_model = nullptr;
    const wordcount::LogNormalFit* bhc_fit = nullptr;
    const wordcount::LogNormalFit* di_fit = nullptr;
};

struct StageOutcome {
    GenerationResult result;
    retrieval::WordCountTarget word_target;
    bool word_target_fallback = false;  // retrieval failed, fixed target used
    std::string context;
};

struct PipelineResult {
    StageOutcome bhc;
    StageOutcome di;
};

// Stage order is course first, then instructions seeded with the repaired
// course text. A course-stage error aborts the record.
PipelineResult run_pipeline(const corpus::DischargeRecord& record,
                            const segmenter::SectionedLetter& letter,
                            const PipelineArtifacts& artifacts, const PipelineStrategy& strategy,
                            const GenerationConfig& config);

struct RecordOutput {
    std::string hadm_id;
    PipelineResult pipeline;
};

// Runs records with up to `concurrency` pipelines in flight; each record is
// strictly sequential internally. Outputs align with corpus record order.
std::vector<RecordOutput> run_corpus(const corpus::Corpus& corpus,
                                     const std::vector<segmenter::SectionedLetter>& letters,
                                     const PipelineArtifacts& artifacts,
                                     const PipelineStrategy& strategy,
                                     const GenerationConfig& config, std::size_t concurrency = 2);

// One line per record per task: {hadm_id, task, text, latency_s, repaired,
// validation}, sorted by (hadm_id, task).
void write_outputs_jsonl(const std::vector<RecordOutput>& outputs, const std::string& path);

// Challenge-style table, sorted by hadm_id; no timing fields, so reruns of a
// deterministic server produce identical bytes.
void write_predictions_csv(const std::vector<RecordOutput>& outputs, const std::string& path);

// {hadm_id, task, context} per stage, for prompt-context audits.
void write_contexts_jsonl(const std::vector<RecordOutput>& outputs, const std::string& path);

std::map<std::string, std::string> predictions_for_task(const std::vector<RecordOutput>& outputs,
                                                        Task task);

}  // namespace ward::generation
