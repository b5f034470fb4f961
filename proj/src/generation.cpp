#include "ward/generation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <thread>

#include <nlohmann/json.hpp>

#include "ward/csv.hpp"
#include "ward/error.hpp"
#include "ward/httpx.hpp"
#include "ward/text.hpp"

namespace ward::generation {
namespace {

using nlohmann::json;

constexpr std::string_view kLeadIn = "Brief hospital course:";

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) {
            lines.push_back(text.substr(pos));
            break;
        }
        lines.push_back(text.substr(pos, eol - pos));
        pos = eol + 1;
    }
    return lines;
}

std::string join_lines(const std::vector<std::string>& lines) { return join(lines, "\n"); }

// A starred line whose content ends with ':' reads as a section header.
bool is_starred_header(const std::string& line) {
    std::size_t i = 0;
    while (i < line.size() && line[i] == '*') ++i;
    if (i == 0) return false;
    std::string_view rest = trim_view(std::string_view(line).substr(i));
    return !rest.empty() && rest.back() == ':';
}

bool is_foreign_bullet(const std::string& line) {
    return (line.size() >= 2 && (line[0] == '*' || line[0] == '+') && line[1] == ' ') &&
           !is_starred_header(line);
}

struct RuleOutcome {
    bool passed = true;
    std::string detail;
};

}  // namespace

void validate_config(const GenerationConfig& config) {
    httpx::validate_base_url(config.base_url);
    if (!(config.timeout_s > 0.0))
        raise(ErrorKind::config, "generation timeout_s must be positive");
    if (config.temperature < 0.0)
        raise(ErrorKind::config, "generation temperature must be non-negative");
    if (config.max_retries < 0) raise(ErrorKind::config, "max_retries cannot be negative");
    if (config.model_id.empty()) raise(ErrorKind::config, "model_id cannot be empty");
}

std::pair<std::string, ValidationReport> validate_and_repair(const std::string& text, Task task,
                                                             bool apply_repairs) {
    ValidationReport report;
    std::string out = text;
    auto note = [&](const std::string& action) { report.repair_actions.push_back(action); };
    auto check = [&](const std::string& rule_id, bool passed, std::string detail = "") {
        report.checks.push_back({rule_id, passed, std::move(detail)});
    };

    if (task == Task::bhc) {
        bool has_lead = starts_with_ci(trim_view(out), kLeadIn);
        if (!has_lead && apply_repairs) {
            out = std::string(kLeadIn) + "\n" + out;
            note("prepended the course lead-in line");
            has_lead = true;
        }
        check("bhc.lead_in", has_lead, has_lead ? "" : "output does not begin with the lead-in");

        auto lines = split_lines(out);
        std::size_t headers = 0, bullets = 0;
        for (auto& line : lines) {
            if (is_starred_header(line)) {
                if (apply_repairs) {
                    std::size_t i = 0;
                    while (i < line.size() && line[i] == '*') ++i;
                    line = "# " + std::string(trim_view(std::string_view(line).substr(i)));
                }
                ++headers;
            } else if (is_foreign_bullet(line)) {
                if (apply_repairs) line = "- " + line.substr(2);
                ++bullets;
            }
        }
        if (apply_repairs && (headers || bullets)) {
            out = join_lines(lines);
            if (headers) note("converted " + std::to_string(headers) + " starred header(s) to #");
            if (bullets) note("converted " + std::to_string(bullets) + " foreign bullet(s) to -");
        }
        check("bhc.hash_headers", !(headers && !apply_repairs),
              headers ? std::to_string(headers) + " starred header(s)" : "");
        check("bhc.dash_bullets", !(bullets && !apply_repairs),
              bullets ? std::to_string(bullets) + " foreign bullet(s)" : "");

        std::size_t tags = 0;
        if (apply_repairs) {
            for (const char* tag : {" (Optional)", " (optional)", "(Optional)", "(optional)"}) {
                std::size_t at;
                while ((at = out.find(tag)) != std::string::npos) {
                    out.erase(at, std::string_view(tag).size());
                    ++tags;
                }
            }
            if (tags) note("removed " + std::to_string(tags) + " optional tag(s)");
        }
        bool optional_free = to_lower_ascii(out).find("optional") == std::string::npos;
        check("bhc.no_optional", optional_free,
              optional_free ? "" : "the word 'optional' remains in the text");
    } else {
        std::string_view first;
        for (const auto& line : split_lines(out)) {
            first = trim_view(line);
            if (!first.empty()) break;
        }
        bool greeted = first.rfind("Dear", 0) == 0 && first.find(',') != std::string_view::npos;
        check("di.greeting", greeted,
              greeted ? "" : "output does not open with a 'Dear ...,' greeting");

        auto bracket = out.find('[');
        check("di.no_bracket_placeholders", bracket == std::string::npos,
              bracket == std::string::npos
                  ? ""
                  : "placeholder bracket at offset " + std::to_string(bracket));
    }

    std::string leftover;
    for (const char* token : {"{words}", "{structure}", "{context}"})
        if (out.find(token) != std::string::npos) leftover = token;
    check("common.no_template_tokens", leftover.empty(),
          leftover.empty() ? "" : "contains " + leftover);

    return {out, report};
}

GenerationResult generate_section(const GenerationConfig& config,
                                  const promptkit::PromptBundle& prompt) {
    validate_config(config);
    httpx::HttpConfig http;
    http.base_url = config.base_url;
    http.timeout_s = config.timeout_s;
    http.max_retries = config.max_retries;
    http.backoff_s = config.backoff_s;

    json options{{"temperature", config.temperature}};
    if (config.seed) options["seed"] = *config.seed;
    json payload{{"model", config.model_id},
                 {"prompt", prompt.rendered},
                 {"stream", false},
                 {"options", std::move(options)}};

    auto start = std::chrono::steady_clock::now();
    auto res = httpx::post_json(http, "/api/generate", payload);
    double latency =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (!res.body.contains("response") || !res.body["response"].is_string())
        raise(ErrorKind::contract, "generation reply is missing the 'response' string");
    std::string text = res.body["response"].get<std::string>();
    if (trim_view(text).empty())
        raise(ErrorKind::generation, "model returned an empty completion");

    auto [repaired_text, report] = validate_and_repair(text, prompt.task, config.repair);
    GenerationResult result;
    result.task = prompt.task;
    result.text = std::move(repaired_text);
    result.latency_s = latency;
    result.prompt_chars = prompt.rendered.size();
    result.attempts = res.attempts;
    result.repaired = !report.repair_actions.empty();
    result.validation = std::move(report);
    return result;
}

namespace {

retrieval::WordCountTarget resolve_word_target(Task task, const corpus::DischargeRecord& record,
                                               const segmenter::SectionedLetter& letter,
                                               const PipelineArtifacts& artifacts,
                                               const PipelineStrategy& strategy, bool& fallback) {
    using WS = retrieval::WordCountSource;
    fallback = false;
    wordcount::PredictInputs inputs;
    inputs.task = task;
    inputs.fixed_override = strategy.fixed_override;
    switch (strategy.word_source) {
        case WS::fixed:
            return wordcount::predict_word_count(WS::fixed, inputs);
        case WS::retrieved: {
            const auto* index = task == Task::bhc ? artifacts.bhc_index : artifacts.di_index;
            if (!index || !artifacts.provider)
                raise(ErrorKind::config, "retrieved word counts need the task index and an "
                                         "embedding provider");
            auto spec = retrieval::TaskContextSpec::defaults(task);
            inputs.index = index;
            inputs.letter = &letter;
            inputs.admission = &record.admission;
            inputs.hadm_id = record.hadm_id;
            inputs.context_spec = &spec;
            inputs.provider = artifacts.provider;
            inputs.exclude_self = strategy.exclude_self;
            try {
                return wordcount::predict_word_count(WS::retrieved, inputs);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::validation && e.kind() != ErrorKind::not_found) throw;
                fallback = true;
                wordcount::PredictInputs fixed_inputs;
                fixed_inputs.task = task;
                return wordcount::predict_word_count(WS::fixed, fixed_inputs);
            }
        }
        case WS::classifier: {
            const auto* model = task == Task::bhc ? artifacts.bhc_model : artifacts.di_model;
            if (!model) raise(ErrorKind::config, "classifier word counts need a trained model");
            auto features = wordcount::extract_features(record, letter);
            inputs.model = model;
            inputs.features = &features;
            return wordcount::predict_word_count(WS::classifier, inputs);
        }
        case WS::distribution: {
            const auto* fit = task == Task::bhc ? artifacts.bhc_fit : artifacts.di_fit;
            if (!fit) raise(ErrorKind::config, "distribution word counts need a fitted model");
            inputs.fit = fit;
            return wordcount::predict_word_count(WS::distribution, inputs);
        }
    }
    raise(ErrorKind::contract, "unhandled word-count strategy");
}

StageOutcome run_stage(Task task, const corpus::DischargeRecord& record,
                       const segmenter::SectionedLetter& letter,
                       const std::optional<std::string>& generated_bhc,
                       const PipelineArtifacts& artifacts, const PipelineStrategy& strategy,
                       const GenerationConfig& config) {
    StageOutcome outcome;
    outcome.context =
        promptkit::context_for_generation(task, letter, record.admission, generated_bhc);
    outcome.word_target = resolve_word_target(task, record, letter, artifacts, strategy,
                                              outcome.word_target_fallback);
    auto bundle =
        promptkit::render_prompt(task, outcome.context, outcome.word_target, *artifacts.templates);
    outcome.result = generate_section(config, bundle);
    return outcome;
}

}  // namespace

PipelineResult run_pipeline(const corpus::DischargeRecord& record,
                            const segmenter::SectionedLetter& letter,
                            const PipelineArtifacts& artifacts, const PipelineStrategy& strategy,
                            const GenerationConfig& config) {
    if (!artifacts.templates)
        raise(ErrorKind::config, "pipeline needs a loaded template set");
    PipelineResult result;
    try {
        result.bhc =
            run_stage(Task::bhc, record, letter, std::nullopt, artifacts, strategy, config);
    } catch (const Error& e) {
        raise(e.kind(), "course stage failed for hadm_id " + record.hadm_id + ": " + e.what());
    }
    try {
        result.di = run_stage(Task::di, record, letter, result.bhc.result.text, artifacts,
                              strategy, config);
    } catch (const Error& e) {
        raise(e.kind(),
              "instructions stage failed for hadm_id " + record.hadm_id + ": " + e.what());
    }
    return result;
}

std::vector<RecordOutput> run_corpus(const corpus::Corpus& corpus,
                                     const std::vector<segmenter::SectionedLetter>& letters,
                                     const PipelineArtifacts& artifacts,
                                     const PipelineStrategy& strategy,
                                     const GenerationConfig& config, std::size_t concurrency) {
    if (corpus.records.size() != letters.size())
        raise(ErrorKind::contract, "corpus/letter size mismatch");
    std::vector<RecordOutput> outputs(corpus.records.size());
    if (outputs.empty()) return outputs;

    std::size_t workers = std::max<std::size_t>(1, std::min(concurrency, corpus.records.size()));
    std::atomic<std::size_t> cursor{0};
    std::vector<std::exception_ptr> failures(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            while (true) {
                std::size_t i = cursor.fetch_add(1);
                if (i >= corpus.records.size()) return;
                try {
                    outputs[i].hadm_id = corpus.records[i].hadm_id;
                    outputs[i].pipeline = run_pipeline(corpus.records[i], letters[i], artifacts,
                                                       strategy, config);
                } catch (...) {
                    failures[w] = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& failure : failures)
        if (failure) std::rethrow_exception(failure);
    return outputs;
}

namespace {

json validation_to_json(const ValidationReport& report) {
    json checks = json::array();
    for (const auto& check : report.checks)
        checks.push_back(
            json{{"rule_id", check.rule_id}, {"passed", check.passed}, {"detail", check.detail}});
    return json{{"checks", std::move(checks)}, {"repair_actions", report.repair_actions}};
}

std::vector<const RecordOutput*> sorted_outputs(const std::vector<RecordOutput>& outputs) {
    std::vector<const RecordOutput*> sorted;
    sorted.reserve(outputs.size());
    for (const auto& out : outputs) sorted.push_back(&out);
    std::sort(sorted.begin(), sorted.end(),
              [](const RecordOutput* a, const RecordOutput* b) { return a->hadm_id < b->hadm_id; });
    return sorted;
}

}  // namespace

void write_outputs_jsonl(const std::vector<RecordOutput>& outputs, const std::string& path) {
    std::string body;
    for (const RecordOutput* out : sorted_outputs(outputs)) {
        for (Task task : {Task::bhc, Task::di}) {
            const StageOutcome& stage = task == Task::bhc ? out->pipeline.bhc : out->pipeline.di;
            json j{{"hadm_id", out->hadm_id},
                   {"task", std::string(task_section_name(task))},
                   {"text", stage.result.text},
                   {"latency_s", stage.result.latency_s},
                   {"repaired", stage.result.repaired},
                   {"word_target", stage.word_target.words_text},
                   {"word_target_fallback", stage.word_target_fallback},
                   {"validation", validation_to_json(stage.result.validation)}};
            body += j.dump();
            body += '\n';
        }
    }
    atomic_write_file(path, body);
}

void write_predictions_csv(const std::vector<RecordOutput>& outputs, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    for (const RecordOutput* out : sorted_outputs(outputs))
        rows.push_back(
            {out->hadm_id, out->pipeline.bhc.result.text, out->pipeline.di.result.text});
    atomic_write_file(
        path, format_csv({"hadm_id", "brief_hospital_course", "discharge_instructions"}, rows));
}

void write_contexts_jsonl(const std::vector<RecordOutput>& outputs, const std::string& path) {
    std::string body;
    for (const RecordOutput* out : sorted_outputs(outputs)) {
        for (Task task : {Task::bhc, Task::di}) {
            const StageOutcome& stage = task == Task::bhc ? out->pipeline.bhc : out->pipeline.di;
            json j{{"hadm_id", out->hadm_id},
                   {"task", std::string(task_section_name(task))},
                   {"context", stage.context}};
            body += j.dump();
            body += '\n';
        }
    }
    atomic_write_file(path, body);
}

std::map<std::string, std::string> predictions_for_task(const std::vector<RecordOutput>& outputs,
                                                        Task task) {
    std::map<std::string, std::string> predictions;
    for (const auto& out : outputs)
        predictions[out.hadm_id] =
            task == Task::bhc ? out.pipeline.bhc.result.text : out.pipeline.di.result.text;
    return predictions;
}

}  // namespace ward::generation
