#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ward/corpus.hpp"
#include "ward/retrieval.hpp"
#include "ward/segmenter.hpp"
#include "ward/task.hpp"

namespace ward::promptkit {

// JSON structure text handed to the model as the target-section skeleton.
struct StructureTemplate {
    Task task = Task::bhc;
    std::string body;  // exact bytes, serialized back verbatim
};

// Full prompt text with {words}, {structure}, {context} placeholders, plus
// the numbered instruction list parsed out for validation.
struct PromptTemplate {
    Task task = Task::bhc;
    std::string raw;  // exact bytes, serialized back verbatim
    std::string preamble;
    std::vector<std::string> instructions;
};

struct TemplateSet {
    StructureTemplate bhc_structure;
    StructureTemplate di_structure;
    PromptTemplate bhc_prompt;
    PromptTemplate di_prompt;
};

// Any empty path falls back to the embedded default for that slot.
struct TemplatePaths {
    std::string bhc_structure;
    std::string di_structure;
    std::string bhc_prompt;
    std::string di_prompt;
};

std::size_t expected_instruction_count(Task task);  // 17 for BHC, 12 for DI

StructureTemplate parse_structure(Task task, std::string body);
PromptTemplate parse_prompt(Task task, std::string raw);

// Loads defaults or override files, re-running every structural check.
TemplateSet load_templates(const TemplatePaths& paths = {});

// Byte-identical to the loaded file or embedded default.
const std::string& serialize(const StructureTemplate& tmpl);
const std::string& serialize(const PromptTemplate& tmpl);

struct PromptBundle {
    Task task = Task::bhc;
    std::string rendered;
    retrieval::WordCountTarget word_target;
    std::size_t context_chars = 0;
};

// Single-pass substitution; payloads are rejected if they contain a
// placeholder token, so nothing is ever substituted twice.
PromptBundle render_prompt(Task task, const std::string& context,
                           const retrieval::WordCountTarget& word_target,
                           const TemplateSet& templates);

// Section lists feeding each task's generation context.
std::vector<std::string> default_context_sections(Task task);

// BHC: titled blocks from the record. DI: the generated BHC text first,
// then titled discharge sections. Gold target bodies never appear.
std::string context_for_generation(Task task, const segmenter::SectionedLetter& letter,
                                   const std::optional<corpus::PatientAdmissionSummary>& admission,
                                   const std::optional<std::string>& generated_bhc,
                                   const std::vector<std::string>& sections = {});

}  // namespace ward::promptkit
