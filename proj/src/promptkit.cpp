#include "ward/promptkit.hpp"

#include <array>
#include <cctype>

#include <nlohmann/json.hpp>

#include "ward/csv.hpp"
#include "ward/embedded_data.hpp"
#include "ward/error.hpp"
#include "ward/text.hpp"

namespace ward::promptkit {
namespace {

constexpr std::array<std::string_view, 3> kPlaceholders = {"{words}", "{structure}", "{context}"};

const std::vector<std::string>& required_parts(Task task) {
    static const std::vector<std::string> bhc = {"Introduction", "Active Issues", "Chronic Issues",
                                                 "Transitional Issues", "Additional Notes"};
    static const std::vector<std::string> di = {"Greeting", "AdmissionReason", "InHospitalActivities",
                                                "DischargeAdvice", "Closing"};
    return task == Task::bhc ? bhc : di;
}

// A numbered instruction line: digits, a dot, a space.
std::optional<std::pair<std::size_t, std::string>> parse_instruction_line(std::string_view line) {
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == 0 || i + 1 >= line.size() || line[i] != '.' || line[i + 1] != ' ') return std::nullopt;
    std::size_t number = 0;
    for (std::size_t k = 0; k < i; ++k) number = number * 10 + static_cast<std::size_t>(line[k] - '0');
    return std::make_pair(number, std::string(line.substr(i + 2)));
}

std::string load_slot(const std::string& override_path, std::string_view embedded) {
    if (override_path.empty()) return std::string(embedded);
    return read_file(override_path);
}

void check_payload(std::string_view what, const std::string& payload) {
    for (auto token : kPlaceholders)
        if (payload.find(token) != std::string::npos)
            raise(ErrorKind::validation, std::string(what) + " contains the placeholder token '" +
                                             std::string(token) + "'; it cannot be substituted safely");
}

}  // namespace

std::size_t expected_instruction_count(Task task) { return task == Task::bhc ? 17 : 12; }

StructureTemplate parse_structure(Task task, std::string body) {
    auto parsed = nlohmann::json::parse(body, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object())
        raise(ErrorKind::validation,
              std::string(task_name(task)) + " structure template is not a JSON object");
    for (const auto& part : required_parts(task))
        if (body.find(part) == std::string::npos)
            raise(ErrorKind::validation, std::string(task_name(task)) +
                                             " structure template is missing the '" + part + "' part");
    StructureTemplate tmpl;
    tmpl.task = task;
    tmpl.body = std::move(body);
    return tmpl;
}

PromptTemplate parse_prompt(Task task, std::string raw) {
    for (auto token : kPlaceholders)
        if (raw.find(token) == std::string::npos)
            raise(ErrorKind::validation, std::string(task_name(task)) +
                                             " prompt template is missing the placeholder '" +
                                             std::string(token) + "'");

    PromptTemplate tmpl;
    tmpl.task = task;
    std::size_t pos = 0;
    bool in_list = false;
    while (pos <= raw.size()) {
        std::size_t eol = raw.find('\n', pos);
        std::string_view line(raw.data() + pos, (eol == std::string::npos ? raw.size() : eol) - pos);
        auto numbered = parse_instruction_line(line);
        if (numbered) {
            if (!in_list) {
                in_list = true;
                tmpl.preamble = raw.substr(0, pos);
            }
            if (numbered->first != tmpl.instructions.size() + 1)
                raise(ErrorKind::validation,
                      std::string(task_name(task)) + " prompt instructions skip from " +
                          std::to_string(tmpl.instructions.size()) + " to " +
                          std::to_string(numbered->first));
            tmpl.instructions.push_back(numbered->second);
        }
        if (eol == std::string::npos) break;
        pos = eol + 1;
    }
    if (tmpl.instructions.size() != expected_instruction_count(task))
        raise(ErrorKind::validation, std::string(task_name(task)) + " prompt template needs " +
                                         std::to_string(expected_instruction_count(task)) +
                                         " numbered instructions, found " +
                                         std::to_string(tmpl.instructions.size()));
    tmpl.raw = std::move(raw);
    return tmpl;
}

TemplateSet load_templates(const TemplatePaths& paths) {
    TemplateSet set;
    set.bhc_structure =
        parse_structure(Task::bhc, load_slot(paths.bhc_structure, embedded::bhc_structure_json()));
    set.di_structure =
        parse_structure(Task::di, load_slot(paths.di_structure, embedded::di_structure_json()));
    set.bhc_prompt = parse_prompt(Task::bhc, load_slot(paths.bhc_prompt, embedded::bhc_prompt_text()));
    set.di_prompt = parse_prompt(Task::di, load_slot(paths.di_prompt, embedded::di_prompt_text()));
    return set;
}

const std::string& serialize(const StructureTemplate& tmpl) { return tmpl.body; }
const std::string& serialize(const PromptTemplate& tmpl) { return tmpl.raw; }

PromptBundle render_prompt(Task task, const std::string& context,
                           const retrieval::WordCountTarget& word_target,
                           const TemplateSet& templates) {
    if (trim_view(context).empty())
        raise(ErrorKind::validation, "cannot render a prompt from an empty context");
    if (word_target.words_text.empty())
        raise(ErrorKind::validation, "word target text is empty");

    const PromptTemplate& prompt = task == Task::bhc ? templates.bhc_prompt : templates.di_prompt;
    const StructureTemplate& structure =
        task == Task::bhc ? templates.bhc_structure : templates.di_structure;
    check_payload("context", context);
    check_payload("word target", word_target.words_text);
    check_payload("structure body", structure.body);

    std::string rendered;
    rendered.reserve(prompt.raw.size() + structure.body.size() + context.size());
    std::size_t pos = 0;
    while (pos < prompt.raw.size()) {
        std::size_t brace = prompt.raw.find('{', pos);
        if (brace == std::string::npos) {
            rendered.append(prompt.raw, pos, std::string::npos);
            break;
        }
        rendered.append(prompt.raw, pos, brace - pos);
        bool matched = false;
        for (std::size_t i = 0; i < kPlaceholders.size(); ++i) {
            auto token = kPlaceholders[i];
            if (prompt.raw.compare(brace, token.size(), token) == 0) {
                if (i == 0) rendered += word_target.words_text;
                else if (i == 1) rendered += structure.body;
                else rendered += context;
                pos = brace + token.size();
                matched = true;
                break;
            }
        }
        if (!matched) {
            rendered.push_back('{');
            pos = brace + 1;
        }
    }

    PromptBundle bundle;
    bundle.task = task;
    bundle.rendered = std::move(rendered);
    bundle.word_target = word_target;
    bundle.context_chars = context.size();
    return bundle;
}

std::vector<std::string> default_context_sections(Task task) {
    if (task == Task::bhc)
        return {"history_of_present_illness", "imaging_and_studies", "past_medical_history",
                "patient_admissions", "chief_complaint"};
    return {"discharge_medications", "discharge_disposition", "discharge_diagnoses",
            "discharge_condition", "followup_instructions"};
}

std::string context_for_generation(Task task, const segmenter::SectionedLetter& letter,
                                   const std::optional<corpus::PatientAdmissionSummary>& admission,
                                   const std::optional<std::string>& generated_bhc,
                                   const std::vector<std::string>& sections) {
    const std::vector<std::string>& names =
        sections.empty() ? default_context_sections(task) : sections;
    std::vector<std::string> blocks;
    if (task == Task::di) {
        if (!generated_bhc || trim_view(*generated_bhc).empty())
            raise(ErrorKind::contract,
                  "discharge-instruction context needs the generated brief hospital course first");
        blocks.push_back(*generated_bhc);
    }
    for (const auto& name : names) {
        if (name == "brief_hospital_course" || name == "discharge_instructions") continue;
        auto body = corpus::section_text_or_aux(letter, admission, name);
        if (body && !body->empty()) blocks.push_back(section_title(name) + ":\n" + *body);
    }
    if (blocks.empty())
        raise(ErrorKind::validation, "generation context is empty: no listed section has content");
    return join(blocks, "\n\n");
}

}  // namespace ward::promptkit
