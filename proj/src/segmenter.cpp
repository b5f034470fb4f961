#include "ward/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>

#include "json.hpp"
#include "ward/embedded_data.hpp"
#include "ward/error.hpp"
#include "ward/text.hpp"

namespace ward::segmenter {

namespace {

bool is_literal_pattern(std::string_view p) {
    return p.find_first_of(".^$|()[]{}*+?\\") == std::string_view::npos;
}

}  // namespace

std::vector<SectionSpec> parse_section_specs(std::string_view json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorKind::schema, std::string("section spec is not valid JSON: ") + e.what());
    }
    if (!doc.is_array()) raise(ErrorKind::schema, "section spec must be a JSON array");

    std::vector<SectionSpec> specs;
    std::set<std::string> seen;
    for (const auto& item : doc) {
        if (!item.is_object()) raise(ErrorKind::schema, "section spec entry must be an object");
        SectionSpec spec;
        if (!item.contains("canonical_name") || !item["canonical_name"].is_string())
            raise(ErrorKind::schema, "section spec entry missing canonical_name");
        spec.canonical_name = item["canonical_name"].get<std::string>();
        if (spec.canonical_name.empty())
            raise(ErrorKind::schema, "canonical_name must be non-empty");
        if (!seen.insert(spec.canonical_name).second)
            raise(ErrorKind::schema, "duplicate canonical_name: " + spec.canonical_name);
        if (!item.contains("header_patterns") || !item["header_patterns"].is_array() ||
            item["header_patterns"].empty())
            raise(ErrorKind::schema, "header_patterns must be a non-empty array: " + spec.canonical_name);
        for (const auto& pat : item["header_patterns"]) {
            if (!pat.is_string())
                raise(ErrorKind::schema, "header pattern must be a string: " + spec.canonical_name);
            std::string p = pat.get<std::string>();
            if (p.empty() || p.back() != ':')
                raise(ErrorKind::schema,
                      "header pattern must end with a colon: '" + p + "' (" + spec.canonical_name + ")");
            if (!is_literal_pattern(p)) {
                try {
                    std::regex probe(p, std::regex::ECMAScript | std::regex::icase);
                } catch (const std::regex_error& e) {
                    raise(ErrorKind::config,
                          "header pattern does not compile: '" + p + "': " + e.what());
                }
            }
            spec.header_patterns.push_back(std::move(p));
        }
        if (item.contains("rank_bhc")) {
            if (!item["rank_bhc"].is_number_integer())
                raise(ErrorKind::schema, "rank_bhc must be an integer: " + spec.canonical_name);
            spec.rank_bhc = item["rank_bhc"].get<int>();
        }
        if (item.contains("rank_di")) {
            if (!item["rank_di"].is_number_integer())
                raise(ErrorKind::schema, "rank_di must be an integer: " + spec.canonical_name);
            spec.rank_di = item["rank_di"].get<int>();
        }
        specs.push_back(std::move(spec));
    }
    if (specs.empty()) raise(ErrorKind::schema, "section spec array is empty");
    return specs;
}

const std::vector<SectionSpec>& default_section_specs() {
    static const std::vector<SectionSpec> specs = parse_section_specs(embedded::sections_json());
    return specs;
}

const SectionSpec* find_spec(const std::vector<SectionSpec>& specs, std::string_view canonical_name) {
    for (const auto& s : specs)
        if (s.canonical_name == canonical_name) return &s;
    return nullptr;
}

const std::string* SectionedLetter::find(std::string_view canonical_name) const {
    for (const auto& [name, body] : sections)
        if (name == canonical_name) return &body;
    return nullptr;
}

bool SectionedLetter::has(std::string_view canonical_name) const {
    return find(canonical_name) != nullptr;
}

std::string SectionedLetter::reconstruct() const {
    std::string out = unmatched_prefix;
    for (const auto& seg : segments) {
        out += seg.header;
        out += seg.body;
    }
    return out;
}

struct SectionMatcher::Pattern {
    std::size_t spec_index = 0;
    std::string canonical_name;
    std::string literal;              // lowercase; empty when regex is used
    std::optional<std::regex> regex;
};

SectionMatcher::SectionMatcher(const std::vector<SectionSpec>& specs) {
    if (specs.empty()) raise(ErrorKind::validation, "section spec list is empty");
    for (std::size_t i = 0; i < specs.size(); ++i) {
        for (const auto& p : specs[i].header_patterns) {
            Pattern pat;
            pat.spec_index = i;
            pat.canonical_name = specs[i].canonical_name;
            if (is_literal_pattern(p)) {
                pat.literal = to_lower_ascii(p);
            } else {
                try {
                    pat.regex.emplace(p, std::regex::ECMAScript | std::regex::icase | std::regex::optimize);
                } catch (const std::regex_error& e) {
                    raise(ErrorKind::config, "header pattern does not compile: '" + p + "': " + e.what());
                }
            }
            patterns_.push_back(std::move(pat));
        }
    }
}

SectionMatcher::~SectionMatcher() = default;
SectionMatcher::SectionMatcher(SectionMatcher&&) noexcept = default;
SectionMatcher& SectionMatcher::operator=(SectionMatcher&&) noexcept = default;

SectionedLetter SectionMatcher::segment(std::string_view text) const {
    struct Hit {
        std::size_t pos;
        std::size_t len;
        std::size_t pattern_index;
    };
    std::vector<Hit> hits;

    std::size_t line_start = 0;
    while (line_start <= text.size()) {
        std::size_t line_end = text.find('\n', line_start);
        if (line_end == std::string_view::npos) line_end = text.size();

        std::size_t best_len = 0;
        std::size_t best_pat = 0;
        bool found = false;
        for (std::size_t pi = 0; pi < patterns_.size(); ++pi) {
            const Pattern& pat = patterns_[pi];
            std::size_t len = 0;
            if (!pat.literal.empty()) {
                if (pat.literal.size() <= line_end - line_start) {
                    bool ok = true;
                    for (std::size_t k = 0; k < pat.literal.size(); ++k) {
                        char c = text[line_start + k];
                        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
                        if (c != pat.literal[k]) { ok = false; break; }
                    }
                    if (ok) len = pat.literal.size();
                }
            } else {
                std::cmatch m;
                const char* begin = text.data() + line_start;
                const char* end = text.data() + line_end;
                if (std::regex_search(begin, end, m, *pat.regex, std::regex_constants::match_continuous))
                    len = static_cast<std::size_t>(m[0].length());
            }
            if (len > best_len) {
                best_len = len;
                best_pat = pi;
                found = true;
            }
        }
        if (found) hits.push_back({line_start, best_len, best_pat});

        if (line_end == text.size()) break;
        line_start = line_end + 1;
    }

    SectionedLetter out;
    if (hits.empty()) {
        out.unmatched_prefix = std::string(text);
        return out;
    }
    out.unmatched_prefix = std::string(text.substr(0, hits[0].pos));
    for (std::size_t i = 0; i < hits.size(); ++i) {
        const Hit& h = hits[i];
        std::size_t body_begin = h.pos + h.len;
        std::size_t body_end = (i + 1 < hits.size()) ? hits[i + 1].pos : text.size();
        RawSegment seg;
        seg.canonical_name = patterns_[h.pattern_index].canonical_name;
        seg.header = std::string(text.substr(h.pos, h.len));
        seg.body = std::string(text.substr(body_begin, body_end - body_begin));
        out.segments.push_back(std::move(seg));
    }

    for (const auto& seg : out.segments) {
        std::string trimmed = trim(seg.body);
        bool merged = false;
        for (auto& [name, body] : out.sections) {
            if (name == seg.canonical_name) {
                if (!trimmed.empty()) {
                    if (body.empty()) body = std::move(trimmed);
                    else { body += '\n'; body += trimmed; }
                }
                merged = true;
                break;
            }
        }
        if (!merged) out.sections.emplace_back(seg.canonical_name, std::move(trimmed));
    }
    return out;
}

SectionedLetter segment(std::string_view text, const std::vector<SectionSpec>& specs) {
    SectionMatcher matcher(specs);
    return matcher.segment(text);
}

TargetSections extract_targets(const SectionedLetter& sectioned) {
    TargetSections out;
    if (const std::string* bhc = sectioned.find("brief_hospital_course"); bhc && !bhc->empty())
        out.bhc = *bhc;
    if (const std::string* di = sectioned.find("discharge_instructions"); di && !di->empty())
        out.di = *di;
    return out;
}

std::size_t word_count(std::string_view text) {
    std::size_t count = 0;
    bool in_token = false;
    for (char c : text) {
        bool ws = (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v');
        if (!ws && !in_token) {
            ++count;
            in_token = true;
        } else if (ws) {
            in_token = false;
        }
    }
    return count;
}

std::string truncate_to_words(std::string_view text, std::size_t n) {
    if (n == 0) return "";
    std::size_t count = 0;
    bool in_token = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        bool ws = (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v');
        if (!ws && !in_token) {
            ++count;
            in_token = true;
        } else if (ws && in_token) {
            in_token = false;
            if (count == n) return std::string(text.substr(0, i));
        }
    }
    return std::string(text);
}

std::size_t nearest_rank_bound(std::vector<std::size_t> counts, double percentile) {
    if (counts.empty()) raise(ErrorKind::validation, "nearest_rank_bound requires at least one count");
    if (!(percentile > 0.0 && percentile <= 100.0))
        raise(ErrorKind::validation, "percentile must be in (0, 100]");
    std::sort(counts.begin(), counts.end());
    auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * static_cast<double>(counts.size())));
    if (rank == 0) rank = 1;
    if (rank > counts.size()) rank = counts.size();
    return counts[rank - 1];
}

CorpusSections truncate_corpus_sections(const CorpusSections& corpus_sections, double percentile) {
    if (!(percentile > 0.0 && percentile <= 100.0))
        raise(ErrorKind::validation, "percentile must be in (0, 100]");
    CorpusSections out;
    for (const auto& [name, entries] : corpus_sections) {
        if (entries.empty()) {
            out[name] = entries;
            continue;
        }
        std::vector<std::size_t> counts;
        counts.reserve(entries.size());
        for (const auto& [id, body] : entries) counts.push_back(word_count(body));
        std::size_t bound = nearest_rank_bound(counts, percentile);
        auto& dst = out[name];
        dst.reserve(entries.size());
        for (std::size_t i = 0; i < entries.size(); ++i) {
            const auto& [id, body] = entries[i];
            if (counts[i] > bound) dst.emplace_back(id, truncate_to_words(body, bound));
            else dst.emplace_back(id, body);
        }
    }
    return out;
}

}  // namespace ward::segmenter
