#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ward::segmenter {

// One canonical section with its header synonyms and task relevance ranks.
// Patterns are matched case-insensitively at line starts and must end with a
// colon. Plain strings take a literal fast path; anything containing regex
// metacharacters is compiled as ECMAScript regex.
struct SectionSpec {
    std::string canonical_name;
    std::vector<std::string> header_patterns;
    std::optional<int> rank_bhc;
    std::optional<int> rank_di;
};

std::vector<SectionSpec> parse_section_specs(std::string_view json_text);
const std::vector<SectionSpec>& default_section_specs();
const SectionSpec* find_spec(const std::vector<SectionSpec>& specs, std::string_view canonical_name);

// Raw match bookkeeping: header is the exact matched text, body is every byte
// from the end of the header up to the next header (or end of input).
struct RawSegment {
    std::string canonical_name;
    std::string header;
    std::string body;
};

struct SectionedLetter {
    std::string unmatched_prefix;
    std::vector<RawSegment> segments;
    // First-occurrence order, trimmed bodies, duplicate headers merged with
    // a newline separator (empty duplicate bodies dropped).
    std::vector<std::pair<std::string, std::string>> sections;

    const std::string* find(std::string_view canonical_name) const;
    bool has(std::string_view canonical_name) const;
    std::string reconstruct() const;
};

class SectionMatcher {
public:
    explicit SectionMatcher(const std::vector<SectionSpec>& specs);
    SectionedLetter segment(std::string_view text) const;

private:
    struct Pattern;
    std::vector<Pattern> patterns_;

public:
    ~SectionMatcher();
    SectionMatcher(SectionMatcher&&) noexcept;
    SectionMatcher& operator=(SectionMatcher&&) noexcept;
};

SectionedLetter segment(std::string_view text, const std::vector<SectionSpec>& specs);

struct TargetSections {
    std::optional<std::string> bhc;
    std::optional<std::string> di;
};

TargetSections extract_targets(const SectionedLetter& sectioned);

std::size_t word_count(std::string_view text);

// Prefix of text through its first n whitespace-delimited tokens, original
// spacing intact. n >= word_count(text) returns text unchanged.
std::string truncate_to_words(std::string_view text, std::size_t n);

std::size_t nearest_rank_bound(std::vector<std::size_t> counts, double percentile);

using CorpusSections = std::map<std::string, std::vector<std::pair<std::string, std::string>>>;

CorpusSections truncate_corpus_sections(const CorpusSections& corpus_sections, double percentile = 95.0);

}  // namespace ward::segmenter
