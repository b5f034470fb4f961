#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ward {

std::string_view trim_view(std::string_view s);
std::string trim(std::string_view s);

std::string to_lower_ascii(std::string_view s);

// Case-insensitive (ASCII) prefix test.
bool starts_with_ci(std::string_view text, std::string_view prefix);

std::vector<std::string> split(std::string_view s, char sep);

std::string join(const std::vector<std::string> &parts, std::string_view sep);

// "history_of_present_illness" -> "History of Present Illness".
// Small connective words stay lowercase, matching the section titles the
// default header patterns use.
std::string section_title(std::string_view canonical_name);

bool contains(std::string_view haystack, std::string_view needle);

// Replaces every occurrence of `from` with `to`.
std::string replace_all(std::string str, std::string_view from, std::string_view to);

} // namespace ward
