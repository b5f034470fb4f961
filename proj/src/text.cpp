#include "ward/text.hpp"

#include <cctype>

namespace ward {

static bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

std::string_view trim_view(std::string_view s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && is_space(s[b]))
        ++b;
    while (e > b && is_space(s[e - 1]))
        --e;
    return s.substr(b, e - b);
}

std::string trim(std::string_view s) { return std::string(trim_view(s)); }

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (char &c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool starts_with_ci(std::string_view text, std::string_view prefix) {
    if (text.size() < prefix.size())
        return false;
    for (size_t i = 0; i < prefix.size(); ++i) {
        char a = static_cast<char>(std::tolower(static_cast<unsigned char>(text[i])));
        char b = static_cast<char>(std::tolower(static_cast<unsigned char>(prefix[i])));
        if (a != b)
            return false;
    }
    return true;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            break;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string join(const std::vector<std::string> &parts, std::string_view sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i)
            out += sep;
        out += parts[i];
    }
    return out;
}

std::string section_title(std::string_view canonical_name) {
    static const std::vector<std::string> kSmallWords = {"of", "and", "or", "the",
                                                         "to", "in",  "on", "for"};
    std::vector<std::string> words = split(std::string(canonical_name), '_');
    std::string out;
    for (size_t i = 0; i < words.size(); ++i) {
        std::string w = to_lower_ascii(words[i]);
        bool small = false;
        for (const auto &s : kSmallWords)
            if (w == s)
                small = true;
        if (i == 0 || !small) {
            if (!w.empty())
                w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
        }
        if (i)
            out += ' ';
        out += w;
    }
    return out;
}

bool contains(std::string_view haystack, std::string_view needle) {
    return haystack.find(needle) != std::string_view::npos;
}

std::string replace_all(std::string str, std::string_view from, std::string_view to) {
    if (from.empty())
        return str;
    size_t pos = 0;
    while ((pos = str.find(from, pos)) != std::string::npos) {
        str.replace(pos, from.size(), to);
        pos += to.size();
    }
    return str;
}

} // namespace ward
