#include "ward/csv.hpp"

#include <fstream>
#include <sstream>

#include "ward/error.hpp"

namespace ward {

std::optional<std::size_t> CsvTable::column_index(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name)
            return i;
    return std::nullopt;
}

std::size_t CsvTable::require_column(std::string_view name) const {
    auto idx = column_index(name);
    if (!idx)
        raise(ErrorKind::schema, "missing required column: " + std::string(name));
    return *idx;
}

namespace {

struct Parser {
    std::string_view src;
    std::size_t pos = 0;
    std::size_t line = 1;

    bool done() const { return pos >= src.size(); }

    // Parses one record (list of fields). Returns false at end of input.
    bool next_record(std::vector<std::string> &fields) {
        fields.clear();
        if (done())
            return false;
        std::string field;
        bool in_quotes = false;
        bool quoted_field = false;
        while (true) {
            if (done()) {
                if (in_quotes)
                    raise(ErrorKind::validation,
                          "unterminated quoted CSV field near line " + std::to_string(line));
                fields.push_back(std::move(field));
                return true;
            }
            char c = src[pos];
            if (in_quotes) {
                if (c == '"') {
                    if (pos + 1 < src.size() && src[pos + 1] == '"') {
                        field += '"';
                        pos += 2;
                    } else {
                        in_quotes = false;
                        ++pos;
                    }
                } else {
                    if (c == '\n')
                        ++line;
                    field += c;
                    ++pos;
                }
                continue;
            }
            switch (c) {
            case '"':
                if (field.empty() && !quoted_field) {
                    in_quotes = true;
                    quoted_field = true;
                    ++pos;
                } else {
                    // Stray quote inside an unquoted field: keep it literal.
                    field += c;
                    ++pos;
                }
                break;
            case ',':
                fields.push_back(std::move(field));
                field.clear();
                quoted_field = false;
                ++pos;
                break;
            case '\r':
                if (pos + 1 < src.size() && src[pos + 1] == '\n') {
                    fields.push_back(std::move(field));
                    pos += 2;
                    ++line;
                    return true;
                }
                field += c;
                ++pos;
                break;
            case '\n':
                fields.push_back(std::move(field));
                ++pos;
                ++line;
                return true;
            default:
                field += c;
                ++pos;
                break;
            }
        }
    }
};

} // namespace

CsvTable parse_csv(std::string_view content) {
    CsvTable table;
    Parser parser{content};
    std::vector<std::string> fields;
    if (!parser.next_record(fields))
        raise(ErrorKind::validation, "empty CSV input");
    table.columns = fields;
    std::size_t header_line = 1;
    while (parser.next_record(fields)) {
        // A trailing newline yields one empty single-field record; skip it.
        if (fields.size() == 1 && fields[0].empty() && parser.done())
            break;
        if (fields.size() != table.columns.size())
            raise(ErrorKind::validation,
                  "CSV row " + std::to_string(table.rows.size() + header_line + 1) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(table.columns.size()));
        table.rows.push_back(fields);
    }
    return table;
}

CsvTable read_csv_file(const std::filesystem::path &path) {
    return parse_csv(read_file(path));
}

std::string format_csv_field(std::string_view field) {
    bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs_quotes)
        return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"')
            out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string format_csv(const std::vector<std::string> &columns,
                       const std::vector<std::vector<std::string>> &rows) {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i)
            out += ',';
        out += format_csv_field(columns[i]);
    }
    out += '\n';
    for (const auto &row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i)
                out += ',';
            out += format_csv_field(row[i]);
        }
        out += '\n';
    }
    return out;
}

void atomic_write_file(const std::filesystem::path &path, std::string_view content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            raise(ErrorKind::io, "cannot open for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out)
            raise(ErrorKind::io, "write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec)
        raise(ErrorKind::io, "rename failed: " + tmp.string() + " -> " + path.string() +
                                 " (" + ec.message() + ")");
}

std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(ErrorKind::io, "cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad())
        raise(ErrorKind::io, "read failed: " + path.string());
    return ss.str();
}

} // namespace ward
