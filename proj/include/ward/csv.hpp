#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ward {

// RFC 4180 table: quoted fields may contain commas, doubled quotes and
// embedded newlines (discharge letters are multi-line).
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> column_index(std::string_view name) const;
    // Index of a column that must exist; throws a schema error naming it.
    std::size_t require_column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view content);
CsvTable read_csv_file(const std::filesystem::path &path);

std::string format_csv_field(std::string_view field);
std::string format_csv(const std::vector<std::string> &columns,
                       const std::vector<std::vector<std::string>> &rows);

// Writes via a temp file + rename so chained pipelines never see partial files.
void atomic_write_file(const std::filesystem::path &path, std::string_view content);

std::string read_file(const std::filesystem::path &path);

} // namespace ward
