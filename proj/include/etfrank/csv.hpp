#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace etfrank {

struct CsvRow {
    std::size_t line = 0;  // 1-based line number in the source file
    std::vector<std::string> fields;
};

/// Comma-delimited text with a header row. No quoting: every field in the
/// formats handled here is an identifier, a date, or a number.
struct CsvTable {
    std::string source;
    std::vector<std::string> header;
    std::vector<CsvRow> rows;

    std::optional<std::size_t> column(std::string_view name) const;
    /// Throws SchemaError naming the file and column.
    std::size_t require_column(std::string_view name) const;
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(std::string_view text, const std::string& source);

/// Parses a full-field decimal number; nullopt for an empty cell. Throws
/// std::invalid_argument on anything else.
std::optional<double> parse_optional_number(std::string_view field);
double parse_number(std::string_view field);

/// Shortest round-trip representation of a double.
std::string format_number(double v);

}  // namespace etfrank
