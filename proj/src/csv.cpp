#include "etfrank/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "etfrank/error.hpp"

namespace etfrank {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        const auto field = trim(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start));
        out.emplace_back(field);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    return std::nullopt;
}

std::size_t CsvTable::require_column(std::string_view name) const {
    if (auto c = column(name)) return *c;
    throw SchemaError(source + ": missing column '" + std::string(name) + "'");
}

CsvTable parse_csv(std::string_view text, const std::string& source) {
    CsvTable table;
    table.source = source;
    std::size_t line_no = 0;
    std::size_t start = 0;
    bool have_header = false;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const auto line = trim(text.substr(start, end - start));
        ++line_no;
        start = end + 1;
        if (line.empty()) {
            if (end == text.size()) break;
            continue;
        }
        if (!have_header) {
            table.header = split(line);
            have_header = true;
        } else {
            CsvRow row{line_no, split(line)};
            if (row.fields.size() != table.header.size()) {
                throw ParseError(source, line_no,
                                 "expected " + std::to_string(table.header.size()) + " fields, got " +
                                     std::to_string(row.fields.size()));
            }
            table.rows.push_back(std::move(row));
        }
        if (end == text.size()) break;
    }
    if (!have_header) throw SchemaError(source + ": empty file (no header row)");
    return table;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str(), path);
}

std::optional<double> parse_optional_number(std::string_view field) {
    field = trim(field);
    if (field.empty()) return std::nullopt;
    double v = 0.0;
    const char* first = field.data();
    if (*first == '+') ++first;
    auto [p, ec] = std::from_chars(first, field.data() + field.size(), v);
    if (ec != std::errc{} || p != field.data() + field.size() || !std::isfinite(v)) {
        throw std::invalid_argument("invalid number '" + std::string(field) + "'");
    }
    return v;
}

double parse_number(std::string_view field) {
    auto v = parse_optional_number(field);
    if (!v) throw std::invalid_argument("missing number");
    return *v;
}

std::string format_number(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

}  // namespace etfrank
