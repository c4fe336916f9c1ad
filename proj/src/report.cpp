#include "etfrank/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "etfrank/csv.hpp"
#include "etfrank/error.hpp"

namespace etfrank {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    return out;
}

std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

void write_group_report(const std::string& dir, const std::string& title, const ComparisonTable& table) {
    const fs::path d(dir);
    fs::create_directories(d);
    {
        auto out = open_out(d / "summary.csv");
        out << "portfolio,annual_return_pct,volatility_pct,sharpe\n";
        for (const auto& r : table.rows) {
            out << r.portfolio << ',' << format_number(r.annual_return_pct) << ',' << format_number(r.volatility_pct)
                << ',' << (r.sharpe ? format_number(*r.sharpe) : std::string()) << '\n';
        }
    }
    {
        auto out = open_out(d / "annual.csv");
        out << "portfolio,year,return_pct,volatility_pct\n";
        for (const auto& s : table.series) {
            for (const auto& a : s.annual) {
                out << s.name << ',' << a.year << ',' << format_number(a.return_pct) << ','
                    << format_number(a.volatility_pct) << '\n';
            }
        }
    }
    {
        auto out = open_out(d / "holdings.csv");
        out << "portfolio,instrument,weight,entry,exit\n";
        for (const auto& s : table.series) {
            for (const auto& h : s.holdings) {
                out << s.name << ',' << h.instrument << ',' << format_number(h.weight) << ',' << h.entry.str() << ','
                    << h.exit.str() << '\n';
            }
        }
    }
    {
        auto out = open_out(d / "daily_value.csv");
        out << "portfolio,date,value\n";
        for (const auto& s : table.series) {
            for (const auto& p : s.daily) out << s.name << ',' << p.date.str() << ',' << format_number(p.value) << '\n';
        }
    }
    {
        auto out = open_out(d / "warnings.txt");
        for (const auto& w : table.warnings) out << w << '\n';
        for (const auto& s : table.series) {
            for (const auto& w : s.warnings) out << s.name << ": " << w << '\n';
        }
    }
    auto md = open_out(d / "report.md");
    md << render_report_from_dir(dir, title);
}

std::string render_report_from_dir(const std::string& dir, const std::string& title) {
    const fs::path d(dir);
    const CsvTable summary = read_csv((d / "summary.csv").string());
    const CsvTable annual = read_csv((d / "annual.csv").string());
    const std::size_t s_name = summary.require_column("portfolio");
    const std::size_t s_ret = summary.require_column("annual_return_pct");
    const std::size_t s_vol = summary.require_column("volatility_pct");
    const std::size_t s_sharpe = summary.require_column("sharpe");

    std::ostringstream out;
    out << "## " << title << "\n\n";
    out << "| Portfolio | Annual Return (%) | Volatility | Sharpe Ratio |\n";
    out << "|---|---:|---:|---:|\n";
    std::vector<std::string> order;
    for (const auto& row : summary.rows) {
        order.push_back(row.fields[s_name]);
        const auto sh = parse_optional_number(row.fields[s_sharpe]);
        out << "| " << row.fields[s_name] << " | " << fixed2(parse_number(row.fields[s_ret])) << " | "
            << fixed2(parse_number(row.fields[s_vol])) << " | " << (sh ? fixed2(*sh) : std::string("n/a")) << " |\n";
    }

    const std::size_t a_name = annual.require_column("portfolio");
    const std::size_t a_year = annual.require_column("year");
    const std::size_t a_ret = annual.require_column("return_pct");
    const std::size_t a_vol = annual.require_column("volatility_pct");
    std::map<int, std::map<std::string, std::pair<double, double>>> by_year;
    for (const auto& row : annual.rows) {
        by_year[std::stoi(row.fields[a_year])][row.fields[a_name]] = {parse_number(row.fields[a_ret]),
                                                                      parse_number(row.fields[a_vol])};
    }
    if (!by_year.empty()) {
        out << "\n### Annual breakdown\n\n| Year |";
        for (const auto& name : order) out << ' ' << name << " Return | " << name << " Volatility |";
        out << "\n|---|";
        for (std::size_t i = 0; i < order.size(); ++i) out << "---:|---:|";
        out << '\n';
        for (const auto& [year, cells] : by_year) {
            out << "| " << year << " |";
            for (const auto& name : order) {
                auto it = cells.find(name);
                if (it == cells.end()) {
                    out << " | |";
                } else {
                    out << ' ' << fixed2(it->second.first) << " | " << fixed2(it->second.second) << " |";
                }
            }
            out << '\n';
        }
    }
    if (std::ifstream warnings(d / "warnings.txt"); warnings) {
        std::string line;
        bool first = true;
        while (std::getline(warnings, line)) {
            if (line.empty()) continue;
            if (first) out << '\n';
            first = false;
            out << "> warning: " << line << '\n';
        }
    }
    return out.str();
}

}  // namespace etfrank
