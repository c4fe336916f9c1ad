#pragma once

#include <string>

#include "etfrank/backtest.hpp"

namespace etfrank {

/// Writes summary.csv, annual.csv, holdings.csv, daily_value.csv and
/// report.md for one universe into `dir`.
void write_group_report(const std::string& dir, const std::string& title, const ComparisonTable& table);

/// Markdown tables rebuilt from summary.csv and annual.csv in `dir`.
std::string render_report_from_dir(const std::string& dir, const std::string& title);

}  // namespace etfrank
