#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "etfrank/backtest.hpp"
#include "etfrank/features.hpp"
#include "etfrank/nn.hpp"

namespace etfrank {

/// One declarative run description. Relative paths resolve against the
/// directory of the config file.
struct RunConfig {
    struct Paths {
        std::filesystem::path statements;
        std::filesystem::path prices;
        std::optional<std::filesystem::path> pdfs;
        std::optional<std::filesystem::path> stock_universe;
        std::optional<std::filesystem::path> etf_universe;
        std::optional<std::filesystem::path> index;
        std::optional<std::filesystem::path> holidays;
        std::filesystem::path output;
    } paths;

    SplitBoundaries dates{Date(2002, 3, 1), Date(2009, 3, 31), Date(2012, 3, 30), Date(2022, 4, 29)};
    /// First date a backtest may start at; defaults to dates.validation_end.
    std::optional<Date> backtest_start;

    nn::TrainConfig train;
    std::uint64_t seed = 42;

    std::vector<PortfolioSpec> stock_portfolios = {PortfolioSpec::top_percent(80), PortfolioSpec::top_percent(60),
                                                   PortfolioSpec::top_percent(40), PortfolioSpec::top_percent(20)};
    std::vector<PortfolioSpec> etf_portfolios = {PortfolioSpec::top_count(8), PortfolioSpec::top_count(7),
                                                 PortfolioSpec::top_count(6), PortfolioSpec::top_count(5),
                                                 PortfolioSpec::top_count(4)};
    std::string index_name = "S&P 500";

    double min_coverage = 0.8;
    int max_pdf_age_days = 95;
    double clip_bound = 10.0;
    double max_imputed_frac = 0.25;
    double cost_per_turnover = 0.0;

    /// Parses a JSON config; each override is `dotted.key=value` where value
    /// is read as JSON when possible and as a string otherwise.
    static RunConfig load(const std::string& path, const std::vector<std::string>& overrides = {});
    static RunConfig from_json_text(const std::string& text, const std::filesystem::path& base_dir,
                                    const std::vector<std::string>& overrides = {});

    /// Throws ConfigError on any inconsistency or missing input file.
    void validate() const;

    Date effective_backtest_start() const { return backtest_start.value_or(dates.validation_end); }
    std::filesystem::path store_dir() const { return paths.output / "store"; }
    std::filesystem::path model_dir() const { return paths.output / "model"; }
    std::filesystem::path scores_dir() const { return paths.output / "scores"; }
    std::filesystem::path report_dir() const { return paths.output / "report"; }
};

}  // namespace etfrank
