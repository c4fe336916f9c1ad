#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "etfrank/date.hpp"
#include "etfrank/pit_store.hpp"

namespace etfrank {

struct ScoredInstrument {
    std::string id;
    double score = 0.0;

    friend bool operator==(const ScoredInstrument&, const ScoredInstrument&) = default;
};

/// Top-K (count) or top-K% selection, equal weight.
struct PortfolioSpec {
    enum class Mode { Count, Percent };
    Mode mode = Mode::Count;
    double k = 1.0;

    static PortfolioSpec top_count(std::size_t n) { return {Mode::Count, static_cast<double>(n)}; }
    static PortfolioSpec top_percent(double pct) { return {Mode::Percent, pct}; }

    /// "Top 4" / "Top 20%".
    std::string label() const;
    /// Number of instruments selected out of `n` ranked ones.
    std::size_t selection_size(std::size_t n) const;
    void validate() const;

    friend bool operator==(const PortfolioSpec&, const PortfolioSpec&) = default;
};

struct Holding {
    std::string instrument;
    double weight = 0.0;
    Date entry;
    Date exit;

    friend bool operator==(const Holding&, const Holding&) = default;
};

/// Equal-weight holdings for the first selection_size(n) ranked instruments.
std::vector<Holding> select_portfolio(std::span<const ScoredInstrument> ranked, const PortfolioSpec& spec,
                                      Date entry = {}, Date exit = {});

struct ValuePoint {
    Date date;
    double value = 0.0;

    friend bool operator==(const ValuePoint&, const ValuePoint&) = default;
};

struct AnnualRow {
    int year = 0;
    double return_pct = 0.0;
    double volatility_pct = 0.0;
};

inline constexpr double kTradingDaysPerYear = 252.0;

/// (V_end / V_start)^(252 / intervals) - 1, in percent.
double annualized_return(std::span<const double> values);
/// Sample standard deviation of daily simple returns * sqrt(252), in percent.
double annualized_volatility(std::span<const double> values);
/// annualized_return / annualized_volatility (zero risk-free rate).
double sharpe(std::span<const double> values);
double sharpe_ratio(double annual_return_pct, double volatility_pct);

/// Per calendar year: raw return over the year's span (from the previous
/// year's last point, or the series start) and annualized volatility of the
/// daily returns ending in that year.
std::vector<AnnualRow> annual_breakdown(std::span<const ValuePoint> series);

std::vector<double> values_of(std::span<const ValuePoint> series);

struct BacktestReport {
    std::string name;
    std::vector<ValuePoint> daily;
    double annual_return_pct = 0.0;
    double volatility_pct = 0.0;
    std::optional<double> sharpe;
    std::vector<AnnualRow> annual;
    std::vector<Holding> holdings;
    std::vector<std::string> warnings;
};

/// Ranked instruments per rebalance date.
using RankedByDate = std::map<Date, std::vector<ScoredInstrument>>;

struct BacktestOptions {
    /// Cost charged on each rebalance as a fraction of traded value
    /// (sum of |weight changes|). Zero by default.
    double cost_per_turnover = 0.0;
};

/// Quarterly top-K portfolio, buy-and-hold between rebalance dates with
/// daily mark-to-market at the last available close, chained
/// multiplicatively. The final period runs from the last rebalance date to
/// `end`.
BacktestReport run_backtest(const RankedByDate& ranked, const PortfolioSpec& spec, const PitStore& prices, Date end,
                            const std::string& name = {}, const BacktestOptions& options = {});

/// Fills annual_return_pct / volatility_pct / sharpe / annual from `daily`.
void compute_metrics(BacktestReport& report);

struct SummaryRow {
    std::string portfolio;
    double annual_return_pct = 0.0;
    double volatility_pct = 0.0;
    std::optional<double> sharpe;
};

struct ComparisonTable {
    std::vector<SummaryRow> rows;
    std::vector<BacktestReport> series;  // same order as rows
    std::vector<std::string> warnings;
};

/// Rows: the index baseline (when given), the equal-weight baseline, then
/// each portfolio in the order supplied.
ComparisonTable compare_baselines(const BacktestReport& equal_weight, std::span<const BacktestReport> portfolios,
                                  const std::optional<std::vector<ValuePoint>>& index_series,
                                  const std::string& index_name = "S&P 500");

/// `date,close` file.
std::vector<ValuePoint> read_index_series(const std::string& path);

}  // namespace etfrank
