#include "etfrank/backtest.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

#include "etfrank/csv.hpp"
#include "etfrank/error.hpp"

namespace etfrank {

std::string PortfolioSpec::label() const {
    if (mode == Mode::Count) return "Top " + std::to_string(static_cast<long long>(k));
    return "Top " + format_number(k) + "%";
}

std::size_t PortfolioSpec::selection_size(std::size_t n) const {
    if (mode == Mode::Count) return std::min(n, static_cast<std::size_t>(k));
    const double raw = static_cast<double>(n) * k / 100.0;
    const auto count = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    return std::clamp<std::size_t>(count, n ? 1 : 0, n);
}

void PortfolioSpec::validate() const {
    if (mode == Mode::Count && (k < 1.0 || k != std::floor(k))) {
        throw ConfigError("top_k_count must be a positive integer");
    }
    if (mode == Mode::Percent && !(k > 0.0 && k <= 100.0)) throw ConfigError("top_k_percent must lie in (0, 100]");
}

std::vector<Holding> select_portfolio(std::span<const ScoredInstrument> ranked, const PortfolioSpec& spec, Date entry,
                                      Date exit) {
    spec.validate();
    if (ranked.empty()) throw DataError("select_portfolio: no ranked instruments");
    if (spec.mode == PortfolioSpec::Mode::Count && static_cast<std::size_t>(spec.k) > ranked.size()) {
        spdlog::warn("{}: only {} instruments ranked, holding all of them", spec.label(), ranked.size());
    }
    const std::size_t n = spec.selection_size(ranked.size());
    std::vector<Holding> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({ranked[i].id, 1.0 / static_cast<double>(n), entry, exit});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Metrics

namespace {

void require_positive(std::span<const double> values) {
    for (double v : values) {
        if (!(v > 0.0) || !std::isfinite(v)) throw NumericError("value series must be positive and finite");
    }
}

double sample_std_of_returns(std::span<const double> values) {
    const std::size_t n = values.size() - 1;
    double mean = 0.0;
    for (std::size_t i = 1; i < values.size(); ++i) mean += values[i] / values[i - 1] - 1.0;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        const double d = values[i] / values[i - 1] - 1.0 - mean;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(n - 1));
}

}  // namespace

double annualized_return(std::span<const double> values) {
    if (values.size() < 2) throw DataError("annualized_return needs at least 2 points");
    require_positive(values);
    const double intervals = static_cast<double>(values.size() - 1);
    return (std::pow(values.back() / values.front(), kTradingDaysPerYear / intervals) - 1.0) * 100.0;
}

double annualized_volatility(std::span<const double> values) {
    if (values.size() < 3) throw DataError("annualized_volatility needs at least 3 points (insufficient data)");
    require_positive(values);
    return sample_std_of_returns(values) * std::sqrt(kTradingDaysPerYear) * 100.0;
}

double sharpe_ratio(double annual_return_pct, double volatility_pct) {
    if (volatility_pct == 0.0) throw NumericError("Sharpe ratio undefined for zero volatility");
    return annual_return_pct / volatility_pct;
}

double sharpe(std::span<const double> values) {
    return sharpe_ratio(annualized_return(values), annualized_volatility(values));
}

std::vector<double> values_of(std::span<const ValuePoint> series) {
    std::vector<double> v;
    v.reserve(series.size());
    for (const auto& p : series) v.push_back(p.value);
    return v;
}

std::vector<AnnualRow> annual_breakdown(std::span<const ValuePoint> series) {
    std::vector<AnnualRow> rows;
    if (series.empty()) return rows;
    double open = series.front().value;
    int year = series.front().date.year();
    std::size_t j = 1;
    while (true) {
        std::vector<double> path{open};
        while (j < series.size() && series[j].date.year() == year) path.push_back(series[j++].value);
        // A year holding only the opening point (a start on its last day)
        // has no returns and gets no row.
        if (path.size() < 2) {
            if (j >= series.size()) break;
            year = series[j].date.year();
            continue;
        }
        AnnualRow row;
        row.year = year;
        row.return_pct = (path.back() / path.front() - 1.0) * 100.0;
        row.volatility_pct =
            path.size() >= 3 ? sample_std_of_returns(path) * std::sqrt(kTradingDaysPerYear) * 100.0 : 0.0;
        rows.push_back(row);
        if (j >= series.size()) break;
        open = path.back();
        year = series[j].date.year();
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Accounting

void compute_metrics(BacktestReport& r) {
    const auto v = values_of(r.daily);
    r.annual = annual_breakdown(r.daily);
    if (v.size() < 3) {
        r.warnings.push_back("fewer than 3 daily points; metrics not computed");
        return;
    }
    r.annual_return_pct = annualized_return(v);
    r.volatility_pct = annualized_volatility(v);
    if (r.volatility_pct > 0.0) {
        r.sharpe = sharpe_ratio(r.annual_return_pct, r.volatility_pct);
    } else {
        r.sharpe.reset();
        r.warnings.push_back("zero volatility; Sharpe undefined");
    }
}

BacktestReport run_backtest(const RankedByDate& ranked, const PortfolioSpec& spec, const PitStore& prices, Date end,
                            const std::string& name, const BacktestOptions& options) {
    if (ranked.empty()) throw DataError("run_backtest: no rebalance dates");
    BacktestReport report;
    report.name = name.empty() ? spec.label() : name;
    const auto& bd = prices.calendar();

    std::vector<Date> dates;
    for (const auto& [d, _] : ranked) dates.push_back(d);

    double value = 1.0;
    report.daily.push_back({dates.front(), value});
    std::map<std::string, double> drifted;  // end-of-period weights, for turnover

    for (std::size_t k = 0; k < dates.size(); ++k) {
        const Date t = dates[k];
        const Date t_end = k + 1 < dates.size() ? dates[k + 1] : end;
        if (!(t < t_end)) break;
        const auto& candidates = ranked.at(t);
        if (candidates.empty()) throw DataError("run_backtest: no scored instruments at " + t.str());

        auto selected = select_portfolio(candidates, spec, t, t_end);
        struct Position {
            std::string id;
            double shares;
        };
        std::vector<Position> positions;
        std::vector<std::pair<std::string, double>> entry_prices;
        for (const auto& h : selected) {
            const auto bar = prices.close_at_or_before(h.instrument, t);
            if (!bar) {
                const std::string msg = t.str() + ": no entry price for " + h.instrument + ", weight redistributed";
                spdlog::warn("{}", msg);
                report.warnings.push_back(msg);
                continue;
            }
            entry_prices.emplace_back(h.instrument, bar->close);
        }
        if (entry_prices.empty()) {
            const std::string msg = t.str() + ": no holdable instrument, period held in cash";
            spdlog::warn("{}", msg);
            report.warnings.push_back(msg);
            drifted.clear();
            for (Date d : bd.business_days(t, t_end)) report.daily.push_back({d, value});
            continue;
        }

        const double w = 1.0 / static_cast<double>(entry_prices.size());
        if (options.cost_per_turnover > 0.0) {
            double turnover = 0.0;
            std::map<std::string, double> target;
            for (const auto& [id, _] : entry_prices) target[id] = w;
            for (const auto& [id, tw] : target) {
                auto it = drifted.find(id);
                turnover += std::abs(tw - (it == drifted.end() ? 0.0 : it->second));
            }
            for (const auto& [id, dw] : drifted) {
                if (!target.contains(id)) turnover += dw;
            }
            value *= 1.0 - options.cost_per_turnover * turnover;
        }
        for (const auto& [id, px] : entry_prices) {
            positions.push_back({id, value * w / px});
            report.holdings.push_back({id, w, t, t_end});
        }

        std::vector<double> last_px(positions.size());
        for (std::size_t i = 0; i < positions.size(); ++i) last_px[i] = entry_prices[i].second;
        for (Date d : bd.business_days(t, t_end)) {
            double v = 0.0;
            for (std::size_t i = 0; i < positions.size(); ++i) {
                if (const auto bar = prices.last_close_at_or_before(positions[i].id, d); bar && bar->date > t) {
                    last_px[i] = bar->close;
                }
                v += positions[i].shares * last_px[i];
            }
            report.daily.push_back({d, v});
        }
        const double period_end_value = report.daily.back().value;
        drifted.clear();
        for (std::size_t i = 0; i < positions.size(); ++i) {
            drifted[positions[i].id] = positions[i].shares * last_px[i] / period_end_value;
        }
        value = period_end_value;
    }
    compute_metrics(report);
    return report;
}

// ---------------------------------------------------------------------------
// Baselines

std::vector<ValuePoint> read_index_series(const std::string& path) {
    const CsvTable t = read_csv(path);
    const std::size_t c_date = t.require_column("date");
    const std::size_t c_close = t.require_column("close");
    std::vector<ValuePoint> out;
    for (const auto& row : t.rows) {
        ValuePoint p;
        try {
            p.date = Date::parse(row.fields[c_date]);
            p.value = parse_number(row.fields[c_close]);
        } catch (const std::invalid_argument& e) {
            throw ParseError(path, row.line, e.what());
        }
        if (!(p.value > 0.0)) throw ParseError(path, row.line, "close must be strictly positive");
        if (!out.empty() && !(out.back().date < p.date)) throw ParseError(path, row.line, "dates must increase");
        out.push_back(p);
    }
    return out;
}

ComparisonTable compare_baselines(const BacktestReport& equal_weight, std::span<const BacktestReport> portfolios,
                                  const std::optional<std::vector<ValuePoint>>& index_series,
                                  const std::string& index_name) {
    ComparisonTable table;
    auto add = [&](const BacktestReport& r) {
        table.rows.push_back({r.name, r.annual_return_pct, r.volatility_pct, r.sharpe});
        table.series.push_back(r);
    };
    if (index_series && !equal_weight.daily.empty()) {
        const Date start = equal_weight.daily.front().date;
        const Date stop = equal_weight.daily.back().date;
        BacktestReport idx;
        idx.name = index_name;
        for (const auto& p : *index_series) {
            if (start <= p.date && p.date <= stop) idx.daily.push_back(p);
        }
        if (idx.daily.empty() || idx.daily.front().date != start || idx.daily.back().date != stop) {
            const std::string msg =
                idx.daily.empty()
                    ? index_name + " series does not overlap the backtest range"
                    : index_name + " series covers only " + idx.daily.front().date.str() + ".." +
                          idx.daily.back().date.str() + " of " + start.str() + ".." + stop.str();
            spdlog::warn("{}", msg);
            table.warnings.push_back(msg);
        }
        if (idx.daily.size() >= 3) {
            const double base = idx.daily.front().value;
            for (auto& p : idx.daily) p.value /= base;
            compute_metrics(idx);
            add(idx);
        }
    }
    BacktestReport ew = equal_weight;
    if (ew.name.empty()) ew.name = "EW";
    add(ew);
    for (const auto& r : portfolios) add(r);
    return table;
}

}  // namespace etfrank
