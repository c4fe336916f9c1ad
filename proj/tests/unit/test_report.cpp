#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "etfrank/backtest.hpp"
#include "etfrank/csv.hpp"
#include "etfrank/report.hpp"
#include "support.hpp"

using namespace etfrank;
using testsupport::D;

namespace {

ComparisonTable sample_table() {
    BusinessCalendar bd;
    std::vector<PriceBar> bars;
    for (const std::string t : {"A", "B", "C"}) {
        const double drift = t == "A" ? 0.001 : t == "B" ? -0.0004 : 0.0002;
        std::size_t k = 0;
        double px = 50.0;
        for (Date d : bd.business_days(D("2019-06-27"), D("2021-06-30"))) {
            px *= 1.0 + drift + 0.01 * std::sin(0.7 * static_cast<double>(k++) + t[0]);
            bars.push_back({t, d, px, 100.0});
        }
    }
    PitStore store(bd);
    store.ingest_prices(bars);
    RankedByDate ranked;
    const auto calendar = RebalanceCalendar::between(D("2019-06-28"), D("2021-03-31"), bd);
    for (Date q : calendar.dates()) {
        const double s = static_cast<double>(q.serial() % 7);
        ranked[q] = {{"A", 0.5 + 0.01 * s}, {"B", 0.55}, {"C", 0.6 - 0.01 * s}};
        std::sort(ranked[q].begin(), ranked[q].end(),
                  [](const auto& x, const auto& y) { return x.score > y.score; });
    }
    const Date end = D("2021-06-30");
    const auto ew = run_backtest(ranked, PortfolioSpec::top_percent(100), store, end, "EW");
    const std::vector<BacktestReport> p = {run_backtest(ranked, PortfolioSpec::top_count(1), store, end)};
    return compare_baselines(ew, p, std::nullopt);
}

}  // namespace

TEST_CASE("report files") {
    testsupport::TempDir dir;
    const auto table = sample_table();
    write_group_report(dir.path().string(), "Example", table);
    for (const char* f : {"summary.csv", "annual.csv", "holdings.csv", "daily_value.csv", "report.md"}) {
        CHECK(std::filesystem::exists(dir / f));
    }
    CHECK(render_report_from_dir(dir.path().string(), "Example") == testsupport::read_file(dir / "report.md"));

    // Metrics recomputed from the written daily values agree with the summary.
    const CsvTable daily = read_csv((dir / "daily_value.csv").string());
    const CsvTable summary = read_csv((dir / "summary.csv").string());
    const std::size_t c_port = summary.require_column("portfolio");
    const std::size_t c_ret = summary.require_column("annual_return_pct");
    const std::size_t c_vol = summary.require_column("volatility_pct");
    const std::size_t d_port = daily.require_column("portfolio");
    const std::size_t d_value = daily.require_column("value");
    REQUIRE(summary.rows.size() == 2);
    for (const auto& row : summary.rows) {
        std::vector<double> v;
        for (const auto& d : daily.rows) {
            if (d.fields[d_port] == row.fields[c_port]) v.push_back(parse_number(d.fields[d_value]));
        }
        REQUIRE(v.size() > 100);
        CHECK(annualized_return(v) == doctest::Approx(parse_number(row.fields[c_ret])).epsilon(1e-12));
        CHECK(annualized_volatility(v) == doctest::Approx(parse_number(row.fields[c_vol])).epsilon(1e-12));
    }

    // Writing twice yields identical bytes.
    testsupport::TempDir other;
    write_group_report(other.path().string(), "Example", table);
    for (const char* f : {"summary.csv", "annual.csv", "holdings.csv", "daily_value.csv", "report.md"}) {
        CHECK(testsupport::read_file(dir / f) == testsupport::read_file(other / f));
    }
}
