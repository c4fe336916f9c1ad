#include <doctest.h>

#include <algorithm>

#include <cmath>
#include <map>
#include <random>

#include "etfrank/error.hpp"
#include "etfrank/features.hpp"
#include "support.hpp"

using namespace etfrank;
using testsupport::D;

namespace {

FeatureContext plain_context() {
    FeatureContext ctx;
    ctx.eps_den.fill(1e-9);
    return ctx;
}

std::vector<StatementRecord> nine_clean(const std::string& ticker = "AAA") {
    std::vector<StatementRecord> recs;
    double v = 100.0;
    for (Date q : testsupport::quarter_ends(D("2018-03-31"), 9)) {
        recs.push_back(testsupport::statement(ticker, q, v));
        v *= 1.05;
    }
    return recs;
}

/// Four tickers with statements from 2018Q1 to 2020Q2 and daily prices
/// through 2020; ticker i drifts by (i - 1.5) per mille per day.
PitStore dataset_store(bool illiquid_july = false) {
    const BusinessCalendar bd;
    PitStore store(bd);
    std::vector<StatementRecord> recs;
    std::vector<PriceBar> bars;
    for (int i = 0; i < 4; ++i) {
        const std::string t = "S" + std::to_string(i);
        double v = 50.0 + i;
        for (Date q : testsupport::quarter_ends(D("2018-03-31"), 10)) {
            recs.push_back(testsupport::statement(t, q, v, std::nullopt, bd));
            v *= 1.0 + 0.02 * (i + 1);
        }
        auto b = testsupport::daily_bars(t, D("2019-12-31"), D("2020-12-31"), bd,
                                         [&](std::size_t k) { return 100.0 * (1.0 + (i - 1.5) * 0.001 * k); });
        if (illiquid_july && i == 2) {
            std::erase_if(b, [](const PriceBar& p) { return D("2020-07-06") <= p.date && p.date <= D("2020-07-17"); });
        }
        bars.insert(bars.end(), b.begin(), b.end());
    }
    store.ingest_statements(recs);
    store.ingest_prices(bars);
    store.set_stock_universe({"S0", "S1", "S2", "S3"});
    return store;
}

const SplitBoundaries kBounds{D("2020-04-01"), D("2020-12-01"), D("2020-12-15"), D("2020-12-31")};

}  // namespace

TEST_CASE("pct_change examples") {
    const auto a = pct_change(110.0, 100.0, 1e-9, 10.0);
    CHECK(a.value == doctest::Approx(0.10).epsilon(1e-15));
    CHECK_FALSE(a.masked);
    for (double x : {1.0, -3.5, 1e8}) {
        CHECK(pct_change(x, x, 1e-9, 10.0).value == 0.0);
    }
    // Literal formula: (50 - (-50)) / (-50) = -2.0, inside the clip range.
    const auto b = pct_change(50.0, -50.0, 1e-9, 10.0);
    CHECK(b.value == -2.0);
    CHECK_FALSE(b.masked);
    // With a tighter clip the same value is clamped and masked.
    const auto c = pct_change(50.0, -50.0, 1e-9, 1.5);
    CHECK(c.value == -1.5);
    CHECK(c.masked);
    const auto big = pct_change(1100.0, 1.0, 1e-9, 10.0);
    CHECK(big.value == 10.0);
    CHECK(big.masked);
}

TEST_CASE("pct_change degenerate denominators") {
    CHECK(pct_change(5.0, 0.0, 0.0, 10.0).masked);
    CHECK(pct_change(5.0, 0.0, 0.0, 10.0).value == 0.0);
    const auto tiny = pct_change(5.0, 1e-7, 1e-6, 10.0);
    CHECK(tiny.masked);
    CHECK(tiny.value == 0.0);
    // |prev| equal to eps_den is usable.
    const auto edge = pct_change(1.5e-6, 1e-6, 1e-6, 10.0);
    CHECK_FALSE(edge.masked);
    CHECK(edge.value == doctest::Approx(0.5));
}

TEST_CASE("window from nine clean quarters") {
    const auto recs = nine_clean();
    const auto w = window_from_records(recs, plain_context(), "AAA", D("2020-06-30"));
    REQUIRE(std::holds_alternative<FeatureWindow>(w));
    const auto& fw = std::get<FeatureWindow>(w);
    CHECK(fw.values.size() == kWindowQuarters * kNumFeatures);
    CHECK(fw.masked_count() == 0);
    for (std::size_t q = 0; q < kWindowQuarters; ++q) CHECK(fw.at(q, 0) == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("window with eight quarters is insufficient history") {
    auto recs = nine_clean();
    recs.pop_back();
    const auto w = window_from_records(recs, plain_context(), "AAA", D("2020-06-30"));
    REQUIRE(std::holds_alternative<WindowRejection>(w));
    CHECK(std::get<WindowRejection>(w).reason == RejectReason::InsufficientHistory);
    CHECK(reject_reason_name(RejectReason::InsufficientHistory) == "insufficient-history");
}

TEST_CASE("one missing cell masks both dependent changes") {
    auto recs = nine_clean();
    recs[4].features[2].reset();
    const auto w = window_from_records(recs, plain_context(), "AAA", D("2020-06-30"));
    REQUIRE(std::holds_alternative<FeatureWindow>(w));
    const auto& fw = std::get<FeatureWindow>(w);
    CHECK(fw.masked_count() == 2);
    CHECK(fw.masked(3, 2));
    CHECK(fw.masked(4, 2));
    CHECK(fw.at(3, 2) == 0.0);
    CHECK(fw.at(4, 2) == 0.0);
    // A hole in the newest record only feeds one change.
    auto edge = nine_clean();
    edge.back().features[0].reset();
    CHECK(std::get<FeatureWindow>(window_from_records(edge, plain_context(), "AAA", D("2020-06-30"))).masked_count() == 1);
}

TEST_CASE("too many imputed cells rejects the window") {
    auto recs = nine_clean();
    // 88 cells; three fully missing features impute 24 cells, above the 22-cell limit.
    for (auto& r : recs) {
        r.features[0].reset();
        r.features[1].reset();
        r.features[2].reset();
    }
    const auto w = window_from_records(recs, plain_context(), "AAA", D("2020-06-30"));
    REQUIRE(std::holds_alternative<WindowRejection>(w));
    CHECK(std::get<WindowRejection>(w).reason == RejectReason::TooSparse);

    // Two fully missing features impute 16 cells, which is allowed.
    auto ok = nine_clean();
    for (auto& r : ok) {
        r.features[0].reset();
        r.features[1].reset();
    }
    CHECK(std::holds_alternative<FeatureWindow>(window_from_records(ok, plain_context(), "AAA", D("2020-06-30"))));
}

TEST_CASE("window values equal a direct percent-change oracle") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(10.0, 1000.0);
    for (int trial = 0; trial < 200; ++trial) {
        auto recs = nine_clean();
        for (auto& r : recs) {
            for (auto& f : r.features) f = u(rng);
        }
        const auto fw = std::get<FeatureWindow>(window_from_records(recs, plain_context(), "AAA", D("2020-06-30")));
        for (std::size_t q = 0; q < kWindowQuarters; ++q) {
            for (std::size_t i = 0; i < kNumFeatures; ++i) {
                const double r0 = *recs[q].features[i];
                const double r1 = *recs[q + 1].features[i];
                const double raw = r1 / r0 - 1.0;
                const double oracle = std::clamp(raw, -10.0, 10.0);
                REQUIRE(std::abs(fw.at(q, i) - oracle) <= 1e-12 * std::max(1.0, std::abs(oracle)));
                REQUIRE(fw.masked(q, i) == (std::abs(raw) > 10.0));
            }
        }
    }
}

TEST_CASE("build_window reads only available statements") {
    PitStore store;
    std::vector<StatementRecord> recs;
    double v = 100.0;
    for (Date q : testsupport::quarter_ends(D("2018-03-31"), 10)) {
        recs.push_back(testsupport::statement("AAA", q, v));
        v *= 1.1;
    }
    store.ingest_statements(recs);
    // At 2020-06-30 records up to period 2020-03-31 are available: exactly nine.
    const auto w = build_window(store, plain_context(), "AAA", D("2020-06-30"));
    REQUIRE(std::holds_alternative<FeatureWindow>(w));
    const auto early = build_window(store, plain_context(), "AAA", D("2020-06-29"));
    REQUIRE(std::holds_alternative<WindowRejection>(early));
}

TEST_CASE("neutralize_labels examples") {
    using L = Label;
    const std::vector<ReturnObservation> a = {{"A", 0.3}, {"B", 0.1}, {"C", -0.2}, {"D", -0.5}};
    CHECK(neutralize_labels(a) == std::vector<L>{L::Up, L::Up, L::Down, L::Down});

    const std::vector<ReturnObservation> b = {{"A", 5}, {"B", 4}, {"C", 3}, {"D", 2}, {"E", 1}};
    const auto lb = neutralize_labels(b);
    CHECK(std::count(lb.begin(), lb.end(), L::Up) == 3);
    CHECK(lb == std::vector<L>{L::Up, L::Up, L::Up, L::Down, L::Down});

    const std::vector<ReturnObservation> ties = {{"D", 0.1}, {"B", 0.1}, {"A", 0.1}, {"C", 0.1}, {"E", 0.1}};
    CHECK(neutralize_labels(ties) == std::vector<L>{L::Down, L::Up, L::Up, L::Up, L::Down});

    // Labels come back in input order.
    const std::vector<ReturnObservation> shuffled = {{"D", -0.5}, {"A", 0.3}, {"C", -0.2}, {"B", 0.1}};
    CHECK(neutralize_labels(shuffled) == std::vector<L>{L::Down, L::Up, L::Down, L::Up});

    CHECK_THROWS_AS(neutralize_labels(std::vector<ReturnObservation>{{"A", 0.1}}), DataError);
    CHECK_THROWS_AS(neutralize_labels(std::vector<ReturnObservation>{{"A", 0.1}, {"B", NAN}}), DataError);
}

TEST_CASE("split boundaries") {
    const BusinessCalendar bd;
    const auto cal = RebalanceCalendar::between(D("2002-03-01"), D("2022-04-29"), bd);
    const SplitBoundaries b{D("2002-03-01"), D("2009-03-31"), D("2012-03-30"), D("2022-04-29")};
    const auto train = split_dates(cal, Split::Train, b);
    const auto val = split_dates(cal, Split::Validation, b);
    const auto test = split_dates(cal, Split::Test, b);
    CHECK(train.front() == D("2002-03-28"));  // Good Friday 2002 fell on the 29th
    CHECK(train.back() == D("2008-12-31"));
    CHECK(val.front() == D("2009-03-31"));
    CHECK(val.back() == D("2011-12-30"));
    CHECK(test.front() == D("2012-03-30"));
    CHECK(test.back() == D("2022-03-31"));
    CHECK(train.size() + val.size() + test.size() == cal.dates().size());
}

TEST_CASE("liquidity window start is the previous quarter's last business day") {
    const BusinessCalendar bd;
    CHECK(liquidity_window_start(D("2020-06-30"), bd) == D("2020-03-31"));
    CHECK(liquidity_window_start(D("2012-06-29"), bd) == D("2012-03-30"));
    CHECK(liquidity_window_start(D("2021-03-31"), bd) == D("2020-12-31"));
}

TEST_CASE("build_dataset counts") {
    const BusinessCalendar bd;
    const auto cal = RebalanceCalendar::between(D("2020-03-01"), D("2020-12-31"), bd);
    const std::vector<std::string> universe = {"S0", "S1", "S2", "S3"};
    const auto ctx = plain_context();

    const PitStore store = dataset_store();
    const auto all = build_dataset(store, ctx, cal, universe, Split::Train, kBounds);
    CHECK(all.size() == 8);

    const PitStore gappy = dataset_store(true);
    const auto fewer = build_dataset(gappy, ctx, cal, universe, Split::Train, kBounds);
    CHECK(fewer.size() == 7);
    for (const auto& s : fewer) {
        if (s.window.ticker == "S2") CHECK(s.window.asof == D("2020-06-30"));
    }

    for (const auto* ds : {&all, &fewer}) {
        std::map<Date, int> balance;
        for (const auto& s : *ds) balance[s.window.asof] += s.label == Label::Up ? 1 : -1;
        for (const auto& [d, b] : balance) CHECK(std::abs(b) <= 1);
    }
    // Labels follow the drift ordering: S3 and S2 rise fastest.
    for (const auto& s : all) {
        CHECK((s.label == Label::Up) == (s.window.ticker == "S3" || s.window.ticker == "S2"));
    }

    const SplitBoundaries nothing{D("2020-04-01"), D("2020-04-02"), D("2020-04-03"), D("2020-12-31")};
    CHECK_THROWS_AS(build_dataset(store, ctx, cal, universe, Split::Train, nothing), ConfigError);
}

TEST_CASE("dataset export is deterministic") {
    const BusinessCalendar bd;
    const auto cal = RebalanceCalendar::between(D("2020-03-01"), D("2020-12-31"), bd);
    const std::vector<std::string> universe = {"S0", "S1", "S2", "S3"};
    testsupport::TempDir tmp;
    for (int run = 0; run < 2; ++run) {
        const auto ds = build_dataset(dataset_store(), plain_context(), cal, universe, Split::Train, kBounds);
        write_dataset_csv((tmp / ("v" + std::to_string(run))).string(), (tmp / ("m" + std::to_string(run))).string(),
                          ds);
    }
    const auto v0 = testsupport::read_file(tmp / "v0");
    CHECK(v0 == testsupport::read_file(tmp / "v1"));
    CHECK(testsupport::read_file(tmp / "m0") == testsupport::read_file(tmp / "m1"));
    CHECK(v0.rfind("ticker,asof,label,fwd_return,v_0_0,", 0) == 0);
    CHECK(v0.find(",v_7_10\n") != std::string::npos);
}

TEST_CASE("feature context fit uses only training-period statements") {
    PitStore store;
    store.ingest_statements({testsupport::statement("A", D("2019-03-31"), 2.0),
                             testsupport::statement("B", D("2019-03-31"), 4.0),
                             testsupport::statement("C", D("2019-03-31"), -8.0),
                             testsupport::statement("A", D("2020-03-31"), 1e9)});
    const auto ctx = FeatureContext::fit(store, D("2020-01-01"));
    CHECK(ctx.eps_den[0] == doctest::Approx(4e-6));
}
