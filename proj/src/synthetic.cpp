#include "etfrank/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "etfrank/csv.hpp"
#include "etfrank/error.hpp"
#include "etfrank/nn.hpp"

namespace etfrank {

namespace {

std::string stock_name(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "S%03zu", i);
    return buf;
}

std::string etf_name(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "E%02zu", i);
    return buf;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticOptions& o, const BusinessCalendar& bd) {
    if (o.num_quarters < kWindowQuarters + 4) throw ConfigError("synthetic data needs at least 12 quarters");
    if (o.signal_feature >= kNumFeatures) throw ConfigError("signal_feature out of range");
    nn::Rng rng(o.seed);
    SyntheticData out;
    const std::size_t Q = o.num_quarters;

    // Quarter q has period end quarter_end[q]; its statement becomes
    // available on rebalance date t[q + 1].
    std::vector<Date> quarter_end;
    Date qe = calendar_quarter_end(o.first_quarter_end);
    for (std::size_t q = 0; q < Q; ++q) {
        quarter_end.push_back(qe);
        qe = calendar_quarter_end(qe.plus_days(1));
    }
    std::vector<Date> t;
    for (std::size_t j = 0; j <= Q; ++j) {
        const Date e = j < Q ? quarter_end[j] : qe;
        t.push_back(bd.last_business_day_of_month(e.year(), e.month()));
    }
    out.rebalance_dates = t;

    const std::size_t first_usable = kWindowQuarters + 1;
    const std::size_t usable = Q - first_usable;
    out.bounds.start = t.front();
    out.bounds.train_end = t[first_usable + static_cast<std::size_t>(std::lround(0.5 * static_cast<double>(usable)))];
    out.bounds.validation_end = t[first_usable + static_cast<std::size_t>(std::lround(0.7 * static_cast<double>(usable)))];
    out.bounds.test_end = t.back();

    std::vector<double> market(Q);
    for (auto& m : market) m = 0.02 + 0.05 * rng.normal();

    std::map<std::string, std::vector<PriceBar>> bars_by_ticker;
    std::vector<std::vector<double>> daily_returns;  // per stock, aligned with all_days
    std::vector<Date> all_days = bd.business_days(t.front(), t.back());

    for (std::size_t s = 0; s < o.num_tickers; ++s) {
        const std::string ticker = stock_name(s);
        out.stocks.push_back(ticker);

        std::array<double, kNumFeatures> raw{};
        for (auto& r : raw) r = 1e8 * std::exp(rng.normal());
        std::vector<double> signal_growth(Q, 0.0);
        for (std::size_t q = 0; q < Q; ++q) {
            StatementRecord rec;
            rec.ticker = ticker;
            rec.period_end = quarter_end[q];
            rec.available_from = derive_available_from(quarter_end[q], bd);
            for (std::size_t f = 0; f < kNumFeatures; ++f) {
                if (q > 0) {
                    const double g = rng.uniform(-o.growth_range, o.growth_range);
                    raw[f] *= 1.0 + g;
                    if (f == o.signal_feature) signal_growth[q] = g;
                }
                if (rng.uniform() >= o.missing_rate) rec.features[f] = raw[f];
            }
            out.statements.push_back(std::move(rec));
        }

        // Period j runs from t[j] to t[j + 1]; the newest statement visible at
        // t[j] is quarter j - 1.
        auto& bars = bars_by_ticker[ticker];
        double close = rng.uniform(20.0, 200.0);
        bars.push_back({ticker, t[0], close, std::round(rng.uniform(1e5, 1e6))});
        std::vector<double> rets;
        for (std::size_t j = 0; j < Q; ++j) {
            const double signal = j >= 2 ? signal_growth[j - 1] : 0.0;
            double R = market[j] + o.signal_slope * signal + o.noise_sd * rng.normal();
            R = std::max(R, -0.8);
            const auto days = bd.business_days(t[j], t[j + 1]);
            std::vector<double> eps(days.size());
            double mean = 0.0;
            for (auto& e : eps) {
                e = 0.01 * rng.normal();
                mean += e;
            }
            mean /= static_cast<double>(eps.size());
            const double drift = std::log1p(R) / static_cast<double>(days.size());
            std::size_t illiquid_from = days.size();
            if (rng.uniform() < o.illiquid_rate) illiquid_from = static_cast<std::size_t>(rng.below(days.size() - 8));
            for (std::size_t i = 0; i < days.size(); ++i) {
                const double prev = close;
                close *= std::exp(drift + eps[i] - mean);
                rets.push_back(close / prev - 1.0);
                const bool halted = i >= illiquid_from && i < illiquid_from + 8;
                bars.push_back({ticker, days[i], close, halted ? 0.0 : std::round(rng.uniform(1e5, 1e6))});
            }
        }
        daily_returns.push_back(std::move(rets));
    }

    // Equal-weight index, rebalanced daily.
    double level = 1000.0;
    out.index.push_back({t.front(), level});
    for (std::size_t d = 0; d < all_days.size(); ++d) {
        double m = 0.0;
        for (const auto& r : daily_returns) m += r[d];
        level *= 1.0 + m / static_cast<double>(daily_returns.size());
        out.index.push_back({all_days[d], level});
    }

    // ETFs: quarterly PDFs with 1% cash; the last ETF carries 25% of
    // unlisted components (always below coverage) and one ETF lists late.
    auto close_on = [&](const std::string& ticker, Date d) {
        const auto& v = bars_by_ticker.at(ticker);
        auto it = std::upper_bound(v.begin(), v.end(), d, [](Date x, const PriceBar& b) { return x < b.date; });
        return std::prev(it)->close;
    };
    for (std::size_t e = 0; e < o.num_etfs; ++e) {
        const std::string etf = etf_name(e);
        const bool late = e + 2 == o.num_etfs;
        const bool foreign = e + 1 == o.num_etfs;
        const std::size_t first_j = late ? first_usable + usable * 3 / 4 : 0;
        const Date inception = late ? t[first_j].plus_days(-10) : t.front();
        out.etfs.push_back({etf, inception});

        std::vector<std::size_t> members(o.num_tickers);
        for (std::size_t i = 0; i < members.size(); ++i) members[i] = i;
        for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.below(i)]);
        members.resize(std::min<std::size_t>(30, o.num_tickers));

        double nav = 100.0;
        std::vector<PriceBar> etf_bars;
        if (late) {
            for (Date d : bd.business_days(inception.plus_days(-1), t[first_j])) etf_bars.push_back({etf, d, nav, 1e6});
        } else {
            etf_bars.push_back({etf, t.front(), nav, 1e6});
        }
        for (std::size_t j = first_j; j < Q; ++j) {
            PdfSnapshot snap{etf, t[j], {}};
            std::vector<double> w(members.size());
            double sum = 0.0;
            for (auto& x : w) {
                x = rng.uniform(0.5, 1.5);
                sum += x;
            }
            const double equity = foreign ? 0.74 : 0.99;
            for (std::size_t i = 0; i < members.size(); ++i) {
                snap.holdings.push_back({stock_name(members[i]), equity * w[i] / sum});
            }
            if (foreign) {
                snap.holdings.push_back({"XF1", 0.15});
                snap.holdings.push_back({"XF2", 0.10});
            }
            std::vector<double> shares(members.size());
            double listed_weight = 0.0;
            for (std::size_t i = 0; i < members.size(); ++i) {
                const double wi = snap.holdings[i].weight;
                listed_weight += wi;
                shares[i] = nav * wi / close_on(stock_name(members[i]), t[j]);
            }
            const double cash = nav * (1.0 - listed_weight);
            for (Date d : bd.business_days(t[j], t[j + 1])) {
                double v = cash;
                for (std::size_t i = 0; i < members.size(); ++i) v += shares[i] * close_on(stock_name(members[i]), d);
                etf_bars.push_back({etf, d, v, 1e6});
                nav = v;
            }
            out.pdfs.push_back(std::move(snap));
        }
        bars_by_ticker[etf] = std::move(etf_bars);
    }

    for (auto& [ticker, v] : bars_by_ticker) {
        out.prices.insert(out.prices.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
    }
    return out;
}

PitStore synthetic_store(const SyntheticData& data, const BusinessCalendar& bd) {
    PitStore store(bd);
    store.ingest_statements(data.statements);
    store.ingest_prices(data.prices);
    store.ingest_pdfs(data.pdfs);
    store.set_stock_universe(data.stocks);
    store.set_etf_universe(data.etfs);
    return store;
}

void write_synthetic(const SyntheticData& data, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path d(dir);
    write_statements_csv((d / "statements.csv").string(), data.statements);
    write_prices_csv((d / "prices.csv").string(), data.prices);
    write_pdfs_csv((d / "pdfs.csv").string(), data.pdfs);
    write_stock_universe_csv((d / "stocks.csv").string(), data.stocks);
    write_etf_universe_csv((d / "etfs.csv").string(), data.etfs);
    std::ofstream idx(d / "index.csv", std::ios::binary | std::ios::trunc);
    if (!idx) throw DataError("cannot write index.csv");
    idx << "date,close\n";
    for (const auto& p : data.index) idx << p.date.str() << ',' << format_number(p.value) << '\n';
}

}  // namespace etfrank
