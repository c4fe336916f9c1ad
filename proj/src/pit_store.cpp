#include "etfrank/pit_store.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include "etfrank/csv.hpp"
#include "etfrank/error.hpp"

namespace etfrank {

namespace {

constexpr double kPdfWeightTolerance = 0.02;

Date parse_date_field(const CsvTable& t, const CsvRow& row, std::size_t col) {
    try {
        return Date::parse(row.fields[col]);
    } catch (const std::invalid_argument& e) {
        throw ParseError(t.source, row.line, std::string(t.header[col]) + ": " + e.what());
    }
}

double parse_number_field(const CsvTable& t, const CsvRow& row, std::size_t col) {
    try {
        return parse_number(row.fields[col]);
    } catch (const std::invalid_argument& e) {
        throw ParseError(t.source, row.line, std::string(t.header[col]) + ": " + e.what());
    }
}

std::string require_identifier(const CsvTable& t, const CsvRow& row, std::size_t col) {
    const auto& v = row.fields[col];
    if (v.empty()) throw ParseError(t.source, row.line, std::string(t.header[col]) + ": empty identifier");
    return v;
}

std::string join_lines(const std::vector<std::size_t>& lines) {
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(lines[i]);
    }
    return out;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path + "'");
    return out;
}

}  // namespace

double PdfSnapshot::total_weight() const {
    double s = 0.0;
    for (const auto& h : holdings) s += h.weight;
    return s;
}

RebalanceCalendar::RebalanceCalendar(std::vector<Date> dates, const BusinessCalendar& bd)
    : dates_(std::move(dates)) {
    for (std::size_t i = 0; i < dates_.size(); ++i) {
        const Date d = dates_[i];
        if (i > 0 && !(dates_[i - 1] < d)) {
            throw ConfigError("rebalance dates must be strictly increasing at " + d.str());
        }
        if (d.month() % 3 != 0 || bd.last_business_day_of_month(d.year(), d.month()) != d) {
            throw ConfigError(d.str() + " is not the last business day of a calendar quarter");
        }
    }
}

RebalanceCalendar RebalanceCalendar::between(Date first, Date last, const BusinessCalendar& bd) {
    return RebalanceCalendar(bd.quarter_end_rebalance_dates(first, last), bd);
}

std::optional<Date> RebalanceCalendar::next(Date t) const {
    auto it = std::upper_bound(dates_.begin(), dates_.end(), t);
    if (it == dates_.end()) return std::nullopt;
    return *it;
}

std::optional<Date> RebalanceCalendar::previous(Date t) const {
    auto it = std::lower_bound(dates_.begin(), dates_.end(), t);
    if (it == dates_.begin()) return std::nullopt;
    return *std::prev(it);
}

bool RebalanceCalendar::contains(Date t) const {
    return std::binary_search(dates_.begin(), dates_.end(), t);
}

Date derive_available_from(Date period_end, const BusinessCalendar& bd) {
    const Date q_end = calendar_quarter_end(period_end);
    const Date next_q_end = calendar_quarter_end(q_end.plus_days(1));
    return bd.last_business_day_of_month(next_q_end.year(), next_q_end.month());
}

PitStore::PitStore(BusinessCalendar bd) : bd_(std::move(bd)) {}

// ---------------------------------------------------------------------------
// Statements

std::size_t PitStore::ingest_statements(const std::string& path) {
    const CsvTable t = read_csv(path);
    const std::size_t c_ticker = t.require_column("ticker");
    const std::size_t c_end = t.require_column("period_end");
    const auto c_avail = t.column("available_from");

    std::array<std::size_t, kNumFeatures> c_feat{};
    for (std::size_t f = 0; f < kNumFeatures; ++f) c_feat[f] = t.require_column(kFeatureNames[f]);
    for (const auto& name : t.header) {
        const bool known = name == "ticker" || name == "period_end" || name == "available_from" ||
                           std::find(kFeatureNames.begin(), kFeatureNames.end(), name) != kFeatureNames.end();
        if (!known) throw SchemaError(path + ": unknown statement column '" + name + "'");
    }

    std::vector<StatementRecord> records;
    std::vector<std::size_t> lines;
    records.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        StatementRecord r;
        r.ticker = require_identifier(t, row, c_ticker);
        r.period_end = parse_date_field(t, row, c_end);
        if (c_avail && !row.fields[*c_avail].empty()) {
            r.available_from = parse_date_field(t, row, *c_avail);
        } else {
            r.available_from = derive_available_from(r.period_end);
        }
        for (std::size_t f = 0; f < kNumFeatures; ++f) {
            try {
                r.features[f] = parse_optional_number(row.fields[c_feat[f]]);
            } catch (const std::invalid_argument& e) {
                throw ParseError(path, row.line, std::string(kFeatureNames[f]) + ": " + e.what());
            }
        }
        if (r.available_from < r.period_end) {
            throw ParseError(path, row.line, "available_from precedes period_end");
        }
        records.push_back(std::move(r));
        lines.push_back(row.line);
    }

    // Duplicate detection reports source line numbers, so it runs here
    // before handing off to the in-memory path.
    std::map<std::pair<std::string, Date>, std::vector<std::size_t>> seen;
    for (std::size_t i = 0; i < records.size(); ++i) {
        seen[{records[i].ticker, records[i].period_end}].push_back(lines[i]);
    }
    std::vector<std::size_t> dup_lines;
    for (const auto& [key, ls] : seen) {
        const bool in_store = [&] {
            auto it = statements_.find(key.first);
            if (it == statements_.end()) return false;
            return std::any_of(it->second.begin(), it->second.end(),
                               [&](const StatementRecord& r) { return r.period_end == key.second; });
        }();
        if (ls.size() > 1 || in_store) dup_lines.insert(dup_lines.end(), ls.begin(), ls.end());
    }
    if (!dup_lines.empty()) {
        std::sort(dup_lines.begin(), dup_lines.end());
        throw DataError(path + ": duplicate (ticker, period_end) rows at lines " + join_lines(dup_lines));
    }
    return ingest_statements(std::move(records), path);
}

std::size_t PitStore::ingest_statements(std::vector<StatementRecord> records, const std::string& source) {
    std::set<std::pair<std::string, Date>> keys;
    for (const auto& r : records) {
        if (r.ticker.empty()) throw DataError(source + ": empty ticker");
        if (r.available_from < r.period_end) {
            throw DataError(source + ": " + r.ticker + " " + r.period_end.str() + " available_from precedes period_end");
        }
        for (const auto& v : r.features) {
            if (v && !std::isfinite(*v)) throw DataError(source + ": non-finite feature for " + r.ticker);
        }
        bool dup = !keys.insert({r.ticker, r.period_end}).second;
        if (!dup) {
            auto it = statements_.find(r.ticker);
            dup = it != statements_.end() &&
                  std::any_of(it->second.begin(), it->second.end(),
                              [&](const StatementRecord& s) { return s.period_end == r.period_end; });
        }
        if (dup) {
            throw DataError(source + ": duplicate statement (" + r.ticker + ", " + r.period_end.str() + ")");
        }
    }
    const std::size_t n = records.size();
    for (auto& r : records) statements_[r.ticker].push_back(std::move(r));
    for (auto& [ticker, v] : statements_) {
        std::sort(v.begin(), v.end(),
                  [](const StatementRecord& a, const StatementRecord& b) { return a.period_end < b.period_end; });
    }
    return n;
}

// ---------------------------------------------------------------------------
// Prices

std::size_t PitStore::ingest_prices(const std::string& path) {
    const CsvTable t = read_csv(path);
    const std::size_t c_ticker = t.require_column("ticker");
    const std::size_t c_date = t.require_column("date");
    const std::size_t c_close = t.require_column("close");
    const std::size_t c_volume = t.require_column("volume");

    std::vector<PriceBar> bars;
    bars.reserve(t.rows.size());
    std::map<std::pair<std::string, Date>, std::vector<std::size_t>> seen;
    for (const auto& row : t.rows) {
        PriceBar b;
        b.ticker = require_identifier(t, row, c_ticker);
        b.date = parse_date_field(t, row, c_date);
        b.close = parse_number_field(t, row, c_close);
        b.volume = parse_number_field(t, row, c_volume);
        if (!(b.close > 0.0)) throw ParseError(path, row.line, "close must be strictly positive");
        if (b.volume < 0.0) throw ParseError(path, row.line, "volume must be non-negative");
        seen[{b.ticker, b.date}].push_back(row.line);
        bars.push_back(std::move(b));
    }
    std::vector<std::size_t> dup_lines;
    for (const auto& [key, ls] : seen) {
        if (ls.size() > 1) dup_lines.insert(dup_lines.end(), ls.begin(), ls.end());
    }
    if (!dup_lines.empty()) {
        std::sort(dup_lines.begin(), dup_lines.end());
        throw DataError(path + ": duplicate (ticker, date) rows at lines " + join_lines(dup_lines));
    }
    return ingest_prices(std::move(bars), path);
}

std::size_t PitStore::ingest_prices(std::vector<PriceBar> bars, const std::string& source) {
    std::set<std::pair<std::string, Date>> keys;
    for (const auto& b : bars) {
        if (b.ticker.empty()) throw DataError(source + ": empty ticker");
        if (!(b.close > 0.0) || !std::isfinite(b.close)) {
            throw DataError(source + ": non-positive close for " + b.ticker + " " + b.date.str());
        }
        if (!(b.volume >= 0.0)) throw DataError(source + ": negative volume for " + b.ticker);
        bool dup = !keys.insert({b.ticker, b.date}).second;
        if (!dup) {
            auto it = prices_.find(b.ticker);
            dup = it != prices_.end() &&
                  std::binary_search(it->second.begin(), it->second.end(), b,
                                     [](const PriceBar& x, const PriceBar& y) { return x.date < y.date; });
        }
        if (dup) throw DataError(source + ": duplicate price bar (" + b.ticker + ", " + b.date.str() + ")");
    }
    const std::size_t n = bars.size();
    for (auto& b : bars) prices_[b.ticker].push_back(std::move(b));
    for (auto& [ticker, v] : prices_) {
        std::sort(v.begin(), v.end(), [](const PriceBar& a, const PriceBar& b) { return a.date < b.date; });
    }
    return n;
}

// ---------------------------------------------------------------------------
// Portfolio deposit files

std::size_t PitStore::ingest_pdfs(const std::string& path) {
    const CsvTable t = read_csv(path);
    const std::size_t c_etf = t.require_column("etf");
    const std::size_t c_date = t.require_column("date");
    const std::size_t c_ticker = t.require_column("ticker");
    const std::size_t c_weight = t.require_column("weight");

    std::map<std::pair<std::string, Date>, PdfSnapshot> grouped;
    for (const auto& row : t.rows) {
        const std::string etf = require_identifier(t, row, c_etf);
        const Date date = parse_date_field(t, row, c_date);
        const std::string ticker = require_identifier(t, row, c_ticker);
        const double w = parse_number_field(t, row, c_weight);
        if (w < 0.0) throw ParseError(path, row.line, "negative weight");
        auto& snap = grouped[{etf, date}];
        snap.etf = etf;
        snap.date = date;
        for (const auto& h : snap.holdings) {
            if (h.ticker == ticker) {
                throw ParseError(path, row.line, "duplicate ticker " + ticker + " in " + etf + " " + date.str());
            }
        }
        snap.holdings.push_back({ticker, w});
    }
    std::vector<PdfSnapshot> snaps;
    snaps.reserve(grouped.size());
    for (auto& [key, s] : grouped) snaps.push_back(std::move(s));
    return ingest_pdfs(std::move(snaps), path);
}

std::size_t PitStore::ingest_pdfs(std::vector<PdfSnapshot> snapshots, const std::string& source) {
    std::set<std::pair<std::string, Date>> keys;
    for (const auto& s : snapshots) {
        if (s.etf.empty()) throw DataError(source + ": empty etf identifier");
        std::set<std::string> tickers;
        for (const auto& h : s.holdings) {
            if (!(h.weight >= 0.0) || !std::isfinite(h.weight)) {
                throw DataError(source + ": invalid weight for " + h.ticker + " in " + s.etf + " " + s.date.str());
            }
            if (!tickers.insert(h.ticker).second) {
                throw DataError(source + ": duplicate ticker " + h.ticker + " in " + s.etf + " " + s.date.str());
            }
        }
        const double total = s.total_weight();
        if (std::abs(total - 1.0) > kPdfWeightTolerance) {
            throw DataError(source + ": weights of " + s.etf + " " + s.date.str() + " sum to " +
                            format_number(total));
        }
        if (total != 1.0) {
            spdlog::debug("{} {}: non-equity residual weight {}", s.etf, s.date.str(), 1.0 - total);
        }
        bool dup = !keys.insert({s.etf, s.date}).second;
        if (!dup) {
            auto it = pdfs_.find(s.etf);
            dup = it != pdfs_.end() && std::any_of(it->second.begin(), it->second.end(),
                                                   [&](const PdfSnapshot& x) { return x.date == s.date; });
        }
        if (dup) throw DataError(source + ": duplicate snapshot (" + s.etf + ", " + s.date.str() + ")");
    }
    std::size_t rows = 0;
    for (auto& s : snapshots) {
        rows += s.holdings.size();
        pdfs_[s.etf].push_back(std::move(s));
    }
    for (auto& [etf, v] : pdfs_) {
        std::sort(v.begin(), v.end(), [](const PdfSnapshot& a, const PdfSnapshot& b) { return a.date < b.date; });
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Universes

std::size_t PitStore::load_stock_universe(const std::string& path) {
    const CsvTable t = read_csv(path);
    const std::size_t c = t.require_column("ticker");
    std::vector<std::string> tickers;
    for (const auto& row : t.rows) tickers.push_back(require_identifier(t, row, c));
    set_stock_universe(std::move(tickers));
    return stock_universe_.size();
}

std::size_t PitStore::load_etf_universe(const std::string& path) {
    const CsvTable t = read_csv(path);
    const std::size_t c_etf = t.require_column("etf");
    const std::size_t c_inc = t.require_column("inception");
    std::vector<EtfListing> etfs;
    for (const auto& row : t.rows) {
        etfs.push_back({require_identifier(t, row, c_etf), parse_date_field(t, row, c_inc)});
    }
    set_etf_universe(std::move(etfs));
    return etf_universe_.size();
}

void PitStore::set_stock_universe(std::vector<std::string> tickers) {
    std::sort(tickers.begin(), tickers.end());
    if (std::adjacent_find(tickers.begin(), tickers.end()) != tickers.end()) {
        throw DataError("duplicate ticker in stock universe");
    }
    stock_universe_ = std::move(tickers);
}

void PitStore::set_etf_universe(std::vector<EtfListing> etfs) {
    std::sort(etfs.begin(), etfs.end(), [](const EtfListing& a, const EtfListing& b) { return a.etf < b.etf; });
    for (std::size_t i = 1; i < etfs.size(); ++i) {
        if (etfs[i].etf == etfs[i - 1].etf) throw DataError("duplicate etf in universe: " + etfs[i].etf);
    }
    etf_universe_ = std::move(etfs);
}

std::optional<Date> PitStore::etf_inception(const std::string& etf) const {
    for (const auto& e : etf_universe_) {
        if (e.etf == etf) return e.inception;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Queries

std::vector<StatementRecord> PitStore::statements_asof(const std::string& ticker, Date asof, std::size_t n) const {
    if (n == 0) throw std::invalid_argument("statements_asof: n must be >= 1");
    std::vector<StatementRecord> out;
    auto it = statements_.find(ticker);
    if (it == statements_.end()) return out;
    for (const auto& r : it->second) {
        if (r.available_from <= asof) out.push_back(r);
    }
    if (out.size() > n) out.erase(out.begin(), out.end() - static_cast<std::ptrdiff_t>(n));
    return out;
}

bool PitStore::is_valid_stock(const std::string& ticker, Date window_start, Date window_end) const {
    if (!(window_start < window_end)) throw std::invalid_argument("is_valid_stock: empty window");
    auto it = prices_.find(ticker);
    if (it == prices_.end()) return false;
    const auto& bars = it->second;
    auto bar = std::upper_bound(bars.begin(), bars.end(), window_start,
                                [](Date d, const PriceBar& b) { return d < b.date; });
    int untraded = 0;
    for (Date d : bd_.business_days(window_start, window_end)) {
        while (bar != bars.end() && bar->date < d) ++bar;
        const bool traded = bar != bars.end() && bar->date == d && bar->volume > 0.0;
        if (!traded && ++untraded > kMaxUntradedDays) return false;
    }
    return true;
}

const PdfSnapshot& PitStore::pdf_asof(const std::string& etf, Date asof) const {
    auto it = pdfs_.find(etf);
    if (it != pdfs_.end()) {
        const auto& v = it->second;
        auto s = std::upper_bound(v.begin(), v.end(), asof, [](Date d, const PdfSnapshot& x) { return d < x.date; });
        if (s != v.begin()) return *std::prev(s);
    }
    throw MissingDataError("no PDF snapshot for " + etf + " at or before " + asof.str());
}

std::optional<PriceBar> PitStore::close_at_or_before(const std::string& ticker, Date d) const {
    auto it = prices_.find(ticker);
    if (it == prices_.end()) return std::nullopt;
    const auto& bars = it->second;
    auto b = std::upper_bound(bars.begin(), bars.end(), d, [](Date x, const PriceBar& p) { return x < p.date; });
    if (b == bars.begin()) return std::nullopt;
    --b;
    if (bd_.count_business_days(b->date, d) > kMaxPriceLagDays) return std::nullopt;
    return *b;
}

std::optional<PriceBar> PitStore::last_close_at_or_before(const std::string& ticker, Date d) const {
    auto it = prices_.find(ticker);
    if (it == prices_.end()) return std::nullopt;
    const auto& bars = it->second;
    auto b = std::upper_bound(bars.begin(), bars.end(), d, [](Date x, const PriceBar& p) { return x < p.date; });
    if (b == bars.begin()) return std::nullopt;
    return *std::prev(b);
}

double PitStore::forward_return(const std::string& ticker, Date t, Date t_next) const {
    const auto p0 = close_at_or_before(ticker, t);
    if (!p0) throw MissingDataError("no close for " + ticker + " within 5 business days before " + t.str());
    const auto p1 = close_at_or_before(ticker, t_next);
    if (!p1) throw MissingDataError("no close for " + ticker + " within 5 business days before " + t_next.str());
    return (p1->close - p0->close) / p0->close;
}

std::span<const PriceBar> PitStore::price_history(const std::string& ticker) const {
    auto it = prices_.find(ticker);
    if (it == prices_.end()) return {};
    return it->second;
}

std::span<const StatementRecord> PitStore::statement_history(const std::string& ticker) const {
    auto it = statements_.find(ticker);
    if (it == statements_.end()) return {};
    return it->second;
}

std::size_t PitStore::statement_count() const {
    std::size_t n = 0;
    for (const auto& [k, v] : statements_) n += v.size();
    return n;
}

std::size_t PitStore::price_count() const {
    std::size_t n = 0;
    for (const auto& [k, v] : prices_) n += v.size();
    return n;
}

std::size_t PitStore::pdf_count() const {
    std::size_t n = 0;
    for (const auto& [k, v] : pdfs_) n += v.size();
    return n;
}

std::vector<StatementRecord> PitStore::all_statements() const {
    std::vector<StatementRecord> out;
    for (const auto& [k, v] : statements_) out.insert(out.end(), v.begin(), v.end());
    return out;
}

std::vector<PriceBar> PitStore::all_prices() const {
    std::vector<PriceBar> out;
    for (const auto& [k, v] : prices_) out.insert(out.end(), v.begin(), v.end());
    return out;
}

std::vector<PdfSnapshot> PitStore::all_pdfs() const {
    std::vector<PdfSnapshot> out;
    for (const auto& [k, v] : pdfs_) out.insert(out.end(), v.begin(), v.end());
    return out;
}

// ---------------------------------------------------------------------------
// Export / load

void write_statements_csv(const std::string& path, std::span<const StatementRecord> records) {
    auto out = open_out(path);
    out << "ticker,period_end,available_from";
    for (auto name : kFeatureNames) out << ',' << name;
    out << '\n';
    for (const auto& r : records) {
        out << r.ticker << ',' << r.period_end.str() << ',' << r.available_from.str();
        for (const auto& v : r.features) {
            out << ',';
            if (v) out << format_number(*v);
        }
        out << '\n';
    }
}

void write_prices_csv(const std::string& path, std::span<const PriceBar> bars) {
    auto out = open_out(path);
    out << "ticker,date,close,volume\n";
    for (const auto& b : bars) {
        out << b.ticker << ',' << b.date.str() << ',' << format_number(b.close) << ',' << format_number(b.volume)
            << '\n';
    }
}

void write_pdfs_csv(const std::string& path, std::span<const PdfSnapshot> snapshots) {
    auto out = open_out(path);
    out << "etf,date,ticker,weight\n";
    for (const auto& s : snapshots) {
        for (const auto& h : s.holdings) {
            out << s.etf << ',' << s.date.str() << ',' << h.ticker << ',' << format_number(h.weight) << '\n';
        }
    }
}

void write_stock_universe_csv(const std::string& path, std::span<const std::string> tickers) {
    auto out = open_out(path);
    out << "ticker\n";
    for (const auto& t : tickers) out << t << '\n';
}

void write_etf_universe_csv(const std::string& path, std::span<const EtfListing> etfs) {
    auto out = open_out(path);
    out << "etf,inception\n";
    for (const auto& e : etfs) out << e.etf << ',' << e.inception.str() << '\n';
}

void PitStore::export_to(const std::string& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path d(dir);
    write_statements_csv((d / "statements.csv").string(), all_statements());
    write_prices_csv((d / "prices.csv").string(), all_prices());
    write_pdfs_csv((d / "pdfs.csv").string(), all_pdfs());
    write_stock_universe_csv((d / "stock_universe.csv").string(), stock_universe_);
    write_etf_universe_csv((d / "etf_universe.csv").string(), etf_universe_);
    auto out = open_out((d / "holidays.csv").string());
    out << "date\n";
    for (Date h : bd_.holidays()) out << h.str() << '\n';
}

PitStore PitStore::load_from(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path d(dir);
    if (!fs::exists(d / "statements.csv")) {
        throw DataError("no store at '" + dir + "' (run ingest first)");
    }
    PitStore store(BusinessCalendar::from_holiday_file((d / "holidays.csv").string()));
    store.ingest_statements((d / "statements.csv").string());
    store.ingest_prices((d / "prices.csv").string());
    store.ingest_pdfs((d / "pdfs.csv").string());
    store.load_stock_universe((d / "stock_universe.csv").string());
    store.load_etf_universe((d / "etf_universe.csv").string());
    return store;
}

}  // namespace etfrank
