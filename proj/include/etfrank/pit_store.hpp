#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "etfrank/date.hpp"

namespace etfrank {

inline constexpr std::size_t kNumFeatures = 11;

/// Column names of the statements file, in input-vector order.
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "total_revenue",   "operating_income",    "net_income",       "total_asset",
    "current_asset",   "total_equity",        "current_liabilities", "invested_capital",
    "free_cashflow",   "operating_cashflow",  "market_capital",
};

struct StatementRecord {
    std::string ticker;
    Date period_end;
    Date available_from;
    std::array<std::optional<double>, kNumFeatures> features{};

    friend bool operator==(const StatementRecord&, const StatementRecord&) = default;
};

struct PriceBar {
    std::string ticker;
    Date date;
    double close = 0.0;
    double volume = 0.0;

    friend bool operator==(const PriceBar&, const PriceBar&) = default;
};

struct PdfHolding {
    std::string ticker;
    double weight = 0.0;

    friend bool operator==(const PdfHolding&, const PdfHolding&) = default;
};

struct PdfSnapshot {
    std::string etf;
    Date date;
    std::vector<PdfHolding> holdings;

    double total_weight() const;
    friend bool operator==(const PdfSnapshot&, const PdfSnapshot&) = default;
};

struct EtfListing {
    std::string etf;
    Date inception;

    friend bool operator==(const EtfListing&, const EtfListing&) = default;
};

/// Quarter-end rebalance dates, strictly increasing.
class RebalanceCalendar {
public:
    RebalanceCalendar() = default;
    /// Validates that every date is the last business day of Mar/Jun/Sep/Dec
    /// and that the list is strictly increasing.
    RebalanceCalendar(std::vector<Date> dates, const BusinessCalendar& bd);

    static RebalanceCalendar between(Date first, Date last, const BusinessCalendar& bd);

    const std::vector<Date>& dates() const { return dates_; }
    std::optional<Date> next(Date t) const;
    std::optional<Date> previous(Date t) const;
    bool contains(Date t) const;

private:
    std::vector<Date> dates_;
};

/// Default availability: last business day of the calendar quarter that
/// follows the quarter containing `period_end`.
Date derive_available_from(Date period_end, const BusinessCalendar& bd);

/// Point-in-time store for statements, daily prices and ETF holdings.
///
/// Ingestion is all-or-nothing per call. Queries are const and may run
/// concurrently once ingestion is finished.
class PitStore {
public:
    explicit PitStore(BusinessCalendar bd = {});

    std::size_t ingest_statements(const std::string& path);
    std::size_t ingest_statements(std::vector<StatementRecord> records, const std::string& source = "<memory>");
    std::size_t ingest_prices(const std::string& path);
    std::size_t ingest_prices(std::vector<PriceBar> bars, const std::string& source = "<memory>");
    std::size_t ingest_pdfs(const std::string& path);
    std::size_t ingest_pdfs(std::vector<PdfSnapshot> snapshots, const std::string& source = "<memory>");
    std::size_t load_stock_universe(const std::string& path);
    std::size_t load_etf_universe(const std::string& path);
    void set_stock_universe(std::vector<std::string> tickers);
    void set_etf_universe(std::vector<EtfListing> etfs);

    const BusinessCalendar& calendar() const { return bd_; }
    Date derive_available_from(Date period_end) const { return etfrank::derive_available_from(period_end, bd_); }

    /// Up to `n` most recent records with available_from <= asof, ordered by
    /// period_end ascending. Unknown ticker -> empty.
    std::vector<StatementRecord> statements_asof(const std::string& ticker, Date asof, std::size_t n) const;

    /// True iff at most kMaxUntradedDays business days in (window_start,
    /// window_end] lack a bar or carry zero volume.
    bool is_valid_stock(const std::string& ticker, Date window_start, Date window_end) const;

    /// Snapshot with the greatest date <= asof; MissingDataError otherwise.
    const PdfSnapshot& pdf_asof(const std::string& etf, Date asof) const;

    /// Last close dated <= `d` and at most kMaxPriceLagDays business days
    /// before it.
    std::optional<PriceBar> close_at_or_before(const std::string& ticker, Date d) const;

    /// Last close dated <= `d`, however old (used to mark positions whose
    /// instrument stopped trading).
    std::optional<PriceBar> last_close_at_or_before(const std::string& ticker, Date d) const;

    /// (close(t_next) - close(t)) / close(t); MissingDataError when either
    /// close is unavailable.
    double forward_return(const std::string& ticker, Date t, Date t_next) const;

    std::span<const PriceBar> price_history(const std::string& ticker) const;
    std::span<const StatementRecord> statement_history(const std::string& ticker) const;

    const std::vector<std::string>& stock_universe() const { return stock_universe_; }
    const std::vector<EtfListing>& etf_universe() const { return etf_universe_; }
    std::optional<Date> etf_inception(const std::string& etf) const;

    std::size_t statement_count() const;
    std::size_t price_count() const;
    std::size_t pdf_count() const;

    std::vector<StatementRecord> all_statements() const;
    std::vector<PriceBar> all_prices() const;
    std::vector<PdfSnapshot> all_pdfs() const;

    /// Writes statements.csv, prices.csv, pdfs.csv, stock_universe.csv,
    /// etf_universe.csv and holidays.csv into `dir`.
    void export_to(const std::string& dir) const;
    static PitStore load_from(const std::string& dir);

    static constexpr int kMaxUntradedDays = 5;
    static constexpr int kMaxPriceLagDays = 5;

private:
    BusinessCalendar bd_;
    std::map<std::string, std::vector<StatementRecord>, std::less<>> statements_;
    std::map<std::string, std::vector<PriceBar>, std::less<>> prices_;
    std::map<std::string, std::vector<PdfSnapshot>, std::less<>> pdfs_;
    std::vector<std::string> stock_universe_;
    std::vector<EtfListing> etf_universe_;
};

/// Writers shared by the store export and the synthetic fixture generator.
void write_statements_csv(const std::string& path, std::span<const StatementRecord> records);
void write_prices_csv(const std::string& path, std::span<const PriceBar> bars);
void write_pdfs_csv(const std::string& path, std::span<const PdfSnapshot> snapshots);
void write_stock_universe_csv(const std::string& path, std::span<const std::string> tickers);
void write_etf_universe_csv(const std::string& path, std::span<const EtfListing> etfs);

}  // namespace etfrank
