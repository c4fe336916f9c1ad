#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "etfrank/backtest.hpp"
#include "etfrank/features.hpp"
#include "etfrank/pit_store.hpp"

namespace etfrank {

/// Synthetic market where a stock's next-quarter return is a noisy
/// increasing function of the latest available quarterly growth of one
/// statement feature.
struct SyntheticOptions {
    std::size_t num_tickers = 200;
    std::size_t num_quarters = 40;
    std::size_t num_etfs = 12;
    std::uint64_t seed = 7;
    Date first_quarter_end = Date(2010, 3, 31);
    std::size_t signal_feature = 1;  // operating_income
    double signal_slope = 0.5;
    double noise_sd = 0.04;
    double growth_range = 0.2;
    double missing_rate = 0.005;
    double illiquid_rate = 0.03;
};

struct SyntheticData {
    std::vector<StatementRecord> statements;
    std::vector<PriceBar> prices;
    std::vector<PdfSnapshot> pdfs;
    std::vector<std::string> stocks;
    std::vector<EtfListing> etfs;
    std::vector<ValuePoint> index;
    std::vector<Date> rebalance_dates;
    SplitBoundaries bounds;
};

SyntheticData generate_synthetic(const SyntheticOptions& options, const BusinessCalendar& bd);

/// In-memory store holding the synthetic data.
PitStore synthetic_store(const SyntheticData& data, const BusinessCalendar& bd);

/// statements.csv, prices.csv, pdfs.csv, stocks.csv, etfs.csv and index.csv.
void write_synthetic(const SyntheticData& data, const std::string& dir);

}  // namespace etfrank
