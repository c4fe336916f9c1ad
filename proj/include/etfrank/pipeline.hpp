#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "etfrank/backtest.hpp"
#include "etfrank/config.hpp"
#include "etfrank/pit_store.hpp"
#include "etfrank/synthetic.hpp"

namespace etfrank {

/// Exclusive `.lock` file in an output directory for the lifetime of a
/// command.
class OutputLock {
public:
    explicit OutputLock(const std::filesystem::path& dir);
    ~OutputLock();
    OutputLock(const OutputLock&) = delete;
    OutputLock& operator=(const OutputLock&) = delete;

private:
    std::filesystem::path path_;
};

struct IngestSummary {
    std::size_t statements = 0;
    std::size_t prices = 0;
    std::size_t pdf_rows = 0;
    std::size_t stocks = 0;
    std::size_t etfs = 0;
    std::filesystem::path store_dir;
};

struct TrainSummary {
    std::filesystem::path checkpoint;
    std::filesystem::path log;
    std::uint64_t iteration = 0;
    double metric_value = 0.0;
    std::size_t train_samples = 0;
    std::size_t validation_samples = 0;
    std::size_t evaluations = 0;
};

struct ScoreSummary {
    std::size_t dates = 0;
    std::size_t stock_rows = 0;
    std::size_t etf_rows = 0;
    std::size_t exclusions = 0;
};

struct BacktestGroup {
    std::string name;  // "stocks" or "etfs"
    std::filesystem::path dir;
    ComparisonTable table;
};

struct BacktestSummary {
    std::vector<BacktestGroup> groups;
};

IngestSummary cmd_ingest(const RunConfig& cfg);
/// Loads the store written by cmd_ingest.
PitStore open_store(const RunConfig& cfg);
TrainSummary cmd_train(const RunConfig& cfg);
ScoreSummary cmd_score(const RunConfig& cfg, const std::filesystem::path& checkpoint);
BacktestSummary cmd_backtest(const RunConfig& cfg);
/// Re-renders report.md for every group from its CSV files.
std::string cmd_report(const RunConfig& cfg);

std::filesystem::path default_checkpoint_path(const RunConfig& cfg);

/// Ranked lists per date read back from the score files.
RankedByDate read_stock_rankings(const std::filesystem::path& stock_scores_csv);
RankedByDate read_etf_rankings(const std::filesystem::path& etf_scores_csv);

struct SelftestOptions {
    std::filesystem::path output_dir;
    std::uint64_t seed = 42;
    SyntheticOptions data;
    nn::TrainConfig train = reduced_train_config();

    static nn::TrainConfig reduced_train_config();
};

struct SelftestResult {
    double validation_accuracy = 0.0;
    double top20_total_return = 0.0;
    double ew_total_return = 0.0;
    std::filesystem::path config_path;
    std::filesystem::path run_dir;
    bool accuracy_ok = false;
    bool ordering_ok = false;
    bool passed() const { return accuracy_ok && ordering_ok; }
};

inline constexpr double kSelftestMinAccuracy = 0.65;

/// Generates the synthetic fixture under output_dir/data, writes
/// output_dir/config.json and runs ingest, train, score and backtest into
/// output_dir/run.
SelftestResult run_selftest(const SelftestOptions& options);

}  // namespace etfrank
