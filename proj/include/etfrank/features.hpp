#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "etfrank/pit_store.hpp"

namespace etfrank {

inline constexpr std::size_t kWindowQuarters = 8;

enum class Label : std::uint8_t { Up = 0, Down = 1 };

std::string_view label_name(Label l);

/// Constants applied to every percent-change cell. `eps_den` is fitted on
/// training-period statements and then frozen.
struct FeatureContext {
    std::array<double, kNumFeatures> eps_den{};
    double clip_bound = 10.0;
    double max_imputed_frac = 0.25;

    /// eps_den[i] = 1e-6 * median |feature i| over statements available
    /// strictly before `train_end`.
    static FeatureContext fit(const PitStore& store, Date train_end, double clip_bound = 10.0,
                              double max_imputed_frac = 0.25);
};

struct PctChange {
    double value = 0.0;
    bool masked = false;
};

/// (curr - prev) / prev, with a degenerate denominator (|prev| < eps_den or
/// prev == 0) mapped to a masked 0.0 and the result clamped to
/// [-clip_bound, clip_bound] (clamped values are masked).
PctChange pct_change(double curr, double prev, double eps_den, double clip_bound);

/// 8 x f percent-change matrix, rows oldest -> newest, stored row-major.
struct FeatureWindow {
    std::string ticker;
    Date asof;
    std::size_t num_features = kNumFeatures;
    std::vector<double> values;
    std::vector<std::uint8_t> mask;

    double at(std::size_t quarter, std::size_t feature) const { return values[quarter * num_features + feature]; }
    bool masked(std::size_t quarter, std::size_t feature) const { return mask[quarter * num_features + feature] != 0; }
    std::size_t masked_count() const;

    friend bool operator==(const FeatureWindow&, const FeatureWindow&) = default;
};

enum class RejectReason { InsufficientHistory, TooSparse };

std::string_view reject_reason_name(RejectReason r);

struct WindowRejection {
    RejectReason reason;
};

using WindowResult = std::variant<FeatureWindow, WindowRejection>;

/// Percent changes between the 9 most recent available statements.
WindowResult build_window(const PitStore& store, const FeatureContext& ctx, const std::string& ticker, Date asof);

/// Window from an explicit, period-ordered list of 9 statements.
WindowResult window_from_records(std::span<const StatementRecord> records, const FeatureContext& ctx,
                                 const std::string& ticker, Date asof);

struct ReturnObservation {
    std::string ticker;
    double fwd_return = 0.0;
};

/// Median split of one cross-section: the top ceil(n/2) forward returns are
/// Up, ties broken by ticker ascending. Labels come back in input order.
std::vector<Label> neutralize_labels(std::span<const ReturnObservation> cross_section);

struct LabeledSample {
    FeatureWindow window;
    Label label = Label::Down;
    double fwd_return = 0.0;
};

enum class Split { Train, Validation, Test };

std::string_view split_name(Split s);

/// train = [start, train_end), validation = [train_end, validation_end),
/// test = [validation_end, test_end].
struct SplitBoundaries {
    Date start;
    Date train_end;
    Date validation_end;
    Date test_end;
};

std::vector<Date> split_dates(const RebalanceCalendar& calendar, Split split, const SplitBoundaries& bounds);

/// Start (exclusive) of the liquidity window ending at `t`: the last business
/// day of the calendar quarter preceding t's quarter.
Date liquidity_window_start(Date t, const BusinessCalendar& bd);

/// Samples for one rebalance date: valid, buildable, priced stocks with
/// neutralized labels. Fewer than two candidates yields an empty result.
std::vector<LabeledSample> build_cross_section(const PitStore& store, const FeatureContext& ctx,
                                               std::span<const std::string> universe, Date t, Date t_next);

/// Throws ConfigError when no sample can be built.
std::vector<LabeledSample> build_dataset(const PitStore& store, const FeatureContext& ctx,
                                         const RebalanceCalendar& calendar, std::span<const std::string> universe,
                                         Split split, const SplitBoundaries& bounds);

/// `ticker,asof,label,fwd_return,v_0_0..v_7_{f-1}` plus a parallel mask file.
void write_dataset_csv(const std::string& values_path, const std::string& mask_path,
                       std::span<const LabeledSample> samples);

}  // namespace etfrank
