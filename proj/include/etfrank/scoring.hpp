#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "etfrank/features.hpp"
#include "etfrank/nn.hpp"
#include "etfrank/pit_store.hpp"

namespace etfrank {

struct StockScore {
    std::string ticker;
    Date asof;
    std::optional<double> score;  // up-probability; present iff covered

    bool covered() const { return score.has_value(); }
    friend bool operator==(const StockScore&, const StockScore&) = default;
};

struct EtfScore {
    std::string etf;
    Date asof;
    double score = 0.0;
    double coverage = 0.0;
    std::size_t n_components = 0;

    friend bool operator==(const EtfScore&, const EtfScore&) = default;
};

enum class EtfExclusionReason { NotListed, NoPdf, StalePdf, LowCoverage };

std::string_view exclusion_reason_name(EtfExclusionReason r);

struct EtfExclusion {
    std::string etf;
    Date asof;
    EtfExclusionReason reason;
    double coverage = 0.0;

    friend bool operator==(const EtfExclusion&, const EtfExclusion&) = default;
};

struct ComponentScore {
    double weight = 0.0;
    std::optional<double> score;
};

struct Aggregate {
    std::optional<double> score;  // empty when no component is covered
    double coverage = 0.0;
};

/// Weighted average over covered components, renormalized by their weight;
/// coverage is covered weight over total weight.
Aggregate aggregate_components(std::span<const ComponentScore> components);

struct ScoringOptions {
    double min_coverage = 0.8;
    int max_pdf_age_days = 95;
};

/// Sorts descending by score, ties by identifier ascending.
void rank_etf_scores(std::vector<EtfScore>& scores);

struct UniverseScores {
    std::vector<EtfScore> ranked;
    std::vector<EtfExclusion> excluded;
};

/// Scores stocks with a trained network and ETFs through their PDF weights.
/// Pure given (params, store); every method is const.
class Scorer {
public:
    Scorer(const PitStore& store, const nn::ModelParams& params, FeatureContext features, ScoringOptions options = {});

    StockScore score_stock(const std::string& ticker, Date asof) const;
    std::vector<StockScore> score_stocks(std::span<const std::string> tickers, Date asof) const;

    /// MissingDataError when no PDF exists at or before `asof`.
    std::variant<EtfScore, EtfExclusion> score_etf(const std::string& etf, Date asof) const;

    /// ETFs listed by `asof`, with a PDF no older than max_pdf_age_days and
    /// enough coverage, ranked.
    UniverseScores score_universe(std::span<const std::string> etfs, Date asof) const;

private:
    std::variant<EtfScore, EtfExclusion> score_etf_with(const PdfSnapshot& pdf, const std::string& etf, Date asof,
                                                        std::vector<std::pair<std::string, StockScore>>* memo) const;

    const PitStore& store_;
    const nn::ModelParams& params_;
    FeatureContext features_;
    ScoringOptions options_;
};

}  // namespace etfrank
