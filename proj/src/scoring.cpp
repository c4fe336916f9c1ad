#include "etfrank/scoring.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <map>

#include "etfrank/error.hpp"

namespace etfrank {

std::string_view exclusion_reason_name(EtfExclusionReason r) {
    switch (r) {
        case EtfExclusionReason::NotListed: return "not-listed";
        case EtfExclusionReason::NoPdf: return "no-pdf";
        case EtfExclusionReason::StalePdf: return "stale-pdf";
        case EtfExclusionReason::LowCoverage: return "low-coverage";
    }
    return "?";
}

Aggregate aggregate_components(std::span<const ComponentScore> components) {
    double total = 0.0;
    double covered = 0.0;
    double weighted = 0.0;
    for (const auto& c : components) {
        total += c.weight;
        if (c.score) {
            covered += c.weight;
            weighted += c.weight * *c.score;
        }
    }
    Aggregate a;
    a.coverage = total > 0.0 ? covered / total : 0.0;
    if (covered > 0.0) a.score = weighted / covered;
    return a;
}

void rank_etf_scores(std::vector<EtfScore>& scores) {
    std::sort(scores.begin(), scores.end(), [](const EtfScore& a, const EtfScore& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.etf < b.etf;
    });
}

Scorer::Scorer(const PitStore& store, const nn::ModelParams& params, FeatureContext features, ScoringOptions options)
    : store_(store), params_(params), features_(features), options_(options) {}

StockScore Scorer::score_stock(const std::string& ticker, Date asof) const {
    StockScore s{ticker, asof, std::nullopt};
    const Date ws = liquidity_window_start(asof, store_.calendar());
    if (!store_.is_valid_stock(ticker, ws, asof)) return s;
    const auto w = build_window(store_, features_, ticker, asof);
    const auto* window = std::get_if<FeatureWindow>(&w);
    if (!window) return s;
    s.score = nn::predict(params_, *window)[0];
    return s;
}

std::vector<StockScore> Scorer::score_stocks(std::span<const std::string> tickers, Date asof) const {
    std::vector<StockScore> out;
    out.reserve(tickers.size());
    for (const auto& t : tickers) out.push_back(score_stock(t, asof));
    return out;
}

std::variant<EtfScore, EtfExclusion> Scorer::score_etf_with(
    const PdfSnapshot& pdf, const std::string& etf, Date asof,
    std::vector<std::pair<std::string, StockScore>>* memo) const {
    std::vector<ComponentScore> comps;
    comps.reserve(pdf.holdings.size());
    for (const auto& h : pdf.holdings) {
        std::optional<double> score;
        if (memo) {
            auto it = std::lower_bound(memo->begin(), memo->end(), h.ticker,
                                       [](const auto& e, const std::string& k) { return e.first < k; });
            if (it == memo->end() || it->first != h.ticker) {
                it = memo->insert(it, {h.ticker, score_stock(h.ticker, asof)});
            }
            score = it->second.score;
        } else {
            score = score_stock(h.ticker, asof).score;
        }
        comps.push_back({h.weight, score});
    }
    const auto agg = aggregate_components(comps);
    if (!agg.score || agg.coverage < options_.min_coverage) {
        return EtfExclusion{etf, asof, EtfExclusionReason::LowCoverage, agg.coverage};
    }
    return EtfScore{etf, asof, *agg.score, agg.coverage, pdf.holdings.size()};
}

std::variant<EtfScore, EtfExclusion> Scorer::score_etf(const std::string& etf, Date asof) const {
    const PdfSnapshot& pdf = store_.pdf_asof(etf, asof);
    return score_etf_with(pdf, etf, asof, nullptr);
}

UniverseScores Scorer::score_universe(std::span<const std::string> etfs, Date asof) const {
    UniverseScores out;
    std::vector<std::pair<std::string, StockScore>> memo;
    for (const auto& etf : etfs) {
        const auto inception = store_.etf_inception(etf);
        if (inception && asof < *inception) {
            out.excluded.push_back({etf, asof, EtfExclusionReason::NotListed, 0.0});
            continue;
        }
        const PdfSnapshot* pdf = nullptr;
        try {
            pdf = &store_.pdf_asof(etf, asof);
        } catch (const MissingDataError&) {
            out.excluded.push_back({etf, asof, EtfExclusionReason::NoPdf, 0.0});
            continue;
        }
        if (asof.serial() - pdf->date.serial() > options_.max_pdf_age_days) {
            out.excluded.push_back({etf, asof, EtfExclusionReason::StalePdf, 0.0});
            continue;
        }
        auto r = score_etf_with(*pdf, etf, asof, &memo);
        if (auto* s = std::get_if<EtfScore>(&r)) {
            out.ranked.push_back(std::move(*s));
        } else {
            out.excluded.push_back(std::get<EtfExclusion>(std::move(r)));
        }
    }
    rank_etf_scores(out.ranked);
    if (out.ranked.empty()) spdlog::warn("{}: no valid ETF to score", asof.str());
    return out;
}

}  // namespace etfrank
