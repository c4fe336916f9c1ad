#include "etfrank/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "etfrank/csv.hpp"
#include "etfrank/error.hpp"

namespace etfrank {

std::string_view label_name(Label l) { return l == Label::Up ? "up" : "down"; }

std::string_view reject_reason_name(RejectReason r) {
    return r == RejectReason::InsufficientHistory ? "insufficient-history" : "too-sparse";
}

std::string_view split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Validation: return "validation";
        case Split::Test: return "test";
    }
    return "?";
}

FeatureContext FeatureContext::fit(const PitStore& store, Date train_end, double clip_bound,
                                   double max_imputed_frac) {
    FeatureContext ctx;
    ctx.clip_bound = clip_bound;
    ctx.max_imputed_frac = max_imputed_frac;
    std::array<std::vector<double>, kNumFeatures> mags;
    for (const auto& r : store.all_statements()) {
        if (!(r.available_from < train_end)) continue;
        for (std::size_t i = 0; i < kNumFeatures; ++i) {
            if (r.features[i]) mags[i].push_back(std::abs(*r.features[i]));
        }
    }
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
        auto& m = mags[i];
        if (m.empty()) continue;
        std::sort(m.begin(), m.end());
        const std::size_t k = m.size();
        const double median = k % 2 ? m[k / 2] : 0.5 * (m[k / 2 - 1] + m[k / 2]);
        ctx.eps_den[i] = 1e-6 * median;
    }
    return ctx;
}

PctChange pct_change(double curr, double prev, double eps_den, double clip_bound) {
    if (prev == 0.0 || std::abs(prev) < eps_den) return {0.0, true};
    const double v = (curr - prev) / prev;
    if (v > clip_bound) return {clip_bound, true};
    if (v < -clip_bound) return {-clip_bound, true};
    return {v, false};
}

std::size_t FeatureWindow::masked_count() const {
    return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto m) { return m != 0; }));
}

WindowResult window_from_records(std::span<const StatementRecord> records, const FeatureContext& ctx,
                                 const std::string& ticker, Date asof) {
    if (records.size() < kWindowQuarters + 1) return WindowRejection{RejectReason::InsufficientHistory};
    records = records.last(kWindowQuarters + 1);

    FeatureWindow w;
    w.ticker = ticker;
    w.asof = asof;
    w.num_features = kNumFeatures;
    w.values.assign(kWindowQuarters * kNumFeatures, 0.0);
    w.mask.assign(kWindowQuarters * kNumFeatures, 0);
    for (std::size_t q = 0; q < kWindowQuarters; ++q) {
        const auto& prev = records[q].features;
        const auto& curr = records[q + 1].features;
        for (std::size_t i = 0; i < kNumFeatures; ++i) {
            const std::size_t k = q * kNumFeatures + i;
            if (!prev[i] || !curr[i]) {
                w.mask[k] = 1;
                continue;
            }
            const auto pc = pct_change(*curr[i], *prev[i], ctx.eps_den[i], ctx.clip_bound);
            w.values[k] = pc.value;
            w.mask[k] = pc.masked ? 1 : 0;
        }
    }
    const double frac = static_cast<double>(w.masked_count()) / static_cast<double>(w.mask.size());
    if (frac > ctx.max_imputed_frac) return WindowRejection{RejectReason::TooSparse};
    return w;
}

WindowResult build_window(const PitStore& store, const FeatureContext& ctx, const std::string& ticker, Date asof) {
    const auto records = store.statements_asof(ticker, asof, kWindowQuarters + 1);
    return window_from_records(records, ctx, ticker, asof);
}

std::vector<Label> neutralize_labels(std::span<const ReturnObservation> xs) {
    if (xs.size() < 2) throw DataError("degenerate cross-section: need at least 2 samples");
    for (const auto& x : xs) {
        if (!std::isfinite(x.fwd_return)) throw DataError("non-finite forward return for " + x.ticker);
    }
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (xs[a].fwd_return != xs[b].fwd_return) return xs[a].fwd_return > xs[b].fwd_return;
        if (xs[a].ticker != xs[b].ticker) return xs[a].ticker < xs[b].ticker;
        return a < b;
    });
    const std::size_t n_up = (xs.size() + 1) / 2;
    std::vector<Label> labels(xs.size(), Label::Down);
    for (std::size_t r = 0; r < n_up; ++r) labels[order[r]] = Label::Up;
    return labels;
}

std::vector<Date> split_dates(const RebalanceCalendar& calendar, Split split, const SplitBoundaries& b) {
    std::vector<Date> out;
    for (Date t : calendar.dates()) {
        bool in = false;
        switch (split) {
            case Split::Train: in = b.start <= t && t < b.train_end; break;
            case Split::Validation: in = b.train_end <= t && t < b.validation_end; break;
            case Split::Test: in = b.validation_end <= t && t <= b.test_end; break;
        }
        if (in) out.push_back(t);
    }
    return out;
}

Date liquidity_window_start(Date t, const BusinessCalendar& bd) {
    const Date q_end = calendar_quarter_end(t);
    const Date prev_q_end = Date(q_end.year(), q_end.month() - 2, 1).plus_days(-1);
    return bd.last_business_day_of_month(prev_q_end.year(), prev_q_end.month());
}

std::vector<LabeledSample> build_cross_section(const PitStore& store, const FeatureContext& ctx,
                                               std::span<const std::string> universe, Date t, Date t_next) {
    const Date ws = liquidity_window_start(t, store.calendar());
    std::vector<LabeledSample> samples;
    std::vector<ReturnObservation> obs;
    for (const auto& ticker : universe) {
        if (!store.is_valid_stock(ticker, ws, t)) continue;
        auto w = build_window(store, ctx, ticker, t);
        auto* window = std::get_if<FeatureWindow>(&w);
        if (!window) continue;
        double fwd = 0.0;
        try {
            fwd = store.forward_return(ticker, t, t_next);
        } catch (const MissingDataError&) {
            continue;
        }
        obs.push_back({ticker, fwd});
        samples.push_back({std::move(*window), Label::Down, fwd});
    }
    if (samples.size() < 2) return {};
    const auto labels = neutralize_labels(obs);
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i].label = labels[i];
    return samples;
}

std::vector<LabeledSample> build_dataset(const PitStore& store, const FeatureContext& ctx,
                                         const RebalanceCalendar& calendar, std::span<const std::string> universe,
                                         Split split, const SplitBoundaries& bounds) {
    std::vector<LabeledSample> out;
    for (Date t : split_dates(calendar, split, bounds)) {
        const auto t_next = calendar.next(t);
        if (!t_next) continue;
        auto xs = build_cross_section(store, ctx, universe, t, *t_next);
        std::move(xs.begin(), xs.end(), std::back_inserter(out));
    }
    if (out.empty()) {
        throw ConfigError("empty " + std::string(split_name(split)) +
                          " dataset: no rebalance date in range has a buildable cross-section");
    }
    return out;
}

void write_dataset_csv(const std::string& values_path, const std::string& mask_path,
                       std::span<const LabeledSample> samples) {
    std::ofstream values(values_path, std::ios::binary | std::ios::trunc);
    std::ofstream mask(mask_path, std::ios::binary | std::ios::trunc);
    if (!values || !mask) throw DataError("cannot write dataset export");
    const std::size_t f = samples.empty() ? kNumFeatures : samples.front().window.num_features;
    values << "ticker,asof,label,fwd_return";
    mask << "ticker,asof";
    for (std::size_t q = 0; q < kWindowQuarters; ++q) {
        for (std::size_t i = 0; i < f; ++i) {
            values << ",v_" << q << '_' << i;
            mask << ",m_" << q << '_' << i;
        }
    }
    values << '\n';
    mask << '\n';
    for (const auto& s : samples) {
        values << s.window.ticker << ',' << s.window.asof.str() << ',' << label_name(s.label) << ','
               << format_number(s.fwd_return);
        mask << s.window.ticker << ',' << s.window.asof.str();
        for (std::size_t k = 0; k < s.window.values.size(); ++k) {
            values << ',' << format_number(s.window.values[k]);
            mask << ',' << static_cast<int>(s.window.mask[k]);
        }
        values << '\n';
        mask << '\n';
    }
}

}  // namespace etfrank
