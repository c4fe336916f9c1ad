#include "etfrank/pipeline.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <fstream>
#include <set>

#include "etfrank/checkpoint.hpp"
#include "etfrank/csv.hpp"
#include "etfrank/error.hpp"
#include "etfrank/features.hpp"
#include "etfrank/nn.hpp"
#include "etfrank/report.hpp"
#include "etfrank/scoring.hpp"

namespace etfrank {

namespace fs = std::filesystem;

OutputLock::OutputLock(const fs::path& dir) : path_(dir / ".lock") {
    fs::create_directories(dir);
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f) {
        if (errno == EEXIST) {
            throw ConfigError("output directory " + dir.string() + " is locked by another run (" + path_.string() + ")");
        }
        throw ConfigError("cannot create lock file " + path_.string());
    }
    std::fclose(f);
}

OutputLock::~OutputLock() {
    std::error_code ec;
    fs::remove(path_, ec);
}

namespace {

BusinessCalendar calendar_for(const RunConfig& cfg) {
    return cfg.paths.holidays ? BusinessCalendar::from_holiday_file(cfg.paths.holidays->string()) : BusinessCalendar{};
}

std::vector<std::string> stock_universe(const PitStore& store) {
    if (!store.stock_universe().empty()) return store.stock_universe();
    std::set<std::string> tickers;
    for (const auto& r : store.all_statements()) tickers.insert(r.ticker);
    return {tickers.begin(), tickers.end()};
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    return out;
}

std::vector<Date> backtest_dates(const RunConfig& cfg, const PitStore& store) {
    const auto cal = RebalanceCalendar::between(cfg.dates.start, cfg.dates.test_end, store.calendar());
    std::vector<Date> out;
    for (Date t : split_dates(cal, Split::Test, cfg.dates)) {
        if (cfg.effective_backtest_start() <= t) out.push_back(t);
    }
    return out;
}

BacktestGroup run_group(const std::string& name, const std::string& title, const RankedByDate& all_ranked,
                        const std::vector<Date>& dates, const std::vector<PortfolioSpec>& specs,
                        const PitStore& store, const RunConfig& cfg,
                        const std::optional<std::vector<ValuePoint>>& index) {
    RankedByDate ranked;
    std::vector<std::string> gaps;
    for (Date t : dates) {
        auto it = all_ranked.find(t);
        if (it == all_ranked.end() || it->second.empty()) {
            gaps.push_back(t.str());
        } else {
            ranked.emplace(t, it->second);
        }
    }
    if (!gaps.empty()) {
        std::string list;
        for (const auto& g : gaps) list += (list.empty() ? "" : ", ") + g;
        throw DataError(name + " backtest: no scores at rebalance dates " + list);
    }
    BacktestOptions opts{cfg.cost_per_turnover};
    const auto ew = run_backtest(ranked, PortfolioSpec::top_percent(100), store, cfg.dates.test_end, "EW", opts);
    std::vector<BacktestReport> reports;
    for (const auto& spec : specs) reports.push_back(run_backtest(ranked, spec, store, cfg.dates.test_end, {}, opts));
    BacktestGroup g;
    g.name = name;
    g.dir = cfg.report_dir() / name;
    g.table = compare_baselines(ew, reports, index, cfg.index_name);
    write_group_report(g.dir.string(), title, g.table);
    return g;
}

}  // namespace

IngestSummary cmd_ingest(const RunConfig& cfg) {
    cfg.validate();
    PitStore store(calendar_for(cfg));
    IngestSummary s;
    s.statements = store.ingest_statements(cfg.paths.statements.string());
    s.prices = store.ingest_prices(cfg.paths.prices.string());
    if (cfg.paths.pdfs) s.pdf_rows = store.ingest_pdfs(cfg.paths.pdfs->string());
    if (cfg.paths.stock_universe) {
        store.load_stock_universe(cfg.paths.stock_universe->string());
    } else {
        store.set_stock_universe(stock_universe(store));
    }
    if (cfg.paths.etf_universe) store.load_etf_universe(cfg.paths.etf_universe->string());
    s.stocks = store.stock_universe().size();
    s.etfs = store.etf_universe().size();
    s.store_dir = cfg.store_dir();
    store.export_to(s.store_dir.string());
    return s;
}

PitStore open_store(const RunConfig& cfg) { return PitStore::load_from(cfg.store_dir().string()); }

fs::path default_checkpoint_path(const RunConfig& cfg) { return cfg.model_dir() / "checkpoint.json"; }

TrainSummary cmd_train(const RunConfig& cfg) {
    cfg.validate();
    const PitStore store = open_store(cfg);
    const FeatureContext ctx = FeatureContext::fit(store, cfg.dates.train_end, cfg.clip_bound, cfg.max_imputed_frac);
    const auto cal = RebalanceCalendar::between(cfg.dates.start, cfg.dates.test_end, store.calendar());
    const auto universe = stock_universe(store);
    const auto train_samples = build_dataset(store, ctx, cal, universe, Split::Train, cfg.dates);
    const auto val_samples = build_dataset(store, ctx, cal, universe, Split::Validation, cfg.dates);
    spdlog::info("training on {} samples, validating on {}", train_samples.size(), val_samples.size());

    const auto result = nn::train(nn::Dataset::from_samples(train_samples), nn::Dataset::from_samples(val_samples),
                                  cfg.train, cfg.seed);

    fs::create_directories(cfg.model_dir());
    write_dataset_csv((cfg.model_dir() / "train_dataset.csv").string(), (cfg.model_dir() / "train_mask.csv").string(),
                      train_samples);
    write_dataset_csv((cfg.model_dir() / "validation_dataset.csv").string(),
                      (cfg.model_dir() / "validation_mask.csv").string(), val_samples);

    TrainSummary s;
    s.checkpoint = default_checkpoint_path(cfg);
    s.log = cfg.model_dir() / "training_log.csv";
    save_checkpoint(s.checkpoint.string(),
                    CheckpointFile{result.best, cfg.train, ctx, train_config_hash(cfg.train, cfg.seed)});
    {
        auto log = open_out(s.log);
        log << "iteration,train_loss,val_metric\n";
        for (const auto& e : result.evaluations) {
            log << e.iteration << ',' << format_number(e.train_loss) << ',' << format_number(e.val_metric) << '\n';
        }
    }
    s.iteration = result.best.iteration;
    s.metric_value = result.best.metric_value;
    s.train_samples = train_samples.size();
    s.validation_samples = val_samples.size();
    s.evaluations = result.evaluations.size();
    return s;
}

ScoreSummary cmd_score(const RunConfig& cfg, const fs::path& checkpoint) {
    cfg.validate();
    const PitStore store = open_store(cfg);
    const CheckpointFile ck = load_checkpoint(checkpoint.string(), kNumFeatures);
    const auto cal = RebalanceCalendar::between(cfg.dates.start, cfg.dates.test_end, store.calendar());
    const auto universe = stock_universe(store);
    std::vector<std::string> etfs;
    for (const auto& e : store.etf_universe()) etfs.push_back(e.etf);

    const Scorer scorer(store, ck.checkpoint.params, ck.features, {cfg.min_coverage, cfg.max_pdf_age_days});
    fs::create_directories(cfg.scores_dir());
    auto stocks_out = open_out(cfg.scores_dir() / "stock_scores.csv");
    auto etfs_out = open_out(cfg.scores_dir() / "etf_scores.csv");
    auto excl_out = open_out(cfg.scores_dir() / "etf_exclusions.csv");
    stocks_out << "asof,ticker,score,covered\n";
    etfs_out << "asof,etf,score,coverage,n_components\n";
    excl_out << "asof,etf,reason,coverage\n";

    ScoreSummary s;
    for (Date t : split_dates(cal, Split::Test, cfg.dates)) {
        ++s.dates;
        for (const auto& sc : scorer.score_stocks(universe, t)) {
            stocks_out << t.str() << ',' << sc.ticker << ',' << (sc.score ? format_number(*sc.score) : std::string())
                       << ',' << (sc.covered() ? 1 : 0) << '\n';
            ++s.stock_rows;
        }
        if (etfs.empty()) continue;
        const auto u = scorer.score_universe(etfs, t);
        for (const auto& e : u.ranked) {
            etfs_out << t.str() << ',' << e.etf << ',' << format_number(e.score) << ',' << format_number(e.coverage)
                     << ',' << e.n_components << '\n';
            ++s.etf_rows;
        }
        for (const auto& x : u.excluded) {
            excl_out << t.str() << ',' << x.etf << ',' << exclusion_reason_name(x.reason) << ','
                     << format_number(x.coverage) << '\n';
            ++s.exclusions;
        }
    }
    return s;
}

RankedByDate read_stock_rankings(const fs::path& path) {
    const CsvTable t = read_csv(path.string());
    const auto c_asof = t.require_column("asof");
    const auto c_ticker = t.require_column("ticker");
    const auto c_score = t.require_column("score");
    const auto c_cov = t.require_column("covered");
    RankedByDate out;
    for (const auto& row : t.rows) {
        if (row.fields[c_cov] != "1") continue;
        try {
            out[Date::parse(row.fields[c_asof])].push_back({row.fields[c_ticker], parse_number(row.fields[c_score])});
        } catch (const std::invalid_argument& e) {
            throw ParseError(t.source, row.line, e.what());
        }
    }
    for (auto& [d, v] : out) {
        std::sort(v.begin(), v.end(), [](const ScoredInstrument& a, const ScoredInstrument& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.id < b.id;
        });
    }
    return out;
}

RankedByDate read_etf_rankings(const fs::path& path) {
    const CsvTable t = read_csv(path.string());
    const auto c_asof = t.require_column("asof");
    const auto c_etf = t.require_column("etf");
    const auto c_score = t.require_column("score");
    RankedByDate out;
    for (const auto& row : t.rows) {
        try {
            out[Date::parse(row.fields[c_asof])].push_back({row.fields[c_etf], parse_number(row.fields[c_score])});
        } catch (const std::invalid_argument& e) {
            throw ParseError(t.source, row.line, e.what());
        }
    }
    for (auto& [d, v] : out) {
        std::sort(v.begin(), v.end(), [](const ScoredInstrument& a, const ScoredInstrument& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.id < b.id;
        });
    }
    return out;
}

BacktestSummary cmd_backtest(const RunConfig& cfg) {
    cfg.validate();
    const PitStore store = open_store(cfg);
    const auto dates = backtest_dates(cfg, store);
    if (dates.empty()) throw ConfigError("no rebalance date inside the backtest range");
    std::optional<std::vector<ValuePoint>> index;
    if (cfg.paths.index) index = read_index_series(cfg.paths.index->string());

    const fs::path stock_scores = cfg.scores_dir() / "stock_scores.csv";
    if (!fs::exists(stock_scores)) throw DataError("missing " + stock_scores.string() + " (run score first)");

    BacktestSummary s;
    s.groups.push_back(run_group("stocks", "Individual stocks", read_stock_rankings(stock_scores), dates,
                                 cfg.stock_portfolios, store, cfg, index));
    const fs::path etf_scores = cfg.scores_dir() / "etf_scores.csv";
    if (!store.etf_universe().empty() && fs::exists(etf_scores)) {
        s.groups.push_back(run_group("etfs", "ETFs", read_etf_rankings(etf_scores), dates, cfg.etf_portfolios, store,
                                     cfg, index));
    }
    return s;
}

std::string cmd_report(const RunConfig& cfg) {
    std::string out;
    const std::pair<const char*, const char*> groups[] = {{"stocks", "Individual stocks"}, {"etfs", "ETFs"}};
    for (const auto& [name, title] : groups) {
        const fs::path dir = cfg.report_dir() / name;
        if (!fs::exists(dir / "summary.csv")) continue;
        const std::string md = render_report_from_dir(dir.string(), title);
        open_out(dir / "report.md") << md;
        out += md + "\n";
    }
    if (out.empty()) throw DataError("no report data under " + cfg.report_dir().string() + " (run backtest first)");
    return out;
}

// ---------------------------------------------------------------------------
// Selftest

nn::TrainConfig SelftestOptions::reduced_train_config() {
    nn::TrainConfig c;
    c.maxiter = 5000;
    c.miniter = 2500;
    c.batch_size = 128;
    c.save_interval = 250;
    c.adam.learning_rate = 1e-3;
    return c;
}

SelftestResult run_selftest(const SelftestOptions& o) {
    const BusinessCalendar bd;
    const fs::path root = o.output_dir;
    fs::create_directories(root);
    const SyntheticData data = generate_synthetic(o.data, bd);
    write_synthetic(data, (root / "data").string());

    nlohmann::ordered_json j;
    j["paths"] = {{"statements", "data/statements.csv"}, {"prices", "data/prices.csv"},
                  {"pdfs", "data/pdfs.csv"},             {"stock_universe", "data/stocks.csv"},
                  {"etf_universe", "data/etfs.csv"},     {"index", "data/index.csv"},
                  {"output", "run"}};
    j["dates"] = {{"start", data.bounds.start.str()},
                  {"train_end", data.bounds.train_end.str()},
                  {"validation_end", data.bounds.validation_end.str()},
                  {"test_end", data.bounds.test_end.str()}};
    j["train"] = {{"maxiter", o.train.maxiter},
                  {"miniter", o.train.miniter},
                  {"batch_size", o.train.batch_size},
                  {"save_interval", o.train.save_interval},
                  {"learning_rate", o.train.adam.learning_rate},
                  {"selection_metric", std::string(nn::metric_name(o.train.selection_metric))}};
    j["portfolios"] = {
        {"stocks", {{{"top_k_percent", 80}}, {{"top_k_percent", 60}}, {{"top_k_percent", 40}}, {{"top_k_percent", 20}}}},
        {"etfs", {{{"top_k_count", 8}}, {{"top_k_count", 7}}, {{"top_k_count", 6}}, {{"top_k_count", 5}}, {{"top_k_count", 4}}}}};
    j["seed"] = o.seed;
    j["index_name"] = "Index";
    SelftestResult r;
    r.config_path = root / "config.json";
    open_out(r.config_path) << j.dump(2) << '\n';

    const RunConfig cfg = RunConfig::load(r.config_path.string());
    cfg.validate();
    r.run_dir = cfg.paths.output;
    OutputLock lock(cfg.paths.output);
    cmd_ingest(cfg);
    const auto trained = cmd_train(cfg);
    cmd_score(cfg, trained.checkpoint);
    const auto bt = cmd_backtest(cfg);

    r.validation_accuracy = trained.metric_value;
    const auto& stocks = bt.groups.front().table;
    auto total_return = [&](const std::string& name) {
        for (const auto& s : stocks.series) {
            if (s.name == name) return s.daily.back().value / s.daily.front().value - 1.0;
        }
        throw DataError("selftest: no portfolio named " + name);
    };
    r.top20_total_return = total_return("Top 20%");
    r.ew_total_return = total_return("EW");
    r.accuracy_ok = o.train.selection_metric == nn::SelectionMetric::ValidationAccuracy &&
                    r.validation_accuracy >= kSelftestMinAccuracy;
    r.ordering_ok = r.top20_total_return > r.ew_total_return;
    return r;
}

}  // namespace etfrank
