#include "etfrank/cli.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <ostream>

#include "etfrank/checkpoint.hpp"
#include "etfrank/error.hpp"
#include "etfrank/nn.hpp"
#include "etfrank/pipeline.hpp"

namespace etfrank {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& e) noexcept {
    if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
    if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
    if (dynamic_cast<const std::invalid_argument*>(&e)) return kExitConfig;
    // Data, shape and I/O failures all mean the inputs cannot be processed.
    return kExitData;
}

void configure_logging_from_env() {
    static bool installed = false;
    if (!installed) {
        auto logger = spdlog::stderr_color_mt("etfrank");
        spdlog::set_default_logger(logger);
        installed = true;
    }
    spdlog::level::level_enum level = spdlog::level::info;
    if (const char* v = std::getenv("ETFRANK_LOG"); v && *v) {
        level = spdlog::level::from_str(v);
        if (level == spdlog::level::off && std::string(v) != "off") level = spdlog::level::info;
    }
    spdlog::set_level(level);
}

namespace {

struct CommonArgs {
    std::string config;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* sub, CommonArgs& a) {
    sub->add_option("-c,--config", a.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("-s,--set", a.overrides, "Override a config key, e.g. --set train.maxiter=2000");
}

RunConfig load_valid(const CommonArgs& a) {
    RunConfig cfg = RunConfig::load(a.config, a.overrides);
    cfg.validate();
    return cfg;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fundamental-data stock and ETF ranking pipeline", "etfrank"};
    app.require_subcommand(1);

    CommonArgs ingest_args, train_args, score_args, backtest_args, report_args;
    std::string checkpoint;
    auto* ingest = app.add_subcommand("ingest", "Load CSV inputs into the point-in-time store");
    add_common(ingest, ingest_args);
    auto* train = app.add_subcommand("train", "Build datasets and train the classifier");
    add_common(train, train_args);
    auto* score = app.add_subcommand("score", "Score stocks and ETFs at every test rebalance date");
    add_common(score, score_args);
    score->add_option("--checkpoint", checkpoint, "Checkpoint to score with (default: output/model/checkpoint.json)");
    auto* backtest = app.add_subcommand("backtest", "Backtest every portfolio spec against the baselines");
    add_common(backtest, backtest_args);
    auto* report = app.add_subcommand("report", "Re-render report.md files from the backtest CSVs");
    add_common(report, report_args);

    std::string selftest_dir = "selftest";
    std::uint64_t selftest_seed = 42;
    auto* selftest = app.add_subcommand("selftest", "Run the synthetic end-to-end fixture");
    selftest->add_option("-o,--output", selftest_dir, "Directory for generated data and outputs");
    selftest->add_option("--seed", selftest_seed, "Training seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    configure_logging_from_env();
    try {
        if (*ingest) {
            const RunConfig cfg = load_valid(ingest_args);
            OutputLock lock(cfg.paths.output);
            const auto s = cmd_ingest(cfg);
            out << "statements: " << s.statements << "\nprices: " << s.prices << "\npdf rows: " << s.pdf_rows
                << "\nstocks: " << s.stocks << "\netfs: " << s.etfs << "\nstore: " << s.store_dir.string() << "\n";
        } else if (*train) {
            const RunConfig cfg = load_valid(train_args);
            OutputLock lock(cfg.paths.output);
            const auto s = cmd_train(cfg);
            out << "train samples: " << s.train_samples << "\nvalidation samples: " << s.validation_samples
                << "\nevaluations: " << s.evaluations << "\nselected iteration: " << s.iteration << "\n"
                << nn::metric_name(cfg.train.selection_metric) << ": " << s.metric_value
                << "\ncheckpoint: " << s.checkpoint.string() << "\n";
        } else if (*score) {
            const RunConfig cfg = load_valid(score_args);
            const fs::path ck = checkpoint.empty() ? default_checkpoint_path(cfg) : fs::path(checkpoint);
            if (!fs::exists(ck)) throw ConfigError("checkpoint '" + ck.string() + "' does not exist");
            OutputLock lock(cfg.paths.output);
            const auto s = cmd_score(cfg, ck);
            out << "dates: " << s.dates << "\nstock rows: " << s.stock_rows << "\netf rows: " << s.etf_rows
                << "\netf exclusions: " << s.exclusions << "\n";
        } else if (*backtest) {
            const RunConfig cfg = load_valid(backtest_args);
            OutputLock lock(cfg.paths.output);
            const auto s = cmd_backtest(cfg);
            for (const auto& g : s.groups) {
                out << "[" << g.name << "] " << g.dir.string() << "\n";
                for (const auto& row : g.table.rows) {
                    out << "  " << row.portfolio << ": return " << row.annual_return_pct << "% vol " << row.volatility_pct
                        << "%";
                    if (row.sharpe) out << " sharpe " << *row.sharpe;
                    out << "\n";
                }
            }
        } else if (*report) {
            const RunConfig cfg = load_valid(report_args);
            OutputLock lock(cfg.paths.output);
            out << cmd_report(cfg);
        } else if (*selftest) {
            SelftestOptions o;
            o.output_dir = selftest_dir;
            o.seed = selftest_seed;
            const auto r = run_selftest(o);
            out << "validation accuracy: " << r.validation_accuracy << " (required >= " << kSelftestMinAccuracy
                << ")\nTop 20% total return: " << r.top20_total_return << "\nEW total return: " << r.ew_total_return
                << "\nresult: " << (r.passed() ? "PASS" : "FAIL") << "\n";
            return r.passed() ? kExitOk : kExitSelftestFailed;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
    return kExitOk;
}

}  // namespace etfrank
