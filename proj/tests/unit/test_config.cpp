#include <doctest.h>

#include "etfrank/config.hpp"
#include "etfrank/error.hpp"
#include "support.hpp"

using namespace etfrank;
using testsupport::D;

namespace {

struct ConfigDir {
    testsupport::TempDir dir;
    ConfigDir() {
        testsupport::write_file(dir / "data/statements.csv", "x\n");
        testsupport::write_file(dir / "data/prices.csv", "x\n");
        testsupport::write_file(dir / "data/pdfs.csv", "x\n");
        testsupport::write_file(dir / "data/etfs.csv", "x\n");
    }
    RunConfig parse(const std::string& body, const std::vector<std::string>& overrides = {}) const {
        return RunConfig::from_json_text(body, dir.path(), overrides);
    }
};

const std::string kMinimal = R"({"paths": {"statements": "data/statements.csv",
                                           "prices": "data/prices.csv", "output": "out"}})";

}  // namespace

TEST_CASE("defaults") {
    const ConfigDir c;
    const RunConfig cfg = c.parse(kMinimal);
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.train.maxiter == 100000);
    CHECK(cfg.train.miniter == 50000);
    CHECK(cfg.train.batch_size == 128);
    CHECK(cfg.train.save_interval == 1000);
    CHECK(cfg.train.adam.learning_rate == 0.00025);
    CHECK(cfg.train.adam.beta1 == 0.9);
    CHECK(cfg.train.adam.beta2 == 0.999);
    CHECK(cfg.train.adam.epsilon == 1e-8);
    CHECK(cfg.train.selection_metric == nn::SelectionMetric::ValidationAccuracy);
    CHECK(cfg.dates.start == D("2002-03-01"));
    CHECK(cfg.dates.train_end == D("2009-03-31"));
    CHECK(cfg.dates.validation_end == D("2012-03-30"));
    CHECK(cfg.dates.test_end == D("2022-04-29"));
    CHECK(cfg.effective_backtest_start() == D("2012-03-30"));
    CHECK(cfg.stock_portfolios.size() == 4);
    CHECK(cfg.stock_portfolios.back() == PortfolioSpec::top_percent(20));
    CHECK(cfg.etf_portfolios.size() == 5);
    CHECK(cfg.etf_portfolios.front() == PortfolioSpec::top_count(8));
    CHECK(cfg.min_coverage == 0.8);
    CHECK(cfg.max_pdf_age_days == 95);
    CHECK(cfg.paths.statements == (c.dir / "data/statements.csv").lexically_normal());
    CHECK(cfg.paths.output == (c.dir / "out").lexically_normal());
    CHECK(cfg.store_dir() == cfg.paths.output / "store");
}

TEST_CASE("overrides") {
    const ConfigDir c;
    const RunConfig cfg =
        c.parse(kMinimal, {"train.maxiter=500", "train.miniter=100", "dates.backtest_start=\"2020-06-30\"",
                           "index_name=Benchmark", "train.selection_metric=validation_loss", "seed=7"});
    CHECK(cfg.train.maxiter == 500);
    CHECK(cfg.train.miniter == 100);
    CHECK(cfg.effective_backtest_start() == D("2020-06-30"));
    CHECK(cfg.index_name == "Benchmark");
    CHECK(cfg.train.selection_metric == nn::SelectionMetric::ValidationLoss);
    CHECK(cfg.seed == 7);
    CHECK_NOTHROW(cfg.validate());

    CHECK_THROWS_AS(c.parse(kMinimal, {"no-equals-sign"}), ConfigError);
    CHECK_THROWS_AS(c.parse(kMinimal, {"train..maxiter=3"}), ConfigError);
}

TEST_CASE("portfolio lists") {
    const ConfigDir c;
    const RunConfig cfg =
        c.parse(kMinimal, {R"(portfolios.etfs=[{"top_k_count": 3}, {"top_k_percent": 50}])"});
    REQUIRE(cfg.etf_portfolios.size() == 2);
    CHECK(cfg.etf_portfolios[0] == PortfolioSpec::top_count(3));
    CHECK(cfg.etf_portfolios[1] == PortfolioSpec::top_percent(50));
    CHECK_THROWS_AS(c.parse(kMinimal, {R"(portfolios.etfs=[{"top_k_count": 3, "top_k_percent": 5}])"}), ConfigError);
    CHECK_THROWS_AS(c.parse(kMinimal, {R"(portfolios.etfs=[{}])"}), ConfigError);
    CHECK_THROWS_AS(c.parse(kMinimal, {R"(portfolios.etfs=[{"top_k_count": 0}])"}), ConfigError);
    CHECK_THROWS_AS(c.parse(kMinimal, {R"(portfolios.stocks={"top_k_count": 2})"}), ConfigError);
}

TEST_CASE("rejected configs") {
    const ConfigDir c;
    CHECK_THROWS_AS(c.parse("{"), ConfigError);
    CHECK_THROWS_AS(c.parse(R"({"paths": {"statements": "data/statements.csv", "output": "out"}})"), ConfigError);
    CHECK_THROWS_WITH_AS(c.parse(kMinimal, {"trian.maxiter=5"}), "unknown config key 'trian'", ConfigError);
    CHECK_THROWS_WITH_AS(c.parse(kMinimal, {"train.max_iter=5"}), "unknown config key 'train.max_iter'",
                         ConfigError);
    CHECK_THROWS_AS(c.parse(kMinimal, {"dates.start=\"2002-13-01\""}), ConfigError);
    CHECK_THROWS_AS(c.parse(kMinimal, {"train.selection_metric=f1"}), ConfigError);
    CHECK_THROWS_AS(c.parse(kMinimal, {"train.maxiter=\"many\""}), ConfigError);

    auto invalid = [&](const std::vector<std::string>& o) {
        const RunConfig cfg = c.parse(kMinimal, o);
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    };
    invalid({"paths.prices=\"data/nope.csv\""});
    invalid({"paths.pdfs=\"data/pdfs.csv\""});
    invalid({"dates.train_end=\"2001-12-31\""});
    invalid({"dates.validation_end=\"2009-03-31\""});
    invalid({"dates.backtest_start=\"2011-12-30\""});
    invalid({"dates.backtest_start=\"2023-01-03\""});
    invalid({"train.miniter=200000"});
    invalid({"train.batch_size=0"});
    invalid({"min_coverage=0"});
    invalid({"min_coverage=1.5"});
    invalid({"max_pdf_age_days=-1"});
    invalid({"clip_bound=0"});
    invalid({"cost_per_turnover=1"});

    const RunConfig both = c.parse(kMinimal, {"paths.pdfs=\"data/pdfs.csv\"", "paths.etf_universe=\"data/etfs.csv\""});
    CHECK_NOTHROW(both.validate());
}

TEST_CASE("loading from a file resolves paths against its directory") {
    const ConfigDir c;
    testsupport::write_file(c.dir / "config.json", kMinimal);
    const RunConfig cfg = RunConfig::load((c.dir / "config.json").string());
    CHECK(cfg.paths.prices == (c.dir / "data/prices.csv").lexically_normal());
    CHECK_THROWS_AS(RunConfig::load((c.dir / "absent.json").string()), ConfigError);
}

TEST_CASE("shipped example configs parse") {
    for (const char* name : {"classic", "stocks", "exotic"}) {
        CAPTURE(name);
        const std::filesystem::path path = std::filesystem::path(ETFRANK_SOURCE_DIR) / "configs" / (std::string(name) + ".json");
        const RunConfig cfg = RunConfig::load(path.string());
        CHECK(cfg.paths.output.filename() == name);
        if (std::string(name) == "exotic") {
            CHECK(cfg.effective_backtest_start() == D("2020-06-30"));
            CHECK(cfg.etf_portfolios.back() == PortfolioSpec::top_percent(20));
        }
        if (std::string(name) == "stocks") CHECK_FALSE(cfg.paths.pdfs.has_value());
    }
}
