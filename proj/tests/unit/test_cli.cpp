#include <doctest.h>

#include <sstream>

#include "etfrank/cli.hpp"
#include "etfrank/error.hpp"
#include "etfrank/synthetic.hpp"
#include "support.hpp"

using namespace etfrank;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult run(std::vector<std::string> args) {
    args.insert(args.begin(), "etfrank");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

struct CliWorld {
    testsupport::TempDir dir;
    SyntheticData data;
    std::string config;

    CliWorld() {
        SyntheticOptions o;
        o.num_tickers = 20;
        o.num_quarters = 16;
        o.num_etfs = 3;
        data = generate_synthetic(o, BusinessCalendar{});
        write_synthetic(data, (dir / "data").string());
        config = (dir / "config.json").string();
        testsupport::write_file(config, R"({
  "paths": {"statements": "data/statements.csv", "prices": "data/prices.csv",
            "pdfs": "data/pdfs.csv", "stock_universe": "data/stocks.csv",
            "etf_universe": "data/etfs.csv", "output": "run"},
  "dates": {"start": ")" + data.bounds.start.str() + R"(", "train_end": ")" +
                                    data.bounds.train_end.str() + R"(", "validation_end": ")" +
                                    data.bounds.validation_end.str() + R"(", "test_end": ")" +
                                    data.bounds.test_end.str() + R"("}
})");
    }
};

}  // namespace

TEST_CASE("exit codes by error family") {
    CHECK(exit_code_for(ConfigError("x")) == kExitConfig);
    CHECK(exit_code_for(std::invalid_argument("x")) == kExitConfig);
    CHECK(exit_code_for(DataError("x")) == kExitData);
    CHECK(exit_code_for(ParseError("f", 3, "x")) == kExitData);
    CHECK(exit_code_for(SchemaError("x")) == kExitData);
    CHECK(exit_code_for(ShapeError("x")) == kExitData);
    CHECK(exit_code_for(NumericError("x")) == kExitNumeric);
    CHECK(exit_code_for(std::runtime_error("x")) == kExitData);
}

TEST_CASE("command line handling") {
    CHECK(run({}).code == kExitConfig);
    CHECK(run({"frobnicate"}).code == kExitConfig);
    CHECK(run({"ingest", "--config", "/nonexistent/config.json"}).code == kExitConfig);
    const auto help = run({"--help"});
    CHECK(help.code == kExitOk);
    CHECK(help.out.find("selftest") != std::string::npos);
}

TEST_CASE("ingest through the command line") {
    CliWorld w;
    const auto r = run({"ingest", "--config", w.config});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("statements: " + std::to_string(w.data.statements.size())) != std::string::npos);
    CHECK(r.out.find("prices: " + std::to_string(w.data.prices.size())) != std::string::npos);
    CHECK(std::filesystem::exists(w.dir / "run/store/prices.csv"));
    CHECK_FALSE(std::filesystem::exists(w.dir / "run/.lock"));

    SUBCASE("an existing lock refuses to run") {
        testsupport::write_file(w.dir / "run/.lock", "");
        const auto locked = run({"ingest", "--config", w.config});
        CHECK(locked.code == kExitConfig);
        CHECK(locked.err.find("lock") != std::string::npos);
    }
    SUBCASE("bad overrides and keys are configuration errors") {
        CHECK(run({"ingest", "--config", w.config, "--set", "train.maxiterr=3"}).code == kExitConfig);
        CHECK(run({"ingest", "--config", w.config, "--set", "paths.prices=\"data/none.csv\""}).code == kExitConfig);
    }
    SUBCASE("malformed input data") {
        testsupport::write_file(w.dir / "data/prices.csv", "ticker,date,close,volume\nAAA,2010-01-04,abc,5\n");
        const auto bad = run({"ingest", "--config", w.config});
        CHECK(bad.code == kExitData);
        CHECK(bad.err.find("prices.csv:2") != std::string::npos);
    }
    SUBCASE("scoring without a checkpoint") {
        const auto r2 = run({"score", "--config", w.config});
        CHECK(r2.code == kExitConfig);
        CHECK(r2.err.find("checkpoint") != std::string::npos);
    }
}
