#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "etfrank/backtest.hpp"
#include "etfrank/cli.hpp"
#include "etfrank/config.hpp"
#include "etfrank/error.hpp"
#include "etfrank/features.hpp"
#include "etfrank/pipeline.hpp"
#include "etfrank/scoring.hpp"

namespace py = pybind11;
using namespace etfrank;

namespace {

RunConfig prepare(const std::string& config, const std::vector<std::string>& overrides) {
    RunConfig cfg = RunConfig::load(config, overrides);
    cfg.validate();
    return cfg;
}

py::dict table_dict(const ComparisonTable& t) {
    py::list rows;
    for (const auto& r : t.rows) {
        py::dict d;
        d["portfolio"] = r.portfolio;
        d["annual_return_pct"] = r.annual_return_pct;
        d["volatility_pct"] = r.volatility_pct;
        d["sharpe"] = r.sharpe ? py::cast(*r.sharpe) : py::none();
        rows.append(d);
    }
    py::dict out;
    out["rows"] = rows;
    out["warnings"] = t.warnings;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Point-in-time ETF ranking: ingest, train, score, backtest.";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    auto data = py::register_exception<DataError>(m, "DataError", base.ptr());
    py::register_exception<NumericError>(m, "NumericError", base.ptr());
    py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
    (void)data;

    m.def(
        "ingest",
        [](const std::string& config, const std::vector<std::string>& overrides) {
            const RunConfig cfg = prepare(config, overrides);
            IngestSummary s;
            {
                py::gil_scoped_release nogil;
                OutputLock lock(cfg.paths.output);
                s = cmd_ingest(cfg);
            }
            py::dict d;
            d["statements"] = s.statements;
            d["prices"] = s.prices;
            d["pdf_rows"] = s.pdf_rows;
            d["stocks"] = s.stocks;
            d["etfs"] = s.etfs;
            d["store_dir"] = s.store_dir;
            return d;
        },
        py::arg("config"), py::arg("overrides") = std::vector<std::string>{});

    m.def(
        "train",
        [](const std::string& config, const std::vector<std::string>& overrides) {
            const RunConfig cfg = prepare(config, overrides);
            TrainSummary s;
            {
                py::gil_scoped_release nogil;
                OutputLock lock(cfg.paths.output);
                s = cmd_train(cfg);
            }
            py::dict d;
            d["checkpoint"] = s.checkpoint;
            d["log"] = s.log;
            d["iteration"] = s.iteration;
            d["metric_value"] = s.metric_value;
            d["train_samples"] = s.train_samples;
            d["validation_samples"] = s.validation_samples;
            return d;
        },
        py::arg("config"), py::arg("overrides") = std::vector<std::string>{});

    m.def(
        "score",
        [](const std::string& config, std::optional<std::string> checkpoint,
           const std::vector<std::string>& overrides) {
            const RunConfig cfg = prepare(config, overrides);
            const std::filesystem::path ck = checkpoint ? std::filesystem::path(*checkpoint)
                                                        : default_checkpoint_path(cfg);
            if (!std::filesystem::exists(ck)) throw ConfigError("checkpoint '" + ck.string() + "' does not exist");
            ScoreSummary s;
            {
                py::gil_scoped_release nogil;
                OutputLock lock(cfg.paths.output);
                s = cmd_score(cfg, ck);
            }
            py::dict d;
            d["dates"] = s.dates;
            d["stock_rows"] = s.stock_rows;
            d["etf_rows"] = s.etf_rows;
            d["exclusions"] = s.exclusions;
            return d;
        },
        py::arg("config"), py::arg("checkpoint") = py::none(), py::arg("overrides") = std::vector<std::string>{});

    m.def(
        "backtest",
        [](const std::string& config, const std::vector<std::string>& overrides) {
            const RunConfig cfg = prepare(config, overrides);
            BacktestSummary s;
            {
                py::gil_scoped_release nogil;
                OutputLock lock(cfg.paths.output);
                s = cmd_backtest(cfg);
            }
            py::dict out;
            for (const auto& g : s.groups) {
                py::dict d = table_dict(g.table);
                d["dir"] = g.dir;
                out[py::str(g.name)] = d;
            }
            return out;
        },
        py::arg("config"), py::arg("overrides") = std::vector<std::string>{});

    m.def(
        "report",
        [](const std::string& config, const std::vector<std::string>& overrides) {
            return cmd_report(prepare(config, overrides));
        },
        py::arg("config"), py::arg("overrides") = std::vector<std::string>{});

    m.def(
        "selftest",
        [](const std::string& output_dir, std::uint64_t seed) {
            SelftestOptions o;
            o.output_dir = output_dir;
            o.seed = seed;
            SelftestResult r;
            {
                py::gil_scoped_release nogil;
                r = run_selftest(o);
            }
            py::dict d;
            d["validation_accuracy"] = r.validation_accuracy;
            d["top20_total_return"] = r.top20_total_return;
            d["ew_total_return"] = r.ew_total_return;
            d["config_path"] = r.config_path;
            d["run_dir"] = r.run_dir;
            d["passed"] = r.passed();
            return d;
        },
        py::arg("output_dir"), py::arg("seed") = 42,
        "Generate the synthetic market, run the full pipeline on it and check its quality gates.");

    m.def(
        "aggregate",
        [](const std::vector<double>& weights, const std::vector<std::optional<double>>& scores) {
            if (weights.size() != scores.size()) throw ShapeError("weights and scores differ in length");
            std::vector<ComponentScore> comps;
            for (std::size_t i = 0; i < weights.size(); ++i) comps.push_back({weights[i], scores[i]});
            const Aggregate a = aggregate_components(comps);
            return py::make_tuple(a.score ? py::cast(*a.score) : py::none(), a.coverage);
        },
        py::arg("weights"), py::arg("scores"),
        "Weighted mean over components with a score (None = uncovered); returns (score or None, coverage).");

    m.def(
        "neutralize_labels",
        [](const std::vector<std::pair<std::string, double>>& returns) {
            std::vector<ReturnObservation> cs;
            for (const auto& [t, r] : returns) cs.push_back({t, r});
            std::vector<std::string> out;
            for (Label l : neutralize_labels(cs)) out.emplace_back(label_name(l));
            return out;
        },
        py::arg("returns"));

    m.def("annualized_return", [](const std::vector<double>& v) { return annualized_return(v); }, py::arg("values"));
    m.def("annualized_volatility", [](const std::vector<double>& v) { return annualized_volatility(v); },
          py::arg("values"));
    m.def("sharpe", [](const std::vector<double>& v) { return sharpe(v); }, py::arg("values"));

    m.def(
        "run_cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "etfrank");
            std::vector<const char*> argv;
            for (const auto& a : args) argv.push_back(a.c_str());
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release nogil;
                code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run the command-line interface in-process; returns (exit code, stdout, stderr).");
}
