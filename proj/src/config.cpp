#include "etfrank/config.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

#include "etfrank/error.hpp"

namespace etfrank {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void apply_override(json& j, const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + spec + "' is not key=value");
    const std::string key = spec.substr(0, eq);
    const std::string raw = spec.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::exception&) {
        value = raw;
    }
    json* node = &j;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            break;
        }
        node = &(*node)[part];
        if (!node->is_object()) *node = json::object();
        start = dot + 1;
    }
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& section) {
    if (!j.is_object()) throw ConfigError((section.empty() ? "config" : section) + " must be an object");
    for (const auto& [key, _] : j.items()) {
        bool known = false;
        for (const char* a : allowed) known = known || key == a;
        if (!known) throw ConfigError("unknown config key '" + (section.empty() ? key : section + "." + key) + "'");
    }
}

Date get_date(const json& j, const char* key, Date fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return Date::parse(j.at(key).get<std::string>());
    } catch (const std::exception& e) {
        throw ConfigError(std::string("dates.") + key + ": " + e.what());
    }
}

std::vector<PortfolioSpec> get_specs(const json& arr, const char* what) {
    std::vector<PortfolioSpec> out;
    if (!arr.is_array()) throw ConfigError(std::string("portfolios.") + what + " must be a list");
    for (const auto& e : arr) {
        if (e.contains("top_k_count") == e.contains("top_k_percent")) {
            throw ConfigError(std::string("portfolios.") + what + ": give exactly one of top_k_count/top_k_percent");
        }
        PortfolioSpec s = e.contains("top_k_count") ? PortfolioSpec{PortfolioSpec::Mode::Count, e["top_k_count"].get<double>()}
                                                    : PortfolioSpec::top_percent(e["top_k_percent"].get<double>());
        s.validate();
        out.push_back(s);
    }
    return out;
}

}  // namespace

RunConfig RunConfig::load(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str(), fs::absolute(path).parent_path(), overrides);
}

RunConfig RunConfig::from_json_text(const std::string& text, const fs::path& base_dir,
                                    const std::vector<std::string>& overrides) {
    json j;
    try {
        j = json::parse(text);
        for (const auto& o : overrides) apply_override(j, o);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    RunConfig c;
    try {
        check_keys(j, {"paths", "dates", "train", "portfolios", "seed", "index_name", "min_coverage",
                       "max_pdf_age_days", "clip_bound", "max_imputed_frac", "cost_per_turnover"},
                   "");
        check_keys(j.value("paths", json::object()),
                   {"statements", "prices", "pdfs", "stock_universe", "etf_universe", "index", "holidays", "output"},
                   "paths");
        check_keys(j.value("dates", json::object()),
                   {"start", "train_end", "validation_end", "test_end", "backtest_start"}, "dates");
        check_keys(j.value("train", json::object()),
                   {"maxiter", "miniter", "batch_size", "save_interval", "learning_rate", "beta1", "beta2", "epsilon",
                    "bn_momentum", "selection_metric"},
                   "train");
        check_keys(j.value("portfolios", json::object()), {"stocks", "etfs"}, "portfolios");
        auto resolve = [&](const std::string& p) {
            fs::path q(p);
            return q.is_absolute() ? q : (base_dir / q).lexically_normal();
        };
        const json paths = j.value("paths", json::object());
        auto req = [&](const char* key) {
            if (!paths.contains(key)) throw ConfigError(std::string("missing paths.") + key);
            return resolve(paths.at(key).get<std::string>());
        };
        auto opt = [&](const char* key) -> std::optional<fs::path> {
            if (!paths.contains(key) || paths.at(key).is_null()) return std::nullopt;
            return resolve(paths.at(key).get<std::string>());
        };
        c.paths.statements = req("statements");
        c.paths.prices = req("prices");
        c.paths.output = req("output");
        c.paths.pdfs = opt("pdfs");
        c.paths.stock_universe = opt("stock_universe");
        c.paths.etf_universe = opt("etf_universe");
        c.paths.index = opt("index");
        c.paths.holidays = opt("holidays");

        const json dates = j.value("dates", json::object());
        c.dates.start = get_date(dates, "start", c.dates.start);
        c.dates.train_end = get_date(dates, "train_end", c.dates.train_end);
        c.dates.validation_end = get_date(dates, "validation_end", c.dates.validation_end);
        c.dates.test_end = get_date(dates, "test_end", c.dates.test_end);
        if (dates.contains("backtest_start")) c.backtest_start = get_date(dates, "backtest_start", Date{});

        const json t = j.value("train", json::object());
        c.train.maxiter = t.value("maxiter", c.train.maxiter);
        c.train.miniter = t.value("miniter", c.train.miniter);
        c.train.batch_size = t.value("batch_size", c.train.batch_size);
        c.train.save_interval = t.value("save_interval", c.train.save_interval);
        c.train.adam.learning_rate = t.value("learning_rate", c.train.adam.learning_rate);
        c.train.adam.beta1 = t.value("beta1", c.train.adam.beta1);
        c.train.adam.beta2 = t.value("beta2", c.train.adam.beta2);
        c.train.adam.epsilon = t.value("epsilon", c.train.adam.epsilon);
        c.train.bn_momentum = t.value("bn_momentum", c.train.bn_momentum);
        if (t.contains("selection_metric")) {
            c.train.selection_metric = nn::parse_metric(t.at("selection_metric").get<std::string>());
        }

        const json pf = j.value("portfolios", json::object());
        if (pf.contains("stocks")) c.stock_portfolios = get_specs(pf.at("stocks"), "stocks");
        if (pf.contains("etfs")) c.etf_portfolios = get_specs(pf.at("etfs"), "etfs");

        c.seed = j.value("seed", c.seed);
        c.index_name = j.value("index_name", c.index_name);
        c.min_coverage = j.value("min_coverage", c.min_coverage);
        c.max_pdf_age_days = j.value("max_pdf_age_days", c.max_pdf_age_days);
        c.clip_bound = j.value("clip_bound", c.clip_bound);
        c.max_imputed_frac = j.value("max_imputed_frac", c.max_imputed_frac);
        c.cost_per_turnover = j.value("cost_per_turnover", c.cost_per_turnover);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

void RunConfig::validate() const {
    auto must_exist = [](const fs::path& p, const char* what) {
        if (!fs::exists(p)) throw ConfigError(std::string(what) + " path does not exist: " + p.string());
    };
    must_exist(paths.statements, "statements");
    must_exist(paths.prices, "prices");
    if (paths.pdfs) must_exist(*paths.pdfs, "pdfs");
    if (paths.stock_universe) must_exist(*paths.stock_universe, "stock_universe");
    if (paths.etf_universe) must_exist(*paths.etf_universe, "etf_universe");
    if (paths.index) must_exist(*paths.index, "index");
    if (paths.holidays) must_exist(*paths.holidays, "holidays");
    if (paths.output.empty()) throw ConfigError("paths.output is empty");
    if (paths.pdfs.has_value() != paths.etf_universe.has_value()) {
        throw ConfigError("paths.pdfs and paths.etf_universe must be given together");
    }

    if (!(dates.start < dates.train_end && dates.train_end < dates.validation_end &&
          dates.validation_end <= dates.test_end)) {
        throw ConfigError("split boundaries must satisfy start < train_end < validation_end <= test_end");
    }
    if (backtest_start && (*backtest_start < dates.validation_end || dates.test_end < *backtest_start)) {
        throw ConfigError("dates.backtest_start must lie inside the test split");
    }
    train.validate();
    for (const auto& s : stock_portfolios) s.validate();
    for (const auto& s : etf_portfolios) s.validate();
    if (!(min_coverage > 0.0 && min_coverage <= 1.0)) throw ConfigError("min_coverage must lie in (0, 1]");
    if (max_pdf_age_days < 0) throw ConfigError("max_pdf_age_days must be >= 0");
    if (!(clip_bound > 0.0)) throw ConfigError("clip_bound must be > 0");
    if (!(max_imputed_frac >= 0.0 && max_imputed_frac <= 1.0)) throw ConfigError("max_imputed_frac must lie in [0, 1]");
    if (!(cost_per_turnover >= 0.0 && cost_per_turnover < 1.0)) throw ConfigError("cost_per_turnover must lie in [0, 1)");
}

}  // namespace etfrank
