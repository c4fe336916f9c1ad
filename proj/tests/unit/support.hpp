#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "etfrank/date.hpp"
#include "etfrank/pit_store.hpp"

namespace testsupport {

namespace fs = std::filesystem;

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("etfrank_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline void write_file(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline etfrank::Date D(const char* iso) { return etfrank::Date::parse(iso); }

/// Statement with every feature set to `value`; available_from derived when
/// not given.
inline etfrank::StatementRecord statement(const std::string& ticker, etfrank::Date period_end, double value,
                                          std::optional<etfrank::Date> available = std::nullopt,
                                          const etfrank::BusinessCalendar& bd = {}) {
    etfrank::StatementRecord r;
    r.ticker = ticker;
    r.period_end = period_end;
    r.available_from = available ? *available : etfrank::derive_available_from(period_end, bd);
    for (auto& f : r.features) f = value;
    return r;
}

/// Calendar quarter ends (last calendar day) starting at `first`.
inline std::vector<etfrank::Date> quarter_ends(etfrank::Date first, std::size_t n) {
    std::vector<etfrank::Date> out;
    etfrank::Date d = etfrank::calendar_quarter_end(first);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(d);
        d = etfrank::calendar_quarter_end(d.plus_days(1));
    }
    return out;
}

/// One bar per business day in (from, to] with close = price(day index).
inline std::vector<etfrank::PriceBar> daily_bars(const std::string& ticker, etfrank::Date from_exclusive,
                                                 etfrank::Date to_inclusive, const etfrank::BusinessCalendar& bd,
                                                 const std::function<double(std::size_t)>& price,
                                                 double volume = 1000.0) {
    std::vector<etfrank::PriceBar> out;
    std::size_t i = 0;
    for (etfrank::Date d : bd.business_days(from_exclusive, to_inclusive)) {
        out.push_back({ticker, d, price(i++), volume});
    }
    return out;
}

}  // namespace testsupport
