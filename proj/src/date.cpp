#include "etfrank/date.hpp"

#include <charconv>
#include <stdexcept>

#include "etfrank/csv.hpp"
#include "etfrank/error.hpp"

namespace etfrank {

using namespace std::chrono;

Date::Date(int y, unsigned m, unsigned d) {
    year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) {
        throw std::invalid_argument("invalid calendar date");
    }
    days_ = sys_days{ymd}.time_since_epoch().count();
}

Date Date::parse(std::string_view text) {
    auto bad = [&] { return std::invalid_argument("invalid date '" + std::string(text) + "'"); };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw bad();
    }
    auto num = [&](std::size_t pos, std::size_t len) {
        int v = 0;
        auto [p, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, v);
        if (ec != std::errc{} || p != text.data() + pos + len) {
            throw bad();
        }
        return v;
    };
    const int y = num(0, 4);
    const int m = num(5, 2);
    const int d = num(8, 2);
    year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)}, std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) {
        throw bad();
    }
    return Date{sys_days{ymd}};
}

std::string Date::str() const {
    char buf[16];
    const auto v = ymd();
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(v.year()),
                  static_cast<unsigned>(v.month()), static_cast<unsigned>(v.day()));
    return buf;
}

Date calendar_quarter_end(Date d) {
    const unsigned qm = ((d.month() - 1) / 3 + 1) * 3;
    return Date{sys_days{std::chrono::year{d.year()} / std::chrono::month{qm} / last}};
}

namespace {

Date nth_weekday(int y, unsigned m, weekday wd, unsigned n) {
    return Date{sys_days{std::chrono::year{y} / std::chrono::month{m} / wd[n]}};
}

Date last_weekday(int y, unsigned m, weekday wd) {
    return Date{sys_days{std::chrono::year{y} / std::chrono::month{m} / wd[last]}};
}

Date easter_sunday(int y) {
    const int a = y % 19;
    const int b = y / 100;
    const int c = y % 100;
    const int d = b / 4;
    const int e = b % 4;
    const int f = (b + 8) / 25;
    const int g = (b - f + 1) / 3;
    const int h = (19 * a + b - d - g + 15) % 30;
    const int i = c / 4;
    const int k = c % 4;
    const int l = (32 + 2 * e + 2 * i - h - k) % 7;
    const int m = (a + 11 * h + 22 * l) / 451;
    const int month = (h + l - 7 * m + 114) / 31;
    const int day = (h + l - 7 * m + 114) % 31 + 1;
    return Date(y, static_cast<unsigned>(month), static_cast<unsigned>(day));
}

// Saturday -> Friday, Sunday -> Monday.
Date observed(Date d) {
    const weekday wd{d.sys()};
    if (wd == Saturday) return d.plus_days(-1);
    if (wd == Sunday) return d.plus_days(1);
    return d;
}

}  // namespace

std::vector<Date> us_market_holidays(int y) {
    std::vector<Date> out;
    // New Year's Day: a Saturday holiday is not moved back into the prior year.
    {
        Date ny(y, 1, 1);
        const weekday wd{ny.sys()};
        if (wd == Sunday) {
            out.push_back(ny.plus_days(1));
        } else if (wd != Saturday) {
            out.push_back(ny);
        }
    }
    if (y >= 1998) out.push_back(nth_weekday(y, 1, Monday, 3));
    out.push_back(nth_weekday(y, 2, Monday, 3));
    out.push_back(easter_sunday(y).plus_days(-2));
    out.push_back(last_weekday(y, 5, Monday));
    if (y >= 2022) out.push_back(observed(Date(y, 6, 19)));
    out.push_back(observed(Date(y, 7, 4)));
    out.push_back(nth_weekday(y, 9, Monday, 1));
    out.push_back(nth_weekday(y, 11, Thursday, 4));
    out.push_back(observed(Date(y, 12, 25)));
    return out;
}

BusinessCalendar::BusinessCalendar() {
    for (int y = 1990; y <= 2100; ++y) {
        for (Date d : us_market_holidays(y)) holidays_.insert(d);
    }
}

BusinessCalendar::BusinessCalendar(std::vector<Date> holidays)
    : holidays_(holidays.begin(), holidays.end()) {}

BusinessCalendar BusinessCalendar::from_holiday_file(const std::string& path) {
    CsvTable table = read_csv(path);
    const std::size_t col = table.require_column("date");
    std::vector<Date> days;
    for (const auto& row : table.rows) {
        try {
            days.push_back(Date::parse(row.fields[col]));
        } catch (const std::invalid_argument& e) {
            throw ParseError(path, row.line, e.what());
        }
    }
    return BusinessCalendar(std::move(days));
}

bool BusinessCalendar::is_business_day(Date d) const {
    const weekday wd{d.sys()};
    if (wd == Saturday || wd == Sunday) return false;
    return !holidays_.contains(d);
}

Date BusinessCalendar::last_business_day_of_month(int y, unsigned m) const {
    return business_day_at_or_before(Date{sys_days{std::chrono::year{y} / std::chrono::month{m} / last}});
}

Date BusinessCalendar::business_day_at_or_before(Date d) const {
    while (!is_business_day(d)) d = d.plus_days(-1);
    return d;
}

std::vector<Date> BusinessCalendar::business_days(Date from_exclusive, Date to_inclusive) const {
    std::vector<Date> out;
    for (Date d = from_exclusive.plus_days(1); d <= to_inclusive; d = d.plus_days(1)) {
        if (is_business_day(d)) out.push_back(d);
    }
    return out;
}

int BusinessCalendar::count_business_days(Date from_exclusive, Date to_inclusive) const {
    int n = 0;
    for (Date d = from_exclusive.plus_days(1); d <= to_inclusive; d = d.plus_days(1)) {
        if (is_business_day(d)) ++n;
    }
    return n;
}

std::vector<Date> BusinessCalendar::quarter_end_rebalance_dates(Date first, Date last_day) const {
    std::vector<Date> out;
    int y = first.year();
    unsigned m = ((first.month() - 1) / 3 + 1) * 3;
    while (true) {
        const Date d = last_business_day_of_month(y, m);
        if (d > last_day) break;
        if (d >= first) out.push_back(d);
        m += 3;
        if (m > 12) {
            m = 3;
            ++y;
        }
    }
    return out;
}

}  // namespace etfrank
